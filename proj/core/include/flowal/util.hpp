#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace flowal {

// Deterministic seed derivation. Every random decision in a run draws from
// an engine derived as mix_seed(base, purpose_tag, counter), so restarting
// from a checkpoint reproduces the exact stream of decisions without
// serializing every generator.
std::uint64_t mix_seed(std::uint64_t base, std::string_view tag, std::uint64_t counter);

inline std::mt19937_64 make_rng(std::uint64_t base, std::string_view tag, std::uint64_t counter) {
  return std::mt19937_64(mix_seed(base, tag, counter));
}

// Shortest round-trip decimal form (std::to_chars). Parsing the result with
// parse_double gives back the identical bit pattern, which checkpoint and
// metrics round-trips rely on.
std::string format_double(double value);

// Strict full-string parse; returns false when the text is not a number.
bool try_parse_double(std::string_view text, double& out);

std::string serialize_rng(const std::mt19937_64& rng);
std::mt19937_64 deserialize_rng(const std::string& text);

// Plain comma split, no quoting. The CSV dialect used throughout is
// comma-separated UTF-8 with no quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);
std::string join_csv_line(const std::vector<std::string>& fields);

std::vector<std::string> split_list(std::string_view text, char sep = ',');
std::string trim(std::string_view text);

}  // namespace flowal
