#include "flowal/types.hpp"

#include <cmath>
#include <numeric>
#include <set>

namespace flowal {

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string_view> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw Error(Errc::config_error, "empty label name");
    if (!seen.insert(name).second)
      throw Error(Errc::config_error, "duplicate label name '" + name + "'");
  }
}

std::optional<int> LabelSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

Label LabelSpace::label(int class_id) const {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= names_.size())
    throw Error(Errc::unknown_label, "class id " + std::to_string(class_id) + " out of range");
  return Label{class_id, names_[static_cast<std::size_t>(class_id)]};
}

Label LabelSpace::resolve(std::string_view name) const {
  if (auto id = find(name)) return label(*id);
  throw Error(Errc::unknown_label, "label '" + std::string(name) + "' is not configured");
}

void validate_feature_vector(const FeatureVector& v, std::size_t expected_dim) {
  if (v.values.size() != expected_dim) {
    throw Error(Errc::dimension_mismatch,
                "expected dimension " + std::to_string(expected_dim) + ", got " +
                    std::to_string(v.values.size()));
  }
  for (double x : v.values) {
    if (!std::isfinite(x))
      throw Error(Errc::non_finite_value,
                  "record " + std::to_string(v.record_id) + " has a non-finite feature");
  }
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::initial: return "initial";
    case Provenance::annotated: return "annotated";
    case Provenance::relabeled: return "relabeled";
  }
  return "annotated";
}

Provenance provenance_from_string(std::string_view text) {
  if (text == "initial") return Provenance::initial;
  if (text == "annotated") return Provenance::annotated;
  if (text == "relabeled") return Provenance::relabeled;
  throw Error(Errc::corrupt_checkpoint, "bad provenance '" + std::string(text) + "'");
}

void Dataset::add(LabeledExample example) {
  const int id = example.label.class_id;
  if (id < 0 || static_cast<std::size_t>(id) >= class_counts_.size())
    throw Error(Errc::unknown_label, "class id " + std::to_string(id) + " out of range");
  class_counts_[static_cast<std::size_t>(id)] += 1;
  examples_.push_back(std::move(example));
}

void Dataset::replace_examples(std::vector<LabeledExample> examples) {
  std::fill(class_counts_.begin(), class_counts_.end(), 0);
  for (const auto& ex : examples) {
    const int id = ex.label.class_id;
    if (id < 0 || static_cast<std::size_t>(id) >= class_counts_.size())
      throw Error(Errc::unknown_label, "class id " + std::to_string(id) + " out of range");
    class_counts_[static_cast<std::size_t>(id)] += 1;
  }
  examples_ = std::move(examples);
}

std::size_t Dataset::distinct_classes() const {
  std::size_t n = 0;
  for (std::size_t c : class_counts_) {
    if (c > 0) ++n;
  }
  return n;
}

bool Dataset::counts_consistent() const {
  std::vector<std::size_t> recount(class_counts_.size(), 0);
  for (const auto& ex : examples_) {
    const int id = ex.label.class_id;
    if (id < 0 || static_cast<std::size_t>(id) >= recount.size()) return false;
    recount[static_cast<std::size_t>(id)] += 1;
  }
  return recount == class_counts_;
}

void Dataset::relabel_example(std::size_t index, const Label& new_label) {
  LabeledExample& ex = examples_.at(index);
  class_counts_.at(static_cast<std::size_t>(ex.label.class_id)) -= 1;
  class_counts_.at(static_cast<std::size_t>(new_label.class_id)) += 1;
  ex.label = new_label;
  ex.provenance = Provenance::relabeled;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_class) const {
  std::uint64_t sum = 0;
  for (std::size_t p = 0; p < num_classes_; ++p) sum += at(true_class, p);
  return sum;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t sum = 0;
  for (std::size_t t = 0; t < num_classes_; ++t) sum += at(t, predicted);
  return sum;
}

}  // namespace flowal
