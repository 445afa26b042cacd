#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "flowal/error.hpp"

namespace flowal {

class Classifier;  // defined in model.hpp

/// Raw field of a flow record as it arrived from the source. CSV input keeps
/// text; programmatically built records may carry numbers directly.
using FieldValue = std::variant<double, std::string>;

/// One raw network-flow observation. Fields are an insertion-ordered list of
/// (name, value) pairs so corpora with different columns work unchanged.
/// ground_truth carries the hidden label of offline corpora; it is consumed
/// only by annotators and evaluation, never by the feature path.
struct FlowRecord {
  std::uint64_t record_id = 0;
  std::vector<std::pair<std::string, FieldValue>> fields;
  std::optional<std::string> ground_truth;

  const FieldValue* find_field(std::string_view name) const {
    for (const auto& [key, value] : fields) {
      if (key == name) return &value;
    }
    return nullptr;
  }
};

struct Label {
  int class_id = -1;
  std::string name;

  friend bool operator==(const Label& a, const Label& b) {
    return a.class_id == b.class_id && a.name == b.name;
  }
};

/// Fixed set of classes for a run. Class ids are dense indices in declaration
/// order; names seen in input that are not registered here are a hard error.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<int> find(std::string_view name) const;
  Label label(int class_id) const;

  /// Resolves or throws Errc::unknown_label.
  Label resolve(std::string_view name) const;

 private:
  std::vector<std::string> names_;
};

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t record_id = 0;

  std::size_t dimension() const { return values.size(); }
};

/// Throws Errc::dimension_mismatch or Errc::non_finite_value.
void validate_feature_vector(const FeatureVector& v, std::size_t expected_dim);

enum class Provenance { initial, annotated, relabeled };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view text);

struct LabeledExample {
  FeatureVector features;
  Label label;
  Provenance provenance = Provenance::annotated;
  std::int64_t generation_added = 0;
};

/// Generation-indexed training set. Mutated only by the engine (single
/// writer); class_counts is maintained on every mutation and must always
/// equal a recount over the examples.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t num_classes) : class_counts_(num_classes, 0) {}

  std::int64_t generation() const { return generation_; }
  void set_generation(std::int64_t g) { generation_ = g; }

  std::size_t num_classes() const { return class_counts_.size(); }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  const std::vector<LabeledExample>& examples() const { return examples_; }
  const std::vector<std::size_t>& class_counts() const { return class_counts_; }

  void add(LabeledExample example);

  /// Swaps in a new example list (balancing/capping); counts are rebuilt.
  void replace_examples(std::vector<LabeledExample> examples);

  std::size_t distinct_classes() const;

  /// Recount from scratch; true iff it matches the maintained counts.
  bool counts_consistent() const;

  /// In-place label rewrite used by the relabel path. Marks provenance.
  void relabel_example(std::size_t index, const Label& new_label);

 private:
  std::int64_t generation_ = 0;
  std::vector<LabeledExample> examples_;
  std::vector<std::size_t> class_counts_;
};

/// Trained classifier paired with the dataset generation it was trained on.
/// trained_at is seconds on the engine clock (wall time online, stream
/// position offline).
struct ModelSnapshot {
  std::int64_t generation = -1;
  std::shared_ptr<const Classifier> model;
  double trained_at = 0.0;

  bool valid() const { return model != nullptr; }
};

/// Row = true class, column = predicted class.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t num_classes)
      : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return num_classes_; }

  std::uint64_t at(std::size_t true_class, std::size_t predicted) const {
    return counts_[true_class * num_classes_ + predicted];
  }
  void add(std::size_t true_class, std::size_t predicted, std::uint64_t n = 1) {
    counts_[true_class * num_classes_ + predicted] += n;
  }

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t true_class) const;
  std::uint64_t col_sum(std::size_t predicted) const;

 private:
  std::size_t num_classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// One monitoring row per lane per loop iteration. Metric fields are absent
/// when the loop had no model or no evaluation labels yet.
struct MetricsRecord {
  std::int64_t generation = 0;
  std::string strategy_name;
  std::optional<double> mcc;
  std::optional<double> f1;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  double query_time_seconds = 0.0;
  std::uint64_t dataset_size = 0;
  std::uint64_t annotations_spent = 0;
  std::uint64_t records_dropped = 0;
  std::uint64_t abstentions = 0;
  double timestamp = 0.0;
};

}  // namespace flowal
