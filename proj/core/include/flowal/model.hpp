#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "flowal/types.hpp"

namespace flowal {

/// Per-class probability estimate; entries in [0,1], sum 1 within 1e-9.
struct ClassProbabilities {
  std::vector<double> probs;

  std::size_t num_classes() const { return probs.size(); }
  int argmax() const;  // ties break toward the lower class id
};

/// True iff p is a well-formed distribution.
bool is_valid_distribution(const ClassProbabilities& p, double tolerance = 1e-9);

struct EnsembleConfig {
  std::size_t num_members = 10;
  std::size_t max_depth = 12;
  std::size_t min_samples_split = 2;
  double feature_subsample = 0.7;  // fraction of features considered per split
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Prediction interface the strategies and the engine run against. Snapshots
/// are immutable after training and safe to share across threads.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual std::size_t num_members() const = 0;

  /// Mean of the committee members' class distributions.
  virtual ClassProbabilities predict_proba(const FeatureVector& x) const = 0;

  /// One distribution per committee member; averaging them reproduces
  /// predict_proba exactly.
  virtual std::vector<ClassProbabilities> committee_predict(const FeatureVector& x) const = 0;

  virtual nlohmann::json to_json() const = 0;
  virtual std::string family() const = 0;
};

/// Bagged ensemble of randomized CART trees. Each member trains on a
/// bootstrap resample and considers a random feature subset at every split;
/// leaves store the raw class frequencies of the training samples that
/// reached them, so a pure region yields an exact one-hot distribution.
class EnsembleClassifier : public Classifier {
 public:
  struct Node {
    int feature = -1;          // -1 marks a leaf
    double threshold = 0.0;    // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    std::vector<double> leaf;  // class distribution, leaves only
  };

  struct Tree {
    std::vector<Node> nodes;
    const std::vector<double>& predict(const std::vector<double>& x) const;
  };

  EnsembleClassifier(std::vector<Tree> members, std::size_t num_classes, std::size_t feature_dim,
                     EnsembleConfig config);

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t feature_dim() const override { return feature_dim_; }
  std::size_t num_members() const override { return members_.size(); }

  ClassProbabilities predict_proba(const FeatureVector& x) const override;
  std::vector<ClassProbabilities> committee_predict(const FeatureVector& x) const override;

  nlohmann::json to_json() const override;
  std::string family() const override { return "ensemble"; }

  static std::shared_ptr<const EnsembleClassifier> from_json(const nlohmann::json& j);

 private:
  void check_dimension(const FeatureVector& x) const;

  std::vector<Tree> members_;
  std::size_t num_classes_;
  std::size_t feature_dim_;
  EnsembleConfig config_;
};

/// Trains a fresh ensemble on the dataset (models are rebuilt from scratch
/// every generation, never updated incrementally). Deterministic for a fixed
/// config seed. Throws InsufficientClasses when fewer than two classes are
/// present, which the engine treats as "keep annotating, skip training".
ModelSnapshot train(const Dataset& dataset, const EnsembleConfig& config, double trained_at = 0.0);

/// Restores a classifier serialized with Classifier::to_json.
std::shared_ptr<const Classifier> classifier_from_json(const nlohmann::json& j);

}  // namespace flowal
