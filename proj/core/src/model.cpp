#include "flowal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "flowal/util.hpp"

namespace flowal {

int ClassProbabilities::argmax() const {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

bool is_valid_distribution(const ClassProbabilities& p, double tolerance) {
  if (p.probs.empty()) return false;
  double sum = 0.0;
  for (double x : p.probs) {
    if (!(x >= 0.0 && x <= 1.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

void EnsembleConfig::validate() const {
  if (num_members < 1) throw Error(Errc::config_error, "num_members must be >= 1");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0))
    throw Error(Errc::config_error, "feature_subsample must be in (0,1]");
  if (min_samples_split < 2) throw Error(Errc::config_error, "min_samples_split must be >= 2");
}

const std::vector<double>& EnsembleClassifier::Tree::predict(const std::vector<double>& x) const {
  int idx = 0;
  while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
    const Node& node = nodes[static_cast<std::size_t>(idx)];
    idx = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(idx)].leaf;
}

namespace {

using Tree = EnsembleClassifier::Tree;
using Node = EnsembleClassifier::Node;

struct TreeBuilder {
  const std::vector<const LabeledExample*>& data;
  std::size_t num_classes;
  std::size_t dim;
  const EnsembleConfig& config;
  std::mt19937_64& rng;
  std::vector<Node> nodes;

  std::vector<double> class_histogram(const std::vector<std::uint32_t>& indices) const {
    std::vector<double> hist(num_classes, 0.0);
    for (std::uint32_t i : indices)
      hist[static_cast<std::size_t>(data[i]->label.class_id)] += 1.0;
    return hist;
  }

  static double gini(const std::vector<double>& hist, double total) {
    if (total <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (double c : hist) sum_sq += c * c;
    return 1.0 - sum_sq / (total * total);
  }

  int make_leaf(const std::vector<std::uint32_t>& indices) {
    std::vector<double> hist = class_histogram(indices);
    double total = static_cast<double>(indices.size());
    for (double& c : hist) c /= total;
    Node node;
    node.leaf = std::move(hist);
    nodes.push_back(std::move(node));
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::vector<std::uint32_t>& indices, std::size_t depth) {
    std::vector<double> hist = class_histogram(indices);
    const double total = static_cast<double>(indices.size());
    const bool pure = std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0; }) <= 1;
    if (pure || depth >= config.max_depth || indices.size() < config.min_samples_split)
      return make_leaf(indices);

    const std::size_t features_to_try = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(config.feature_subsample * static_cast<double>(dim))));

    std::vector<std::uint32_t> feature_pool(dim);
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
    // Partial Fisher-Yates: first features_to_try entries are the candidates.
    for (std::size_t i = 0; i < features_to_try; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, dim - 1);
      std::swap(feature_pool[i], feature_pool[pick(rng)]);
    }

    const double parent_impurity = gini(hist, total);
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;

    std::vector<std::uint32_t> order(indices);
    std::vector<double> left_hist(num_classes);
    for (std::size_t f = 0; f < features_to_try; ++f) {
      const std::size_t feature = feature_pool[f];
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        double va = data[a]->features.values[feature];
        double vb = data[b]->features.values[feature];
        if (va != vb) return va < vb;
        return a < b;
      });

      std::fill(left_hist.begin(), left_hist.end(), 0.0);
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_hist[static_cast<std::size_t>(data[order[i]]->label.class_id)] += 1.0;
        const double v = data[order[i]]->features.values[feature];
        const double v_next = data[order[i + 1]]->features.values[feature];
        if (v == v_next) continue;

        const double n_left = static_cast<double>(i + 1);
        const double n_right = total - n_left;
        double left_sq = 0.0;
        for (double c : left_hist) left_sq += c * c;
        double right_sq = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
          const double rc = hist[c] - left_hist[c];
          right_sq += rc * rc;
        }
        const double impurity = (n_left / total) * (1.0 - left_sq / (n_left * n_left)) +
                                (n_right / total) * (1.0 - right_sq / (n_right * n_right));
        const double gain = parent_impurity - impurity;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = static_cast<int>(feature);
          best_threshold = v + (v_next - v) / 2.0;
        }
      }
    }

    if (best_feature < 0) return make_leaf(indices);

    std::vector<std::uint32_t> left_idx, right_idx;
    for (std::uint32_t i : indices) {
      if (data[i]->features.values[static_cast<std::size_t>(best_feature)] <= best_threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return make_leaf(indices);

    Node node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(node);
    const int self = static_cast<int>(nodes.size() - 1);
    const int left = build(left_idx, depth + 1);
    const int right = build(right_idx, depth + 1);
    nodes[static_cast<std::size_t>(self)].left = left;
    nodes[static_cast<std::size_t>(self)].right = right;
    return self;
  }
};

Tree train_member(const std::vector<const LabeledExample*>& data, std::size_t num_classes,
                  std::size_t dim, const EnsembleConfig& config, std::uint64_t member_seed) {
  std::mt19937_64 rng(member_seed);
  std::vector<std::uint32_t> bootstrap(data.size());
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(data.size() - 1));
  for (auto& idx : bootstrap) idx = pick(rng);

  TreeBuilder builder{data, num_classes, dim, config, rng, {}};
  builder.build(bootstrap, 0);
  return Tree{std::move(builder.nodes)};
}

}  // namespace

EnsembleClassifier::EnsembleClassifier(std::vector<Tree> members, std::size_t num_classes,
                                       std::size_t feature_dim, EnsembleConfig config)
    : members_(std::move(members)),
      num_classes_(num_classes),
      feature_dim_(feature_dim),
      config_(config) {}

void EnsembleClassifier::check_dimension(const FeatureVector& x) const {
  if (x.values.size() != feature_dim_)
    throw Error(Errc::dimension_mismatch, "expected dimension " + std::to_string(feature_dim_) +
                                              ", got " + std::to_string(x.values.size()));
}

ClassProbabilities EnsembleClassifier::predict_proba(const FeatureVector& x) const {
  check_dimension(x);
  ClassProbabilities out;
  out.probs.assign(num_classes_, 0.0);
  for (const Tree& tree : members_) {
    const std::vector<double>& leaf = tree.predict(x.values);
    for (std::size_t c = 0; c < num_classes_; ++c) out.probs[c] += leaf[c];
  }
  const double m = static_cast<double>(members_.size());
  for (double& p : out.probs) p /= m;
  return out;
}

std::vector<ClassProbabilities> EnsembleClassifier::committee_predict(
    const FeatureVector& x) const {
  check_dimension(x);
  std::vector<ClassProbabilities> out;
  out.reserve(members_.size());
  for (const Tree& tree : members_) {
    out.push_back(ClassProbabilities{tree.predict(x.values)});
  }
  return out;
}

nlohmann::json EnsembleClassifier::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const Tree& tree : members_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& node : tree.nodes) {
      nodes.push_back({{"f", node.feature},
                       {"t", node.threshold},
                       {"l", node.left},
                       {"r", node.right},
                       {"p", node.leaf}});
    }
    members.push_back(std::move(nodes));
  }
  return nlohmann::json{{"family", family()},
                        {"num_classes", num_classes_},
                        {"feature_dim", feature_dim_},
                        {"config",
                         {{"num_members", config_.num_members},
                          {"max_depth", config_.max_depth},
                          {"min_samples_split", config_.min_samples_split},
                          {"feature_subsample", config_.feature_subsample},
                          {"rng_seed", config_.rng_seed}}},
                        {"members", std::move(members)}};
}

std::shared_ptr<const EnsembleClassifier> EnsembleClassifier::from_json(const nlohmann::json& j) {
  EnsembleConfig config;
  const auto& jc = j.at("config");
  config.num_members = jc.at("num_members").get<std::size_t>();
  config.max_depth = jc.at("max_depth").get<std::size_t>();
  config.min_samples_split = jc.at("min_samples_split").get<std::size_t>();
  config.feature_subsample = jc.at("feature_subsample").get<double>();
  config.rng_seed = jc.at("rng_seed").get<std::uint64_t>();

  std::vector<Tree> members;
  for (const auto& jtree : j.at("members")) {
    Tree tree;
    for (const auto& jnode : jtree) {
      Node node;
      node.feature = jnode.at("f").get<int>();
      node.threshold = jnode.at("t").get<double>();
      node.left = jnode.at("l").get<int>();
      node.right = jnode.at("r").get<int>();
      node.leaf = jnode.at("p").get<std::vector<double>>();
      tree.nodes.push_back(std::move(node));
    }
    members.push_back(std::move(tree));
  }
  return std::make_shared<const EnsembleClassifier>(std::move(members),
                                                    j.at("num_classes").get<std::size_t>(),
                                                    j.at("feature_dim").get<std::size_t>(), config);
}

ModelSnapshot train(const Dataset& dataset, const EnsembleConfig& config, double trained_at) {
  config.validate();
  if (dataset.distinct_classes() < 2)
    throw Error(Errc::insufficient_classes,
                "training needs at least 2 classes, dataset has " +
                    std::to_string(dataset.distinct_classes()));

  std::vector<const LabeledExample*> data;
  data.reserve(dataset.size());
  for (const auto& ex : dataset.examples()) data.push_back(&ex);
  const std::size_t dim = data.front()->features.dimension();

  std::vector<Tree> members;
  members.reserve(config.num_members);
  for (std::size_t m = 0; m < config.num_members; ++m) {
    members.push_back(train_member(data, dataset.num_classes(), dim, config,
                                   mix_seed(config.rng_seed, "member", m)));
  }

  ModelSnapshot snapshot;
  snapshot.generation = dataset.generation();
  snapshot.model = std::make_shared<const EnsembleClassifier>(std::move(members),
                                                              dataset.num_classes(), dim, config);
  snapshot.trained_at = trained_at;
  return snapshot;
}

std::shared_ptr<const Classifier> classifier_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "ensemble") return EnsembleClassifier::from_json(j);
  throw Error(Errc::corrupt_checkpoint, "unknown model family '" + family + "'");
}

}  // namespace flowal
