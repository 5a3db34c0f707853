#pragma once

// Random forest over 10x10 EEG frames (100 channel-major features).
//
// Trees are grown on bootstrap resamples with Gini splits over a random
// feature subset per node. Tree t draws from its own SplitMix64 stream
// seeded with derive_stream_seed(seed, t), so the model is a pure function
// of (dataset order, hyperparameters).
//
// Model file (all integers little-endian):
//
//   "NF0F"  u8 version=1
//   u32 n_estimators  u32 min_samples_leaf  u32 min_samples_split
//   u32 max_features  u8 bootstrap  u64 seed
//   u32 n_trees, then per tree:
//     u32 n_nodes, then per node:
//       u8 kind=0 (split): u16 feature, f64 threshold, u32 left, u32 right
//       u8 kind=1 (leaf):  u32 class_counts[10]

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eegf0/error.hpp"
#include "eegf0/rng.hpp"
#include "eegf0/signal.hpp"

namespace eegf0 {

struct ForestHyperparams {
  std::uint32_t n_estimators = 10;
  std::uint32_t min_samples_leaf = 1;
  std::uint32_t min_samples_split = 2;
  std::uint64_t seed = 42;
  std::uint32_t max_features = 10;  // floor(sqrt(100))
  bool bootstrap = true;

  void validate() const {
    if (n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
    if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    if (max_features < 1 || max_features > kFrameFeatures) {
      throw std::invalid_argument("max_features must be in 1..100");
    }
  }

  friend bool operator==(const ForestHyperparams&, const ForestHyperparams&) = default;
};

using ClassCounts = std::array<std::uint32_t, kNumClasses>;
using Votes = std::array<std::uint32_t, kNumClasses>;

/// Index of the largest count; lowest class wins ties.
inline ActivationClass plurality(std::span<const std::uint32_t, kNumClasses> counts) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumClasses; ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return ActivationClass::from_index(static_cast<int>(best) + 1);
}

class DecisionTree {
 public:
  struct Node {
    bool is_leaf = true;
    std::uint16_t feature = 0;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    ClassCounts counts{};

    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  /// Leaf reached by `features` (x <= threshold goes left).
  const Node& leaf_for(std::span<const double, kFrameFeatures> features) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf) {
      i = features[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    }
    return nodes_[i];
  }

  ActivationClass predict(std::span<const double, kFrameFeatures> features) const {
    return plurality(leaf_for(features).counts);
  }

  std::size_t depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t depth_from(std::size_t i) const {
    if (nodes_[i].is_leaf) return 0;
    return 1 + std::max(depth_from(nodes_[i].left), depth_from(nodes_[i].right));
  }

  std::vector<Node> nodes_;
};

struct ForestPrediction {
  ActivationClass cls;
  Votes votes{};
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(ForestHyperparams hp, std::vector<DecisionTree> trees)
      : hp_(hp), trees_(std::move(trees)) {}

  const ForestHyperparams& hyperparams() const noexcept { return hp_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  bool trained() const noexcept { return !trees_.empty(); }

  ForestPrediction predict(const EegFrame& frame) const {
    if (!trained()) throw ModelError("model is not trained");
    ForestPrediction p;
    for (const auto& tree : trees_) ++p.votes[tree.predict(frame.features()).index() - 1];
    p.cls = plurality(p.votes);
    return p;
  }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;

 private:
  ForestHyperparams hp_{};
  std::vector<DecisionTree> trees_;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const LabeledDataset& ds, const ForestHyperparams& hp, SplitMix64& rng)
      : ds_(ds), hp_(hp), rng_(rng) {}

  DecisionTree build(std::vector<std::uint32_t> rows) {
    grow(std::move(rows));
    return DecisionTree(std::move(nodes_));
  }

 private:
  struct Split {
    std::uint16_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;  // sum over children of n * gini
  };

  double feature(std::uint32_t row, std::size_t f) const { return ds_.frames[row].values()[f]; }
  std::size_t label(std::uint32_t row) const {
    return static_cast<std::size_t>(ds_.labels[row].index() - 1);
  }

  static double weighted_gini(const ClassCounts& c, double n) noexcept {
    double sq = 0.0;
    for (auto v : c) sq += static_cast<double>(v) * static_cast<double>(v);
    return n - sq / n;
  }

  std::uint32_t grow(std::vector<std::uint32_t> rows) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    ClassCounts counts{};
    for (auto r : rows) ++counts[label(r)];
    nodes_[id].counts = counts;

    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || rows.size() < hp_.min_samples_split) return id;

    const auto split = best_split(rows, counts);
    if (!split) return id;

    std::vector<std::uint32_t> left, right;
    for (auto r : rows) (feature(r, split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const auto l = grow(std::move(left));
    const auto r = grow(std::move(right));
    auto& node = nodes_[id];
    node.is_leaf = false;
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    node.counts = {};  // only leaves carry counts, matching the model file
    return id;
  }

  // Features are drawn without replacement. The search inspects at least
  // max_features of them and keeps going past that until some valid split
  // turns up (or every feature has been tried).
  std::optional<Split> best_split(const std::vector<std::uint32_t>& rows,
                                  const ClassCounts& counts) {
    std::array<std::uint16_t, kFrameFeatures> order{};
    std::iota(order.begin(), order.end(), std::uint16_t{0});

    const std::size_t n = rows.size();
    const auto nd = static_cast<double>(n);
    std::optional<Split> best;
    std::vector<std::pair<double, std::size_t>> column(n);

    for (std::size_t i = 0; i < kFrameFeatures; ++i) {
      if (i >= hp_.max_features && best) break;
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(kFrameFeatures - i));
      std::swap(order[i], order[j]);
      const std::uint16_t f = order[i];

      for (std::size_t k = 0; k < n; ++k) column[k] = {feature(rows[k], f), label(rows[k])};
      std::sort(column.begin(), column.end());

      ClassCounts left{};
      ClassCounts right = counts;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ++left[column[k].second];
        --right[column[k].second];
        const std::size_t n_left = k + 1;
        if (!(column[k].first < column[k + 1].first)) continue;
        if (n_left < hp_.min_samples_leaf || n - n_left < hp_.min_samples_leaf) continue;
        const double score = weighted_gini(left, static_cast<double>(n_left)) +
                             weighted_gini(right, nd - static_cast<double>(n_left));
        if (!best || score < best->score) {
          const double lo = column[k].first;
          const double hi = column[k + 1].first;
          double thr = lo + (hi - lo) * 0.5;
          if (!(thr < hi)) thr = lo;
          best = Split{f, thr, score};
        }
      }
    }
    return best;
  }

  const LabeledDataset& ds_;
  const ForestHyperparams& hp_;
  SplitMix64& rng_;
  std::vector<DecisionTree::Node> nodes_;
};

}  // namespace detail

inline ForestModel train(const LabeledDataset& ds, const ForestHyperparams& hp = {}) {
  hp.validate();
  ds.validate();
  if (ds.empty()) throw DataError("cannot train on an empty dataset");
  if (ds.size() > UINT32_MAX) throw DataError("dataset too large");

  const auto n = static_cast<std::uint32_t>(ds.size());
  std::vector<DecisionTree> trees;
  trees.reserve(hp.n_estimators);
  for (std::uint32_t t = 0; t < hp.n_estimators; ++t) {
    SplitMix64 rng(derive_stream_seed(hp.seed, t));
    std::vector<std::uint32_t> rows(n);
    if (hp.bootstrap) {
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), 0U);
    }
    trees.push_back(detail::TreeBuilder(ds, hp, rng).build(std::move(rows)));
  }
  return ForestModel(hp, std::move(trees));
}

inline ForestPrediction predict(const ForestModel& model, const EegFrame& frame) {
  return model.predict(frame);
}

inline std::vector<ActivationClass> predict_trajectory(const ForestModel& model,
                                                       std::span<const EegFrame> frames) {
  std::vector<ActivationClass> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(model.predict(f).cls);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::array<char, 4> kModelMagic{'N', 'F', '0', 'F'};
inline constexpr std::uint8_t kModelVersion = 1;

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    using U = std::make_unsigned_t<T>;
    auto bits = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<char>(bits & 0xFF));
      if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
    }
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_raw(std::span<const char> raw) { bytes_.append(raw.begin(), raw.end()); }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::make_unsigned_t<T>>(
          static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i]))
          << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string_view get_raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ModelError("corrupt model file: truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const ForestModel& model) {
  if (!model.trained()) throw ModelError("model is not trained");
  detail::ByteWriter w;
  w.put_raw(kModelMagic);
  w.put(kModelVersion);
  const auto& hp = model.hyperparams();
  w.put(hp.n_estimators);
  w.put(hp.min_samples_leaf);
  w.put(hp.min_samples_split);
  w.put(hp.max_features);
  w.put(static_cast<std::uint8_t>(hp.bootstrap ? 1 : 0));
  w.put(hp.seed);
  w.put(static_cast<std::uint32_t>(model.trees().size()));
  for (const auto& tree : model.trees()) {
    w.put(static_cast<std::uint32_t>(tree.nodes().size()));
    for (const auto& node : tree.nodes()) {
      w.put(static_cast<std::uint8_t>(node.is_leaf ? 1 : 0));
      if (node.is_leaf) {
        for (auto c : node.counts) w.put(c);
      } else {
        w.put(node.feature);
        w.put_f64(node.threshold);
        w.put(node.left);
        w.put(node.right);
      }
    }
  }
  return w.take();
}

inline ForestModel deserialize_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kModelMagic.size() ||
      r.get_raw(kModelMagic.size()) != std::string_view(kModelMagic.data(), kModelMagic.size())) {
    throw ModelError("corrupt model file: bad magic");
  }
  const auto version = r.get<std::uint8_t>();
  if (version != kModelVersion) {
    throw FormatVersionError("unsupported model format version " + std::to_string(version));
  }
  ForestHyperparams hp;
  hp.n_estimators = r.get<std::uint32_t>();
  hp.min_samples_leaf = r.get<std::uint32_t>();
  hp.min_samples_split = r.get<std::uint32_t>();
  hp.max_features = r.get<std::uint32_t>();
  const auto bootstrap = r.get<std::uint8_t>();
  if (bootstrap > 1) throw ModelError("corrupt model file: bad bootstrap flag");
  hp.bootstrap = bootstrap == 1;
  hp.seed = r.get<std::uint64_t>();
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("corrupt model file: ") + e.what());
  }

  const auto n_trees = r.get<std::uint32_t>();
  if (n_trees != hp.n_estimators) throw ModelError("corrupt model file: tree count mismatch");
  std::vector<DecisionTree> trees;
  trees.reserve(n_trees);
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    const auto n_nodes = r.get<std::uint32_t>();
    if (n_nodes == 0) throw ModelError("corrupt model file: empty tree");
    std::vector<DecisionTree::Node> nodes;
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
      DecisionTree::Node node;
      const auto kind = r.get<std::uint8_t>();
      if (kind == 1) {
        for (auto& c : node.counts) c = r.get<std::uint32_t>();
      } else if (kind == 0) {
        node.is_leaf = false;
        node.feature = r.get<std::uint16_t>();
        node.threshold = r.get_f64();
        node.left = r.get<std::uint32_t>();
        node.right = r.get<std::uint32_t>();
        // Children always follow their parent, which also rules out cycles.
        if (node.feature >= kFrameFeatures || node.left <= i || node.right <= i ||
            node.left >= n_nodes || node.right >= n_nodes) {
          throw ModelError("corrupt model file: bad node");
        }
      } else {
        throw ModelError("corrupt model file: bad node kind");
      }
      nodes.push_back(node);
    }
    trees.emplace_back(std::move(nodes));
  }
  if (!r.done()) throw ModelError("corrupt model file: trailing bytes");
  return ForestModel(hp, std::move(trees));
}

inline void save_model(const ForestModel& model, const std::string& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write model file '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError("write failed for '" + path + "'");
}

inline ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace eegf0
