#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "eegf0/forest.hpp"
#include "eegf0/synthgen.hpp"
#include "test_support.hpp"

using namespace eegf0;
using eegf0::testing::TempDir;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EegFrame frame_with_feature0(double x) {
  EegFrame::Values v{};
  v[0] = x;
  return EegFrame(v);
}

LabeledDataset one_feature_dataset(const std::vector<double>& xs, const std::vector<int>& cls) {
  LabeledDataset ds;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ds.frames.push_back(frame_with_feature0(xs[i]));
    ds.labels.push_back(ActivationClass::from_index(cls[i]));
  }
  return ds;
}

// Exhaustive decision stump on feature 0: every midpoint threshold, both
// class assignments, fewest training errors wins.
struct Stump {
  double threshold;
  int left;
  int right;
  int predict(double x) const { return x <= threshold ? left : right; }
};

Stump best_stump(const std::vector<double>& xs, const std::vector<int>& cls, int a, int b) {
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  Stump best{0, a, a};
  int best_err = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double thr = (sorted[i] + sorted[i + 1]) / 2.0;
    for (auto [l, r] : {std::pair{a, b}, std::pair{b, a}}) {
      int err = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) err += (xs[k] <= thr ? l : r) != cls[k];
      if (err < best_err) {
        best_err = err;
        best = {thr, l, r};
      }
    }
  }
  return best;
}

const ForestModel& forty_db_model() {
  static const ForestModel model = [] {
    const auto ds = generate_dataset({.n_samples = 500, .snr_db = 40.0, .seed = 7});
    return train(split_dataset(ds, 0.7, 42).first);
  }();
  return model;
}

}  // namespace

TEST(Train, SingleSampleGivesSingleLeafTrees) {
  const auto ds = one_feature_dataset({1.0}, {3});
  const auto model = train(ds);
  ASSERT_EQ(model.trees().size(), 10u);
  for (const auto& tree : model.trees()) {
    ASSERT_EQ(tree.nodes().size(), 1u);
    EXPECT_TRUE(tree.nodes()[0].is_leaf);
  }
  const auto p = model.predict(frame_with_feature0(-5.0));
  EXPECT_DOUBLE_EQ(p.cls.level(), 0.3);
  EXPECT_EQ(p.votes[2], 10u);
}

TEST(Train, TwoSeparableSamplesGiveDepthOneTrees) {
  const auto ds = one_feature_dataset({-1.0, 3.0}, {1, 10});
  ForestHyperparams hp;
  hp.bootstrap = false;
  const auto model = train(ds, hp);
  for (const auto& tree : model.trees()) {
    ASSERT_EQ(tree.nodes().size(), 3u);
    EXPECT_EQ(tree.depth(), 1u);
    const auto& root = tree.nodes()[0];
    EXPECT_FALSE(root.is_leaf);
    EXPECT_EQ(root.feature, 0);
    EXPECT_DOUBLE_EQ(root.threshold, 1.0);
  }
  EXPECT_EQ(model.predict(frame_with_feature0(0.9)).cls.index(), 1);
  EXPECT_EQ(model.predict(frame_with_feature0(1.1)).cls.index(), 10);
}

TEST(Train, BootstrapOnTwoSamplesGivesLeafOrFeatureZeroStump) {
  const auto ds = one_feature_dataset({-1.0, 3.0}, {1, 10});
  const auto model = train(ds);
  for (const auto& tree : model.trees()) {
    if (tree.nodes().size() == 1) continue;  // bootstrap drew one sample twice
    ASSERT_EQ(tree.nodes().size(), 3u);
    EXPECT_EQ(tree.nodes()[0].feature, 0);
    EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 1.0);
  }
}

TEST(Train, DeterministicBytes) {
  const auto ds = generate_dataset({.n_samples = 200, .snr_db = 20.0, .seed = 4});
  EXPECT_EQ(serialize_model(train(ds)), serialize_model(train(ds)));
  ForestHyperparams other;
  other.seed = 43;
  EXPECT_NE(serialize_model(train(ds)), serialize_model(train(ds, other)));
}

TEST(Train, ExtraTreesDoNotPerturbEarlierOnes) {
  const auto ds = generate_dataset({.n_samples = 100, .snr_db = 20.0, .seed = 4});
  ForestHyperparams three, five;
  three.n_estimators = 3;
  five.n_estimators = 5;
  const auto a = train(ds, three);
  const auto b = train(ds, five);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(a.trees()[t], b.trees()[t]);
}

TEST(Train, MemorizesDuplicateFreeTrainingSet) {
  const auto ds = generate_dataset({.n_samples = 300, .snr_db = 60.0, .seed = 21});
  const auto model = train(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(model.predict(ds.frames[i]).cls, ds.labels[i]);
  }
}

TEST(Train, TreeStructureInvariants) {
  const auto ds = generate_dataset({.n_samples = 300, .snr_db = 5.0, .seed = 2});
  for (std::uint32_t min_leaf : {1u, 4u, 9u}) {
    ForestHyperparams hp;
    hp.min_samples_leaf = min_leaf;
    hp.min_samples_split = 2 * min_leaf;
    const auto model = train(ds, hp);
    ASSERT_EQ(model.trees().size(), hp.n_estimators);
    for (const auto& tree : model.trees()) {
      std::vector<int> parents(tree.nodes().size(), 0);
      for (const auto& node : tree.nodes()) {
        if (node.is_leaf) {
          EXPECT_GE(std::accumulate(node.counts.begin(), node.counts.end(), 0u), min_leaf);
        } else {
          ++parents[node.left];
          ++parents[node.right];
          EXPECT_LT(node.feature, kFrameFeatures);
        }
      }
      EXPECT_EQ(parents[0], 0);
      for (std::size_t i = 1; i < parents.size(); ++i) EXPECT_EQ(parents[i], 1);
    }
  }
}

TEST(Train, ErrorPaths) {
  EXPECT_THROW(train(LabeledDataset{}), DataError);
  const auto ds = one_feature_dataset({1.0, 2.0}, {1, 2});
  ForestHyperparams hp;
  hp.n_estimators = 0;
  EXPECT_THROW(train(ds, hp), std::invalid_argument);
  hp = {};
  hp.min_samples_split = 1;
  EXPECT_THROW(train(ds, hp), std::invalid_argument);
  hp = {};
  hp.max_features = 101;
  EXPECT_THROW(train(ds, hp), std::invalid_argument);
  auto bad = ds;
  bad.labels.pop_back();
  EXPECT_THROW(train(bad), DataError);
}

TEST(Predict, UntrainedModelIsAnError) {
  EXPECT_THROW(ForestModel{}.predict(EegFrame{}), ModelError);
}

TEST(Predict, VoteTieGoesToLowestClass) {
  std::vector<DecisionTree> trees;
  for (int i = 0; i < 10; ++i) {
    DecisionTree::Node leaf;
    leaf.counts[i < 5 ? 8 : 1] = 4;  // five trees vote class 9, five vote class 2
    trees.emplace_back(std::vector{leaf});
  }
  const ForestModel model(ForestHyperparams{}, std::move(trees));
  const auto p = model.predict(EegFrame{});
  EXPECT_EQ(p.cls.index(), 2);
  EXPECT_EQ(p.votes[1], 5u);
  EXPECT_EQ(p.votes[8], 5u);
}

TEST(Predict, VotesSumToTreeCount) {
  const auto& model = forty_db_model();
  const auto ds = generate_dataset({.n_samples = 100, .snr_db = 0.0, .seed = 77});
  for (const auto& f : ds.frames) {
    const auto p = model.predict(f);
    EXPECT_EQ(std::accumulate(p.votes.begin(), p.votes.end(), 0u), 10u);
    EXPECT_EQ(p.cls, plurality(p.votes));
  }
}

TEST(Predict, HighSnrFrameOfClassSeven) {
  const SynthConfig cfg{.snr_db = 40.0, .seed = 1234};
  SplitMix64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto frame = synth_frame(cfg, ActivationClass::from_index(7), rng);
    EXPECT_DOUBLE_EQ(forty_db_model().predict(frame).cls.level(), 0.7);
  }
}

TEST(Predict, FortyDbHeldOutAccuracyMatchesOracle) {
  const SynthConfig cfg{.n_samples = 500, .snr_db = 40.0, .seed = 7};
  const auto test_set = split_dataset(generate_dataset(cfg), 0.7, 42).second;
  std::size_t correct = 0, agree = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto pred = forty_db_model().predict(test_set.frames[i]).cls;
    correct += pred == test_set.labels[i];
    agree += pred == amplitude_oracle(cfg, test_set.frames[i]);
  }
  EXPECT_GE(static_cast<double>(correct) / test_set.size(), 0.95);
  EXPECT_GE(static_cast<double>(agree) / test_set.size(), 0.95);
}

TEST(Predict, MatchesExhaustiveStumpOnSeparableOneFeatureData) {
  std::mt19937_64 gen(17);
  ForestHyperparams hp;
  hp.bootstrap = false;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 7;  // 2..8 points
    std::vector<double> xs;
    while (xs.size() < n) {
      const double x = static_cast<double>(static_cast<int>(gen() % 2001) - 1000) / 10.0;
      if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    }
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t cut = 1 + gen() % (n - 1);
    const double boundary = sorted[cut - 1];
    const int a = 1 + static_cast<int>(gen() % 10);
    int b = 1 + static_cast<int>(gen() % 10);
    if (b == a) b = a % 10 + 1;
    std::vector<int> cls;
    for (double x : xs) cls.push_back(x <= boundary ? a : b);

    const auto model = train(one_feature_dataset(xs, cls), hp);
    const auto stump = best_stump(xs, cls, a, b);
    std::vector<double> queries = sorted;
    // Stay clear of the midpoints themselves, where rounding decides the side.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double gap = sorted[i + 1] - sorted[i];
      queries.push_back(sorted[i] + 0.25 * gap);
      queries.push_back(sorted[i] + 0.75 * gap);
    }
    queries.push_back(sorted.front() - 1.0);
    queries.push_back(sorted.back() + 1.0);
    for (double q : queries) {
      EXPECT_EQ(model.predict(frame_with_feature0(q)).cls.index(), stump.predict(q))
          << "trial " << trial << " q=" << q;
    }
  }
}

TEST(PredictTrajectory, PreservesOrder) {
  const auto& model = forty_db_model();
  EXPECT_TRUE(predict_trajectory(model, {}).empty());

  const SynthConfig cfg{.snr_db = 40.0, .seed = 31};
  const auto mv = generate_movement(cfg, 20);
  const auto decoded = predict_trajectory(model, window_frames(mv.recording));
  EXPECT_EQ(decoded, ramp_classes(20));

  const std::vector<EegFrame> same(5, window_frames(mv.recording)[3]);
  const auto flat = predict_trajectory(model, same);
  for (auto c : flat) EXPECT_EQ(c, flat.front());
}

TEST(ModelFile, RoundTripKeepsPredictions) {
  TempDir dir;
  const auto& model = forty_db_model();
  save_model(model, dir.file("m.nf0f"));
  const auto loaded = load_model(dir.file("m.nf0f"));
  EXPECT_EQ(loaded, model);
  const auto probe = generate_dataset({.n_samples = 100, .snr_db = 10.0, .seed = 5});
  for (const auto& f : probe.frames) {
    const auto a = model.predict(f);
    const auto b = loaded.predict(f);
    EXPECT_EQ(a.cls, b.cls);
    EXPECT_EQ(a.votes, b.votes);
  }
}

TEST(ModelFile, HeaderLayout) {
  const std::string bytes = serialize_model(forty_db_model());
  EXPECT_EQ(bytes.substr(0, 4), "NF0F");
  EXPECT_EQ(bytes[4], '\x01');
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 10u);  // n_estimators, little-endian
  EXPECT_EQ(bytes.substr(6, 3), std::string(3, '\0'));
}

TEST(ModelFile, CorruptInputs) {
  const std::string bytes = serialize_model(forty_db_model());
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 3)), ModelError);
  EXPECT_THROW(deserialize_model(bytes.substr(0, 2)), ModelError);
  EXPECT_THROW(deserialize_model(bytes + "x"), ModelError);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), ModelError);

  std::string bad_version = bytes;
  bad_version[4] = '\x07';
  EXPECT_THROW(deserialize_model(bad_version), FormatVersionError);

  TempDir dir;
  EXPECT_THROW(load_model(dir.file("none.nf0f")), ModelError);
  eegf0::testing::write_text(dir.file("trunc.nf0f"), bytes.substr(0, 100));
  EXPECT_THROW(load_model(dir.file("trunc.nf0f")), ModelError);
  EXPECT_THROW(serialize_model(ForestModel{}), ModelError);
}
