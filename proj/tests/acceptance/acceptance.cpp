// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Tolerances are fixed here, not read from config.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eegf0/eegf0.hpp"
#include "../test_support.hpp"

using namespace eegf0;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double asin_deg(double x) { return std::asin(x) * 180.0 / std::numbers::pi; }

// 1. Forest at 40 dB versus the amplitude oracle.
void classifier_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  const SynthConfig sc{.n_samples = 500, .snr_db = 40.0, .seed = 7};
  const auto ds = generate_dataset(sc);
  const auto [train_set, test_set] = split_dataset(ds, 0.7, 42);
  const ForestHyperparams hp{.n_estimators = 10, .min_samples_leaf = 1, .min_samples_split = 2,
                             .seed = 42};
  const auto model = train(train_set, hp);
  const auto pred = predict_trajectory(model, test_set.frames);
  const double elapsed = seconds_since(t0);

  std::vector<ActivationClass> oracle;
  for (const auto& f : test_set.frames) oracle.push_back(amplitude_oracle(sc, f));
  const double acc = accuracy(pred, test_set.labels);
  const double agree = accuracy(pred, oracle);
  o.detail << "n_test=" << test_set.size() << " accuracy=" << acc << " oracle_agreement=" << agree
           << " runtime_s=" << elapsed;
  o.require(test_set.size() == 150, "150 test frames");
  o.require(acc >= 0.95, "accuracy >= 0.95");
  o.require(agree >= 0.95, "oracle agreement >= 0.95");
  o.require(elapsed < 5.0, "runtime < 5 s");
}

// 2. Two identical CLI runs produce identical artifacts.
void determinism(Outcome& o) {
  testing::TempDir a, b;
  const std::string cli = EEGF0_CLI_PATH;
  for (const auto* d : {&a, &b}) {
    const std::string out = " --seed 42 --out " + d->path().string();
    for (const char* cmd : {" gen-data", " train", " pipeline"}) {
      const int rc = testing::run(cli + out + cmd + " >/dev/null 2>&1");
      o.require(rc == 0, std::string("exit 0 from") + cmd);
    }
  }
  for (const char* f : {"model.nf0f", "metrics.json", "out.wav"}) {
    const auto x = testing::read_bytes(a.file(f));
    const auto y = testing::read_bytes(b.file(f));
    o.detail << f << "=" << x.size() << "B ";
    o.require(!x.empty() && x == y, std::string(f) + " byte-identical");
  }
}

// 3. Every class settles at arcsin(level) within 5 s.
void dynamics_convergence(Outcome& o) {
  const ArmModel arm;
  double worst = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double level = k / 10.0;
    const auto angles =
        forward_dynamics(arm, ActivationTrajectory{std::vector<double>(500, level)});
    worst = std::max(worst, std::abs(angles.angles_deg.back() - asin_deg(level)));
  }
  o.detail << "worst_error_deg=" << worst;
  o.require(worst <= 0.5, "all classes within 0.5 deg at t=5 s");
}

// 4. Energy conservation and RK4 order on the free pendulum.
void conservation_order(Outcome& o) {
  ArmModel pendulum;
  pendulum.damping_nms = 0.0;
  pendulum.angle_min_deg = -180.0;
  pendulum.angle_max_deg = 180.0;
  const ArmState start{deg_to_rad(20.0), 0.0};

  ArmState s = start;
  const double e0 = mechanical_energy(pendulum, s);
  double drift = 0.0;
  for (int i = 0; i < 1000; ++i) {
    s = advance_control_step(pendulum, s, 0.0, 1e-4);
    drift = std::max(drift, std::abs(mechanical_energy(pendulum, s) - e0) / std::abs(e0));
  }

  const auto endpoint = [&](double sub_dt) {
    ArmState x = start;
    for (int i = 0; i < 1000; ++i) x = advance_control_step(pendulum, x, 0.0, sub_dt);
    return x.theta_rad;
  };
  const double reference = endpoint(1e-5);
  const double coarse = std::abs(endpoint(5e-3) - reference);
  const double fine = std::abs(endpoint(2.5e-3) - reference);
  o.detail << "energy_drift=" << drift << " error_ratio=" << coarse / fine;
  o.require(drift < 1e-3, "energy drift < 0.1%");
  o.require(coarse / fine >= 8.0, "halving sub_dt shrinks error >= 8x");
}

// 5. Quasistatic round trip and greedy tracking versus enumeration.
void inverse_round_trip(Outcome& o) {
  const ArmModel arm;
  int exact = 0;
  for (int k = 1; k <= 10; ++k) {
    const double level = k / 10.0;
    const auto out = inverse_quasistatic(arm, AngleTrajectory{{equilibrium_angle(arm, level)}});
    exact += out.levels[0] == level ? 1 : 0;
  }

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> angle(0.0, 90.0);
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    AngleTrajectory target;
    const std::size_t n = 1 + gen() % 10;
    for (std::size_t i = 0; i < n; ++i) target.angles_deg.push_back(angle(gen));
    const auto r = inverse_tracking(arm, target);
    std::vector<double> chosen;
    for (std::size_t i = 0; i < n; ++i) {
      double best_err = kInf;
      double best = 0.0;
      for (int k = 1; k <= 10; ++k) {
        auto prefix = chosen;
        prefix.push_back(k / 10.0);
        const double end =
            forward_dynamics(arm, ActivationTrajectory{prefix}, target.angles_deg[0])
                .angles_deg.back();
        const double err = (end - target.angles_deg[i]) * (end - target.angles_deg[i]);
        if (err < best_err) {
          best_err = err;
          best = k / 10.0;
        }
      }
      chosen.push_back(best);
    }
    matched += r.activations.levels == chosen ? 1 : 0;
  }
  o.detail << "quasistatic_exact=" << exact << "/10 tracking_matches=" << matched << "/100";
  o.require(exact == 10, "all classes round-trip");
  o.require(matched == 100, "tracking matches enumeration");
}

// 6. Linear F0 map.
void f0_map(Outcome& o) {
  const F0Mapping map;
  const double lo = map_angle_to_f0(map, 0.0);
  const double hi = map_angle_to_f0(map, 90.0);
  const double mid = map_angle_to_f0(map, 45.0);
  bool in_range = true;
  for (int i = -200; i <= 1100; ++i) {
    const double f = map_angle_to_f0(map, i / 10.0);
    in_range = in_range && f >= 1500.0 && f <= 5150.0;
  }
  const double rel = std::abs(mid - 3325.0) / 3325.0;
  o.detail << "f0(0)=" << lo << " f0(90)=" << hi << " midpoint_rel_err=" << rel;
  o.require(lo == 1500.0 && hi == 5150.0, "exact endpoints");
  o.require(rel <= 1e-9, "midpoint linearity");
  o.require(in_range, "values within [1500, 5150]");
}

// 7. Sine synthesis and WAV size.
void synthesis(Outcome& o) {
  const auto low = synthesize(F0Trajectory{std::vector<double>(100, 1500.0)});
  const auto high = synthesize(F0Trajectory{std::vector<double>(100, 5150.0)});
  const auto up_low = testing::count_upcrossings(low.samples);
  const auto up_high = testing::count_upcrossings(high.samples);
  testing::TempDir dir;
  write_wav(low, dir.file("a.wav"));
  const auto size = std::filesystem::file_size(dir.path() / "a.wav");
  const auto w = testing::read_wav(dir.file("a.wav"));
  o.detail << "upcrossings@1500=" << up_low << " upcrossings@5150=" << up_high
           << " wav_bytes=" << size;
  o.require(std::abs(static_cast<double>(up_low) - 3000.0) <= 2.0, "3000 +- 2 upcrossings at 1500 Hz");
  o.require(std::abs(static_cast<double>(up_high) - 5150.0) <= 2.0, "5150 +- 2 upcrossings at 5150 Hz");
  o.require(size == 88244, "88244-byte WAV");
  o.require(w.format == 1 && w.channels == 1 && w.sample_rate == 44100 && w.bits == 16 &&
                w.byte_rate == 88200 && w.block_align == 2 && w.data_size == 88200 &&
                w.riff_size == 88236,
            "PCM16 mono 44100 Hz header");
}

// 8. End-to-end F0 error on a noiseless ramp.
void end_to_end(Outcome& o) {
  const auto t0 = Clock::now();
  const auto model = train(generate_dataset({.n_samples = 500, .snr_db = kInf, .seed = 7}));
  const auto mv = generate_movement({.snr_db = kInf, .seed = 1}, 1000);
  const auto r = run_pipeline(PipelineConfig{}, mv.recording, model);
  const double elapsed = seconds_since(t0);
  const double f0_rmse = *r.metrics.f0_rmse_hz;
  o.detail << "accuracy=" << *r.metrics.classifier_accuracy << " angle_rmse_deg="
           << *r.metrics.angle_rmse_deg << " f0_rmse_hz=" << f0_rmse << " wall_s=" << elapsed;
  o.require(f0_rmse <= 102.7, "f0_rmse_hz <= 102.7");
  o.require(elapsed < 30.0, "wall time < 30 s");
}

// 9. Metric formulas.
void metric_formulas(Outcome& o) {
  const double r = rmse(std::vector<double>{0.0, 0.0}, std::vector<double>{3.0, 4.0});
  struct Case {
    std::vector<int> pred, truth;
    double expected;
  };
  const std::vector<Case> cases{
      {{1}, {1}, 1.0},
      {{1}, {2}, 0.0},
      {{1, 2}, {1, 3}, 0.5},
      {{1, 2, 3}, {1, 2, 3}, 1.0},
      {{1, 2, 3}, {3, 2, 1}, 1.0 / 3.0},
      {{5, 5, 5, 5}, {5, 5, 5, 1}, 0.75},
      {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6}, 0.0},
      {{10, 9, 8, 7, 6, 5}, {10, 9, 8, 1, 1, 1}, 0.5},
      {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1, 2, 2, 2}, 0.7},
      {{3, 4, 3, 4, 3, 4, 3, 4}, {3, 3, 3, 3, 4, 4, 4, 4}, 0.5},
  };
  int ok = 0;
  for (const auto& c : cases) ok += accuracy(c.pred, c.truth) == c.expected ? 1 : 0;
  o.detail << "rmse=" << r << " accuracy_cases=" << ok << "/" << cases.size();
  o.require(std::abs(r - 3.535534) <= 1e-6, "rmse([0,0],[3,4]) = 3.535534");
  o.require(ok == static_cast<int>(cases.size()), "hand-counted accuracy");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"classifier oracle equivalence", classifier_oracle},
      {"determinism", determinism},
      {"dynamics convergence", dynamics_convergence},
      {"conservation and order", conservation_order},
      {"inverse/forward round trip", inverse_round_trip},
      {"F0 map exactness", f0_map},
      {"synthesis", synthesis},
      {"end-to-end bound", end_to_end},
      {"metric formulas", metric_formulas},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.str().c_str());
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
