#pragma once

// End-to-end decoding: EEG frames -> activation classes -> elbow angles ->
// F0 -> audio, plus the per-stage metrics report and the JSON config.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eegf0/biomech.hpp"
#include "eegf0/error.hpp"
#include "eegf0/forest.hpp"
#include "eegf0/metrics.hpp"
#include "eegf0/signal.hpp"
#include "eegf0/synthgen.hpp"
#include "eegf0/voice.hpp"

namespace eegf0 {

struct SplitConfig {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
};

struct AudioConfig {
  double sample_rate_hz = 44100.0;
  double amplitude = 0.8;
};

/// Synthetic data written by `gen-data`.
struct DataConfig {
  SynthConfig synth{.n_samples = 500, .snr_db = 40.0, .seed = 7};
  std::size_t movement_steps = 1000;
};

struct PathsConfig {
  std::string model = "model.nf0f";
  std::string out_dir = ".";
};

struct PipelineConfig {
  ArmModel arm;
  F0Mapping mapping;
  ForestHyperparams forest;
  SplitConfig split;
  AudioConfig synth;
  DataConfig data;
  PathsConfig paths;
  double sub_dt_s = 1e-3;

  void validate() const {
    arm.validate();
    mapping.validate();
    forest.validate();
    data.synth.validate();
    if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
      throw std::invalid_argument("split.train_fraction must be in (0, 1)");
    }
    if (!(synth.amplitude >= 0.0 && synth.amplitude <= 1.0)) {
      throw std::invalid_argument("synth.amplitude must be in [0, 1]");
    }
    if (data.movement_steps < 1) throw std::invalid_argument("data.movement_steps must be >= 1");
    detail::substeps_per_control(sub_dt_s);
  }

  /// Overrides every seed (data, split, forest).
  void set_seed(std::uint64_t seed) {
    data.synth.seed = seed;
    split.seed = seed;
    forest.seed = seed;
  }
};

// ---------------------------------------------------------------------------
// Config JSON. Every key is optional; unknown keys are rejected.

namespace detail {

using nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw DataError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (it->is_string() && it->template get<std::string>() == "inf") {
          out = std::numeric_limits<double>::infinity();
          return;
        }
        if (!it->is_number()) throw DataError("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw DataError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_unsigned()) throw DataError("expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw DataError("expected a string");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw DataError("config: '" + path_ + "." + key + "': " + e.what());
    }
  }

  ObjectReader child(const char* key) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    static const json empty = json::object();
    return ObjectReader(it == j_.end() ? empty : *it, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw DataError("config: unknown key '" + path_ + "." + key + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
  PipelineConfig cfg;
  detail::ObjectReader root(j, "$");
  {
    auto r = root.child("arm");
    r.read("forearm_mass_kg", cfg.arm.forearm_mass_kg);
    r.read("forearm_length_m", cfg.arm.forearm_length_m);
    r.read("max_muscle_force_n", cfg.arm.max_muscle_force_n);
    r.read("moment_arm_m", cfg.arm.moment_arm_m);
    r.read("damping_nms", cfg.arm.damping_nms);
    r.read("gravity_ms2", cfg.arm.gravity_ms2);
    r.read("angle_min_deg", cfg.arm.angle_min_deg);
    r.read("angle_max_deg", cfg.arm.angle_max_deg);
    r.finish();
  }
  {
    auto r = root.child("mapping");
    r.read("angle_min_deg", cfg.mapping.angle_min_deg);
    r.read("angle_max_deg", cfg.mapping.angle_max_deg);
    r.read("f0_min_hz", cfg.mapping.f0_min_hz);
    r.read("f0_max_hz", cfg.mapping.f0_max_hz);
    r.finish();
  }
  {
    auto r = root.child("forest");
    r.read("n_estimators", cfg.forest.n_estimators);
    r.read("min_samples_leaf", cfg.forest.min_samples_leaf);
    r.read("min_samples_split", cfg.forest.min_samples_split);
    r.read("seed", cfg.forest.seed);
    r.read("max_features", cfg.forest.max_features);
    r.read("bootstrap", cfg.forest.bootstrap);
    r.finish();
  }
  {
    auto r = root.child("split");
    r.read("train_fraction", cfg.split.train_fraction);
    r.read("seed", cfg.split.seed);
    r.finish();
  }
  {
    auto r = root.child("synth");
    r.read("sample_rate_hz", cfg.synth.sample_rate_hz);
    r.read("amplitude", cfg.synth.amplitude);
    r.finish();
  }
  {
    auto r = root.child("data");
    r.read("n_samples", cfg.data.synth.n_samples);
    r.read("snr_db", cfg.data.synth.snr_db);
    r.read("seed", cfg.data.synth.seed);
    r.read("carrier_hz", cfg.data.synth.carrier_hz);
    r.read("amp_per_class", cfg.data.synth.amp_per_class);
    r.read("movement_steps", cfg.data.movement_steps);
    r.finish();
  }
  {
    auto r = root.child("paths");
    r.read("model", cfg.paths.model);
    r.read("out_dir", cfg.paths.out_dir);
    r.finish();
  }
  root.read("sub_dt_s", cfg.sub_dt_s);
  root.finish();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config '" + path + "': " + e.what());
  }
  return parse_pipeline_config(j);
}

// ---------------------------------------------------------------------------
// Metrics

/// Stage metrics. Fields are empty when ground-truth kinematics are missing.
struct MetricsReport {
  std::optional<double> classifier_accuracy;
  std::optional<double> activation_rmse;
  std::optional<double> angle_accuracy;
  std::optional<double> angle_rmse_deg;
  std::optional<double> f0_rmse_hz;
  std::size_t n_test = 0;

  bool has_metrics() const noexcept { return classifier_accuracy.has_value(); }
};

inline std::string metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  const auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  put("classifier_accuracy", m.classifier_accuracy);
  put("activation_rmse", m.activation_rmse);
  put("angle_accuracy", m.angle_accuracy);
  put("angle_rmse_deg", m.angle_rmse_deg);
  put("f0_rmse_hz", m.f0_rmse_hz);
  j["n_test"] = m.n_test;
  return j.dump(2) + "\n";
}

/// Nearest of the ten class equilibrium angles (ties go to the higher class).
inline double snap_to_equilibrium(const ArmModel& arm, double theta_deg) {
  double best = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= static_cast<int>(kNumClasses); ++k) {
    const double eq = equilibrium_angle(arm, k / 10.0);
    const double d = std::abs(theta_deg - eq);
    if (d <= best_dist) {
      best_dist = d;
      best = eq;
    }
  }
  return best;
}

/// Everything is per frame. Angle accuracy compares both angle series after
/// snapping them to the class equilibrium angles.
inline MetricsReport stage_metrics(const ArmModel& arm, const std::vector<ActivationClass>& pred,
                                   const std::vector<ActivationClass>& truth,
                                   const AngleTrajectory& pred_angles,
                                   const AngleTrajectory& true_angles, const F0Trajectory& pred_f0,
                                   const F0Trajectory& true_f0) {
  MetricsReport m;
  m.n_test = pred.size();
  m.classifier_accuracy = accuracy(pred, truth);
  m.activation_rmse = rmse(ActivationTrajectory::from_classes(pred).levels,
                           ActivationTrajectory::from_classes(truth).levels);
  std::vector<double> snapped_pred, snapped_true;
  for (double a : pred_angles.angles_deg) snapped_pred.push_back(snap_to_equilibrium(arm, a));
  for (double a : true_angles.angles_deg) snapped_true.push_back(snap_to_equilibrium(arm, a));
  m.angle_accuracy = accuracy(snapped_pred, snapped_true);
  m.angle_rmse_deg = rmse(pred_angles.angles_deg, true_angles.angles_deg);
  m.f0_rmse_hz = rmse(pred_f0.values_hz, true_f0.values_hz);
  return m;
}

// ---------------------------------------------------------------------------
// Orchestration

struct GroundTruth {
  std::vector<ActivationClass> classes;
  AngleTrajectory angles;
  F0Trajectory f0;
};

struct PipelineResult {
  std::vector<ActivationClass> predicted;
  AngleTrajectory angles;
  F0Trajectory f0;
  AudioBuffer audio;
  std::optional<GroundTruth> truth;
  MetricsReport metrics;
};

namespace detail {

template <typename F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace detail

/// Decodes a recording. The arm starts at rest at 0 degrees (or the lower
/// joint limit if that is higher). Ground truth, when the recording has
/// kinematics, is F0 mapped from the recorded angles.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const EegRecording& rec,
                                   const ForestModel& model) {
  detail::run_stage("config", [&] { cfg.validate(); });
  PipelineResult out;
  const auto frames = detail::run_stage("window", [&] { return window_frames(rec); });
  out.predicted = detail::run_stage("classify", [&] {
    if (!model.trained()) throw ModelError("model is not trained");
    return predict_trajectory(model, frames);
  });
  out.angles = detail::run_stage("dynamics", [&] {
    const double theta0 = std::max(0.0, cfg.arm.angle_min_deg);
    return forward_dynamics(cfg.arm, ActivationTrajectory::from_classes(out.predicted), theta0,
                            0.0, cfg.sub_dt_s);
  });
  out.f0 = detail::run_stage("mapping", [&] { return map_trajectory(cfg.mapping, out.angles); });
  out.audio = detail::run_stage("synthesis", [&] {
    return synthesize(out.f0, cfg.synth.sample_rate_hz, cfg.synth.amplitude);
  });
  out.metrics.n_test = frames.size();

  if (rec.kinematics()) {
    detail::run_stage("metrics", [&] {
      AngleTrajectory kin{*rec.kinematics()};
      if (kin.size() != frames.size()) {
        throw DataError("recording has " + std::to_string(kin.size()) +
                        " kinematic samples for " + std::to_string(frames.size()) + " frames");
      }
      GroundTruth truth{derive_labels(cfg.arm, kin), kin, map_trajectory(cfg.mapping, kin)};
      out.metrics = stage_metrics(cfg.arm, out.predicted, truth.classes, out.angles, truth.angles,
                                  out.f0, truth.f0);
      out.truth = std::move(truth);
    });
  }
  return out;
}

/// Writes metrics.json, angles.csv, f0.csv, out.wav and, with ground truth,
/// truth.csv (t_s,activation,angle_deg,f0_hz).
inline void write_pipeline_outputs(const PipelineResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  csv::write_file(path("metrics.json"), metrics_to_json(r.metrics));
  write_trajectory_csv(ActivationTrajectory::from_classes(r.predicted), r.angles, path("angles.csv"));
  write_f0_csv(r.f0, path("f0.csv"));
  if (r.truth) {
    std::string out = "t_s,activation,angle_deg,f0_hz\n";
    for (std::size_t i = 0; i < r.truth->classes.size(); ++i) {
      out += csv::format_double(static_cast<double>(i) * kControlStepS) + ',' +
             csv::format_double(r.truth->classes[i].level()) + ',' +
             csv::format_double(r.truth->angles.angles_deg[i]) + ',' +
             csv::format_double(r.truth->f0.values_hz[i]) + '\n';
    }
    csv::write_file(path("truth.csv"), out);
  }
  write_wav(r.audio, path("out.wav"));
}

/// Labeled dataset from a recording whose kinematics carry the labels.
inline LabeledDataset dataset_from_recording(const EegRecording& rec, const ArmModel& arm) {
  if (!rec.kinematics()) throw DataError("recording has no angle_deg column to label from");
  LabeledDataset ds;
  ds.frames = window_frames(rec);
  AngleTrajectory kin{*rec.kinematics()};
  if (kin.size() != ds.frames.size()) {
    throw DataError("recording has " + std::to_string(kin.size()) + " kinematic samples for " +
                    std::to_string(ds.frames.size()) + " frames");
  }
  ds.labels = derive_labels(arm, kin);
  return ds;
}

}  // namespace eegf0
