#pragma once

// Class-conditional synthetic EEG.
//
// A frame of class k carries a sinusoid of amplitude k * amp_per_class on
// every channel. The phase restarts at each frame and channel c is offset
// by pi * c / 10:
//
//   x[c][j] = A_k * sin(2 pi f j / fs + pi c / 10) + noise
//
// The ten offsets cover half a period evenly, so sum_c sin^2(.) = 5 for every
// j and the noiseless power of each frame is exactly A_k^2 / 2. Noise is
// white Gaussian with variance (A_k^2 / 2) / 10^(snr_db / 10); snr_db = +inf
// disables it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eegf0/biomech.hpp"
#include "eegf0/rng.hpp"
#include "eegf0/signal.hpp"

namespace eegf0 {

struct SynthConfig {
  std::size_t n_samples = 500;
  double snr_db = 30.0;
  std::uint64_t seed = 0;
  double carrier_hz = 20.0;
  double amp_per_class = 5.0;

  static constexpr double sample_rate_hz = kDefaultSampleRateHz;

  void validate() const {
    if (n_samples < kNumClasses) throw std::invalid_argument("n_samples must be >= 10");
    if (!(carrier_hz > 0.0 && carrier_hz < sample_rate_hz / 2.0)) {
      throw std::invalid_argument("carrier_hz must be in (0, sample_rate / 2)");
    }
    if (!(amp_per_class > 0.0) || !std::isfinite(amp_per_class)) {
      throw std::invalid_argument("amp_per_class must be > 0");
    }
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("snr_db must be a number or +inf");
    }
  }

  double noise_sigma(ActivationClass c) const noexcept {
    if (std::isinf(snr_db)) return 0.0;
    const double amp = c.index() * amp_per_class;
    return std::sqrt(amp * amp / 2.0 / std::pow(10.0, snr_db / 10.0));
  }
};

/// Noise-free template value for channel `ch`, frame sample `j`.
inline double synth_template(const SynthConfig& cfg, std::size_t ch, std::size_t j) noexcept {
  return std::sin(2.0 * std::numbers::pi * cfg.carrier_hz * static_cast<double>(j) /
                      SynthConfig::sample_rate_hz +
                  std::numbers::pi * static_cast<double>(ch) / static_cast<double>(kChannels));
}

inline EegFrame synth_frame(const SynthConfig& cfg, ActivationClass c, SplitMix64& rng,
                            std::size_t index = 0) {
  const double amp = c.index() * cfg.amp_per_class;
  const double sigma = cfg.noise_sigma(c);
  EegFrame::Values values{};
  for (std::size_t ch = 0; ch < kChannels; ++ch) {
    for (std::size_t j = 0; j < kFrameSamples; ++j) {
      double v = amp * synth_template(cfg, ch, j);
      if (sigma > 0.0) v += sigma * rng.gaussian();
      values[ch * kFrameSamples + j] = v;
    }
  }
  return EegFrame(values, index);
}

/// Labels are assigned round-robin (balanced up to rounding) and shuffled
/// with the seed; frames are then drawn in the shuffled order.
inline LabeledDataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);
  LabeledDataset ds;
  ds.labels.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    ds.labels.push_back(ActivationClass::from_index(static_cast<int>(i % kNumClasses) + 1));
  }
  rng.shuffle(std::span(ds.labels));
  ds.frames.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    ds.frames.push_back(synth_frame(cfg, ds.labels[i], rng, i));
  }
  ds.split_seed = cfg.seed;
  ds.metadata["source"] = "synthgen";
  ds.metadata["snr_db"] = csv::format_double(cfg.snr_db);
  return ds;
}

/// Up-then-down ramp across the ten classes over `n_steps` control steps:
/// 0.1 at both ends, 1.0 in the middle.
inline std::vector<ActivationClass> ramp_classes(std::size_t n_steps) {
  std::vector<ActivationClass> out;
  out.reserve(n_steps);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double u =
        n_steps == 1 ? 0.0 : 2.0 * static_cast<double>(s) / static_cast<double>(n_steps - 1);
    const double level = u <= 1.0 ? u : 2.0 - u;
    out.push_back(ActivationClass::from_index(
        static_cast<int>(std::lround(1.0 + 9.0 * level))));
  }
  return out;
}

struct SynthMovement {
  EegRecording recording;
  ActivationTrajectory activations;
};

/// EEG for the ramp (one frame per step) plus kinematics taken from the
/// static equilibrium angle of each step's class.
inline SynthMovement generate_movement(const SynthConfig& cfg, std::size_t n_steps,
                                       const ArmModel& arm = {}) {
  cfg.validate();
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  const auto classes = ramp_classes(n_steps);
  SplitMix64 rng(cfg.seed);
  std::vector<std::vector<double>> samples(kChannels,
                                           std::vector<double>(n_steps * kFrameSamples));
  std::vector<double> angles;
  angles.reserve(n_steps);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const EegFrame frame = synth_frame(cfg, classes[s], rng, s);
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t j = 0; j < kFrameSamples; ++j) {
        samples[ch][s * kFrameSamples + j] = frame.at(ch, j);
      }
    }
    angles.push_back(equilibrium_angle(arm, classes[s].level()));
  }
  return {EegRecording(std::move(samples), SynthConfig::sample_rate_hz, std::move(angles)),
          ActivationTrajectory::from_classes(classes)};
}

/// Recording whose frames are the dataset's frames in order and whose
/// kinematics are the equilibrium angles of the labels, so that
/// derive_labels recovers the labels.
inline EegRecording dataset_to_recording(const LabeledDataset& ds, const ArmModel& arm = {}) {
  ds.validate();
  std::vector<std::vector<double>> samples(kChannels,
                                           std::vector<double>(ds.size() * kFrameSamples));
  std::vector<double> angles;
  angles.reserve(ds.size());
  for (std::size_t f = 0; f < ds.size(); ++f) {
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t j = 0; j < kFrameSamples; ++j) {
        samples[ch][f * kFrameSamples + j] = ds.frames[f].at(ch, j);
      }
    }
    angles.push_back(equilibrium_angle(arm, ds.labels[f].level()));
  }
  return EegRecording(std::move(samples), kDefaultSampleRateHz, std::move(angles));
}

/// Amplitude-threshold classifier: amplitude estimate sqrt(2 * mean(x^2))
/// rounded to the nearest class step.
inline ActivationClass amplitude_oracle(const SynthConfig& cfg, const EegFrame& frame) {
  double sum_sq = 0.0;
  for (double v : frame.values()) sum_sq += v * v;
  const double amp = std::sqrt(2.0 * sum_sq / static_cast<double>(kFrameFeatures));
  const long k = std::lround(amp / cfg.amp_per_class);
  return ActivationClass::from_index(static_cast<int>(std::clamp(k, 1L, 10L)));
}

}  // namespace eegf0
