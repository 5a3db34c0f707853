#pragma once

// EEG recordings, 10x10 frames, activation classes and labeled datasets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eegf0/csv.hpp"
#include "eegf0/error.hpp"
#include "eegf0/rng.hpp"

namespace eegf0 {

inline constexpr std::size_t kChannels = 10;
inline constexpr std::size_t kFrameSamples = 10;
inline constexpr std::size_t kFrameFeatures = kChannels * kFrameSamples;
inline constexpr std::size_t kNumClasses = 10;
inline constexpr double kDefaultSampleRateHz = 1000.0;
inline constexpr double kControlStepS = 0.01;
inline constexpr const char* kAngleColumn = "angle_deg";

inline const std::vector<std::string>& default_channel_names() {
  static const std::vector<std::string> names{"FP1", "FP2", "F7", "F8", "T3",
                                              "T4",  "T5",  "T6", "O1", "O2"};
  return names;
}

/// One of the ten discretized activation levels 0.1, 0.2, ..., 1.0. The
/// class index (1..10) is stored; the level is derived from it.
class ActivationClass {
 public:
  constexpr ActivationClass() = default;

  static ActivationClass from_index(int index) {
    if (index < 1 || index > static_cast<int>(kNumClasses)) {
      throw std::invalid_argument("activation class index must be in 1..10, got " +
                                  std::to_string(index));
    }
    ActivationClass c;
    c.index_ = index;
    return c;
  }

  /// Nearest admissible class to a level in [0, 1]; ties round up and zero
  /// demand maps to 0.1.
  static ActivationClass nearest(double level) {
    if (!(level >= 0.0 && level <= 1.0)) {
      throw std::invalid_argument("activation level must be in [0, 1]");
    }
    const int k = static_cast<int>(std::floor(level * 10.0 + 0.5));
    return from_index(std::clamp(k, 1, static_cast<int>(kNumClasses)));
  }

  constexpr int index() const noexcept { return index_; }
  constexpr double level() const noexcept { return index_ / 10.0; }

  friend constexpr bool operator==(ActivationClass, ActivationClass) = default;
  friend constexpr auto operator<=>(ActivationClass, ActivationClass) = default;

 private:
  int index_ = 1;
};

/// One 0.01 s window: 10 channels x 10 samples, stored channel-major
/// (feature = channel * 10 + sample). This is also the classifier's
/// feature layout.
class EegFrame {
 public:
  using Values = std::array<double, kFrameFeatures>;

  EegFrame() { values_.fill(0.0); }

  explicit EegFrame(const Values& values, std::size_t index = 0)
      : values_(values), index_(index) {
    for (double v : values_) {
      if (!std::isfinite(v)) throw DataError("EEG frame contains a non-finite value");
    }
  }

  double at(std::size_t channel, std::size_t sample) const {
    return values_.at(channel * kFrameSamples + sample);
  }
  const Values& values() const noexcept { return values_; }
  std::span<const double, kFrameFeatures> features() const noexcept { return values_; }
  std::size_t index() const noexcept { return index_; }

  friend bool operator==(const EegFrame& a, const EegFrame& b) {
    return a.values_ == b.values_;
  }

 private:
  Values values_{};
  std::size_t index_ = 0;
};

/// Multichannel recording in microvolts, rows = channels. Kinematics, when
/// present, hold one elbow angle (degrees) per 0.01 s control step.
class EegRecording {
 public:
  EegRecording(std::vector<std::string> channel_names,
               std::vector<std::vector<double>> samples,
               double sample_rate_hz = kDefaultSampleRateHz,
               std::optional<std::vector<double>> kinematics = std::nullopt)
      : channel_names_(std::move(channel_names)),
        samples_(std::move(samples)),
        sample_rate_hz_(sample_rate_hz),
        kinematics_(std::move(kinematics)) {
    if (channel_names_.size() != kChannels) {
      throw DataError("expected " + std::to_string(kChannels) + " EEG channels, got " +
                      std::to_string(channel_names_.size()));
    }
    if (samples_.size() != channel_names_.size()) {
      throw DataError("channel count does not match channel names");
    }
    for (const auto& row : samples_) {
      if (row.size() != samples_.front().size()) {
        throw DataError("channel rows have different lengths");
      }
    }
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
      throw DataError("sample rate must be positive");
    }
  }

  /// Default channel names FP1..O2.
  explicit EegRecording(std::vector<std::vector<double>> samples,
                        double sample_rate_hz = kDefaultSampleRateHz,
                        std::optional<std::vector<double>> kinematics = std::nullopt)
      : EegRecording(default_channel_names(), std::move(samples), sample_rate_hz,
                     std::move(kinematics)) {}

  const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }
  const std::vector<std::vector<double>>& samples() const noexcept { return samples_; }
  std::size_t n_channels() const noexcept { return samples_.size(); }
  std::size_t n_samples() const noexcept { return samples_.front().size(); }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::optional<std::vector<double>>& kinematics() const noexcept { return kinematics_; }

 private:
  std::vector<std::string> channel_names_;
  std::vector<std::vector<double>> samples_;
  double sample_rate_hz_;
  std::optional<std::vector<double>> kinematics_;
};

struct LabeledDataset {
  std::vector<EegFrame> frames;
  std::vector<ActivationClass> labels;
  std::uint64_t split_seed = 0;
  std::map<std::string, std::string> metadata;

  std::size_t size() const noexcept { return frames.size(); }
  bool empty() const noexcept { return frames.empty(); }

  void validate() const {
    if (frames.size() != labels.size()) {
      throw DataError("dataset has " + std::to_string(frames.size()) + " frames but " +
                      std::to_string(labels.size()) + " labels");
    }
  }
};

namespace detail {

inline std::size_t samples_per_window(double sample_rate_hz, double window_s) {
  const double exact = window_s * sample_rate_hz;
  const double rounded = std::round(exact);
  if (!(rounded >= 1.0) || std::abs(exact - rounded) > 1e-9 * rounded) {
    throw DataError("window of " + csv::format_double(window_s) + " s at " +
                    csv::format_double(sample_rate_hz) +
                    " Hz is not a positive whole number of samples");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace detail

/// Loads `FP1,...,O2[,angle_deg]` CSV, one row per sample. The angle column
/// may be filled on every row or only on some; for each complete control
/// window the first filled cell is taken. Trailing partial windows are
/// ignored for kinematics just as they are for frames.
inline EegRecording load_recording_csv(const std::string& path,
                                       double sample_rate_hz = kDefaultSampleRateHz) {
  const csv::Table table = csv::read_file(path);
  const int angle_col = table.column(kAngleColumn);

  std::vector<std::string> names;
  std::vector<std::size_t> signal_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<int>(c) == angle_col) continue;
    names.push_back(table.header[c]);
    signal_cols.push_back(c);
  }
  if (names.size() != kChannels) {
    throw DataError("'" + path + "': expected " + std::to_string(kChannels) +
                    " EEG channel columns, got " + std::to_string(names.size()));
  }

  std::vector<std::vector<double>> samples(kChannels);
  for (auto& row : samples) row.reserve(table.rows.size());
  std::vector<std::optional<double>> angle_cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + ": row " + std::to_string(r + 1);
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      samples[ch].push_back(csv::parse_double(row[signal_cols[ch]], where));
    }
    if (angle_col >= 0) {
      const auto& cell = row[static_cast<std::size_t>(angle_col)];
      angle_cells.push_back(cell.empty() ? std::nullopt
                                         : std::optional(csv::parse_double(cell, where)));
    }
  }
  if (table.rows.empty()) throw DataError("'" + path + "' has no samples");

  std::optional<std::vector<double>> kinematics;
  if (angle_col >= 0) {
    const std::size_t spw = detail::samples_per_window(sample_rate_hz, kControlStepS);
    std::vector<double> angles;
    for (std::size_t w = 0; (w + 1) * spw <= angle_cells.size(); ++w) {
      std::optional<double> value;
      for (std::size_t i = w * spw; i < (w + 1) * spw && !value; ++i) value = angle_cells[i];
      if (!value) {
        throw DataError("'" + path + "': no angle_deg value in control window " +
                        std::to_string(w));
      }
      angles.push_back(*value);
    }
    kinematics = std::move(angles);
  }
  return EegRecording(std::move(names), std::move(samples), sample_rate_hz,
                      std::move(kinematics));
}

/// Writes the CSV format read by load_recording_csv. Kinematic angles go on
/// the first row of each control window.
inline void write_recording_csv(const EegRecording& rec, const std::string& path) {
  std::string out;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    if (c) out += ',';
    out += rec.channel_names()[c];
  }
  const auto& kin = rec.kinematics();
  const std::size_t spw =
      kin ? detail::samples_per_window(rec.sample_rate_hz(), kControlStepS) : 0;
  if (kin) out += std::string(",") + kAngleColumn;
  out += '\n';
  for (std::size_t n = 0; n < rec.n_samples(); ++n) {
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      if (c) out += ',';
      out += csv::format_double(rec.samples()[c][n]);
    }
    if (kin) {
      out += ',';
      if (n % spw == 0 && n / spw < kin->size()) out += csv::format_double((*kin)[n / spw]);
    }
    out += '\n';
  }
  csv::write_file(path, out);
}

/// Non-overlapping windows in temporal order; the trailing partial window
/// is dropped.
inline std::vector<EegFrame> window_frames(const EegRecording& rec,
                                           double window_s = kControlStepS) {
  const std::size_t spw = detail::samples_per_window(rec.sample_rate_hz(), window_s);
  if (spw != kFrameSamples) {
    throw DataError("frames must be 10x10; window yields " + std::to_string(spw) +
                    " samples per channel");
  }
  if (rec.n_samples() < spw) {
    throw DataError("recording has " + std::to_string(rec.n_samples()) +
                    " samples, fewer than one window");
  }
  const std::size_t n_frames = rec.n_samples() / spw;
  std::vector<EegFrame> frames;
  frames.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    EegFrame::Values values{};
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t s = 0; s < spw; ++s) {
        values[ch * kFrameSamples + s] = rec.samples()[ch][f * spw + s];
      }
    }
    frames.emplace_back(values, f);
  }
  return frames;
}

/// Seeded shuffle (SplitMix64 Fisher-Yates over indices), then the first
/// round(n * train_fraction) shuffled items form the training part.
inline std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                               double train_fraction,
                                                               std::uint64_t seed) {
  ds.validate();
  if (ds.empty()) throw DataError("cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(seed);
  rng.shuffle(std::span(order));

  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(ds.size()) * train_fraction));
  LabeledDataset train, test;
  for (auto* part : {&train, &test}) {
    part->split_seed = seed;
    part->metadata = ds.metadata;
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& part = i < n_train ? train : test;
    part.frames.push_back(ds.frames[order[i]]);
    part.labels.push_back(ds.labels[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace eegf0
