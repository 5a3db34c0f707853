#pragma once

// Elbow angle -> F0 mapping, sine synthesis, 16-bit PCM WAV output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eegf0/biomech.hpp"
#include "eegf0/csv.hpp"
#include "eegf0/error.hpp"

namespace eegf0 {

struct F0Mapping {
  double angle_min_deg = 0.0;
  double angle_max_deg = 90.0;
  double f0_min_hz = 1500.0;
  double f0_max_hz = 5150.0;

  void validate() const {
    if (!(angle_min_deg < angle_max_deg)) {
      throw std::invalid_argument("F0 mapping: angle_min_deg must be < angle_max_deg");
    }
    if (!(f0_min_hz < f0_max_hz) || !(f0_min_hz > 0.0)) {
      throw std::invalid_argument("F0 mapping: need 0 < f0_min_hz < f0_max_hz");
    }
  }
};

struct F0Trajectory {
  std::vector<double> values_hz;

  static constexpr double dt_s = kControlStepS;

  std::size_t size() const noexcept { return values_hz.size(); }
};

struct AudioBuffer {
  double sample_rate_hz = 44100.0;
  std::vector<double> samples;

  void validate() const {
    for (double s : samples) {
      if (!(s >= -1.0 && s <= 1.0)) throw DataError("audio sample outside [-1, 1]");
    }
  }
};

/// Affine map; angles outside the range are clamped first so the result
/// always stays inside [f0_min, f0_max].
inline double map_angle_to_f0(const F0Mapping& map, double theta_deg) {
  if (!std::isfinite(theta_deg)) throw std::invalid_argument("angle must be finite");
  const double t = std::clamp(theta_deg, map.angle_min_deg, map.angle_max_deg);
  return map.f0_min_hz +
         (t - map.angle_min_deg) / (map.angle_max_deg - map.angle_min_deg) *
             (map.f0_max_hz - map.f0_min_hz);
}

inline F0Trajectory map_trajectory(const F0Mapping& map, const AngleTrajectory& angles) {
  map.validate();
  F0Trajectory out;
  out.values_hz.reserve(angles.size());
  for (double a : angles.angles_deg) out.values_hz.push_back(map_angle_to_f0(map, a));
  return out;
}

/// Phase-accumulating sine oscillator, F0 held for each 0.01 s step.
inline AudioBuffer synthesize(const F0Trajectory& f0, double sample_rate_hz = 44100.0,
                              double amplitude = 0.8) {
  if (f0.values_hz.empty()) throw std::invalid_argument("F0 trajectory is empty");
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) {
    throw std::invalid_argument("amplitude must be in [0, 1]");
  }
  const double per_step = sample_rate_hz * kControlStepS;
  const double per_step_rounded = std::round(per_step);
  if (!(per_step_rounded >= 1.0) || std::abs(per_step - per_step_rounded) > 1e-9) {
    throw std::invalid_argument("sample rate must be a positive multiple of 100 Hz");
  }
  for (double f : f0.values_hz) {
    if (!(f >= 0.0) || !(f < sample_rate_hz / 2.0)) {
      throw std::invalid_argument("F0 " + csv::format_double(f) +
                                  " Hz is not below the Nyquist frequency");
    }
  }

  const auto n_per_step = static_cast<std::size_t>(per_step_rounded);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  AudioBuffer buf;
  buf.sample_rate_hz = sample_rate_hz;
  buf.samples.reserve(f0.size() * n_per_step);
  double phase = 0.0;
  for (double f : f0.values_hz) {
    const double inc = two_pi * f / sample_rate_hz;
    for (std::size_t i = 0; i < n_per_step; ++i) {
      buf.samples.push_back(amplitude * std::sin(phase));
      phase += inc;
      if (phase >= two_pi) phase -= two_pi;
    }
  }
  return buf;
}

inline std::int16_t pcm16(double sample) {
  return static_cast<std::int16_t>(std::lround(sample * 32767.0));
}

/// Canonical 44-byte RIFF header, PCM mono 16-bit little-endian.
inline std::string encode_wav(const AudioBuffer& buf) {
  buf.validate();
  const auto rate = static_cast<std::uint32_t>(std::lround(buf.sample_rate_hz));
  const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  const auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  const auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
  };
  out += "RIFF";
  u32(36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  u32(16);
  u16(1);  // PCM
  u16(1);  // mono
  u32(rate);
  u32(rate * 2);
  u16(2);
  u16(16);
  out += "data";
  u32(data_bytes);
  for (double s : buf.samples) u16(static_cast<std::uint16_t>(pcm16(s)));
  return out;
}

inline void write_wav(const AudioBuffer& buf, const std::string& path) {
  const std::string bytes = encode_wav(buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

// F0 CSV: t_s,f0_hz at 0.01 s rows.

inline void write_f0_csv(const F0Trajectory& f0, const std::string& path) {
  std::string out = "t_s,f0_hz\n";
  for (std::size_t i = 0; i < f0.size(); ++i) {
    out += csv::format_double(static_cast<double>(i) * kControlStepS) + ',' +
           csv::format_double(f0.values_hz[i]) + '\n';
  }
  csv::write_file(path, out);
}

inline F0Trajectory read_f0_csv(const std::string& path) {
  const auto table = csv::read_file(path);
  const int col = table.column("f0_hz");
  if (col < 0) throw DataError("'" + path + "' has no f0_hz column");
  F0Trajectory f0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    f0.values_hz.push_back(csv::parse_double(table.rows[r][static_cast<std::size_t>(col)],
                                             path + ": row " + std::to_string(r + 1)));
  }
  return f0;
}

}  // namespace eegf0
