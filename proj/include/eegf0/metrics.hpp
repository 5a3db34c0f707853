#pragma once

#include <cmath>
#include <cstddef>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>

namespace eegf0 {

namespace detail {

inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("length mismatch: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
  if (a == 0) throw std::invalid_argument("metrics need at least one element");
}

}  // namespace detail

/// Fraction of positions where prediction equals truth.
template <std::ranges::random_access_range R>
double accuracy(const R& pred, const R& truth) {
  const auto n = static_cast<std::size_t>(std::ranges::size(pred));
  detail::check_lengths(n, static_cast<std::size_t>(std::ranges::size(truth)));
  std::size_t hits = 0;
  auto p = std::ranges::begin(pred);
  auto t = std::ranges::begin(truth);
  for (; p != std::ranges::end(pred); ++p, ++t) hits += *p == *t ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(n);
}

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  detail::check_lengths(pred.size(), truth.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(truth[i])) {
      throw std::invalid_argument("rmse input is not finite");
    }
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

}  // namespace eegf0
