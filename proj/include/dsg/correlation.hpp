#pragma once

// Rank correlations with tie handling: Spearman's rho over average ranks and
// Kendall's tau-b.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "dsg/errors.hpp"

namespace dsg {

struct TieStats {
  std::size_t tied_groups = 0;  // groups of equal values with size >= 2
  std::size_t tied_pairs = 0;   // sum over groups of t(t-1)/2
};

struct CorrelationResult {
  double spearman_rho = 0;
  double kendall_tau = 0;
  std::size_t n = 0;
  TieStats x_ties;
  TieStats y_ties;
};

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DegenerateInputError("correlation inputs differ in length (" + std::to_string(x.size()) +
                               " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 2) throw DegenerateInputError("correlation needs at least 2 samples");
  for (auto v : {x, y})
    for (double d : v)
      if (!std::isfinite(d)) throw DegenerateInputError("correlation input is not finite");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double d) { return d == v.front(); });
  };
  if (constant(x) || constant(y))
    throw DegenerateInputError("correlation undefined for a constant input");
}

inline TieStats tie_stats(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  TieStats t;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    std::size_t len = j - i;
    if (len >= 2) {
      ++t.tied_groups;
      t.tied_pairs += len * (len - 1) / 2;
    }
    i = j;
  }
  return t;
}

// Counts inversions (strictly greater earlier element) while sorting.
inline std::uint64_t sort_count_inversions(std::vector<double>& v, std::vector<double>& buf,
                                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = sort_count_inversions(v, buf, lo, mid) + sort_count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace detail

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw DegenerateInputError("zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// Knight's O(n log n) tau-b: sort by (x, y), count y-inversions with merge sort.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::uint64_t n1 = 0, n3 = 0;  // pairs tied in x; pairs tied in both
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    n1 += static_cast<std::uint64_t>(j - i) * (j - i - 1) / 2;
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[idx[b]] == y[idx[a]]) ++b;
      n3 += static_cast<std::uint64_t>(b - a) * (b - a - 1) / 2;
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const std::uint64_t swaps = detail::sort_count_inversions(ys, buf, 0, n);
  const std::uint64_t n2 = detail::tie_stats(ys).tied_pairs;

  const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return std::clamp(num / den, -1.0, 1.0);
}

inline CorrelationResult correlate(std::span<const double> x, std::span<const double> y) {
  CorrelationResult r;
  r.spearman_rho = spearman_rho(x, y);
  r.kendall_tau = kendall_tau(x, y);
  r.n = x.size();
  r.x_ties = detail::tie_stats(x);
  r.y_ties = detail::tie_stats(y);
  return r;
}

}  // namespace dsg
