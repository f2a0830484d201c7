#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "semshare/rng.hpp"

namespace testutil {

// Central differences of f around x, one coordinate at a time.
inline std::vector<double> numeric_grad(const std::function<double()>& f, std::vector<double>& x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    worst = std::max(worst, d / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  }
  return worst;
}

inline std::vector<double> uniform_vec(semshare::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace testutil
