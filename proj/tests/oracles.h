// Copyright 2026 The DCT Simulator Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
// Independent reference implementations used by the tests. None of these
// call into the library code they check.

#ifndef DCT_TESTS_ORACLES_H_
#define DCT_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

// Kept positions under "drop the floor(n*eta) smallest magnitudes, keep
// anything tied with the smallest survivor", found by exhaustive ranking.
inline std::vector<std::uint32_t> BruteForceKeep(const std::vector<double>& x, double eta) {
  const std::size_t n = x.size();
  const auto drop = static_cast<std::size_t>(std::floor(static_cast<double>(n) * eta));
  std::vector<std::uint32_t> out;
  if (drop < 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint32_t>(i));
    return out;
  }
  // The drop-th smallest magnitude: count how many entries are strictly
  // smaller for each candidate.
  double cut = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0;
    std::size_t equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(x[j]) < std::abs(x[i])) ++smaller;
      if (std::abs(x[j]) == std::abs(x[i])) ++equal;
    }
    if (smaller < drop && drop <= smaller + equal) cut = std::abs(x[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(x[i]) >= cut) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

// Central-difference derivative of f with respect to every entry of p.
inline std::vector<double> CentralDifferences(std::vector<double>& p,
                                              const std::function<double()>& f,
                                              double step = 1e-5) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + step;
    const double up = f();
    p[i] = orig - step;
    const double down = f();
    p[i] = orig;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// Least squares with intercept via Cholesky on the normal equations.
// x is n rows of d features; returns d weights then the intercept.
inline std::vector<double> CholeskyLeastSquares(const std::vector<std::vector<double>>& x,
                                                const std::vector<double>& y) {
  const std::size_t d = x.front().size() + 1;
  std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t r = 0; r < x.size(); ++r) {
    std::vector<double> row = x[r];
    row.push_back(1.0);
    for (std::size_t i = 0; i < d; ++i) {
      b[i] += row[i] * y[r];
      for (std::size_t j = 0; j < d; ++j) a[i][j] += row[i] * row[j];
    }
  }
  std::vector<std::vector<double>> l(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = i == j ? std::sqrt(s) : s / l[j][j];
    }
  }
  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * z[k];
    z[i] = s / l[i][i];
  }
  std::vector<double> w(d);
  for (std::size_t i = d; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = i + 1; k < d; ++k) s -= l[k][i] * w[k];
    w[i] = s / l[i][i];
  }
  return w;
}

// Closed-form frame sizes: 32-byte header plus the payload layout.
inline std::size_t DenseFrame(std::size_t rows, std::size_t cols) { return 32 + 4 * rows * cols; }
inline std::size_t BitmapFrame(std::size_t rows, std::size_t cols, std::size_t nnz) {
  return 32 + (rows * cols + 7) / 8 + 4 * nnz;
}
inline std::size_t IndexListFrame(std::size_t nnz) { return 32 + 4 + 8 * nnz; }

// Standard normal CDF.
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace oracle

#endif  // DCT_TESTS_ORACLES_H_
