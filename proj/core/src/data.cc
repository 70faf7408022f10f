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
#include "dct/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "dct/error.h"

namespace dct {

std::string DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kSyntheticClassification: return "synthetic-classification";
    case DatasetKind::kSyntheticRegression: return "synthetic-regression";
    case DatasetKind::kCsv: return "csv";
  }
  return "?";
}

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "synthetic-classification") return DatasetKind::kSyntheticClassification;
  if (name == "synthetic-regression") return DatasetKind::kSyntheticRegression;
  if (name == "csv") return DatasetKind::kCsv;
  throw Error(ErrorCode::kConfig, "unknown dataset kind '" + name + "'");
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  // splitmix64 over the combined words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1) + 0xBF58476D1CE4E5B9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Batch Dataset::Rows(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return Gather(rows);
}

Batch Dataset::Gather(const std::vector<std::size_t>& rows) const {
  Batch b{DenseMatrix(rows.size(), x.cols()), DenseMatrix(rows.size(), y.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.row(rows[i]).begin(), x.cols(), b.inputs.row(i).begin());
    std::copy_n(y.row(rows[i]).begin(), y.cols(), b.labels.row(i).begin());
  }
  return b;
}

namespace {

constexpr std::uint64_t kTagDirection = 11;
constexpr std::uint64_t kTagSamples = 12;
constexpr std::uint64_t kTagTeacher = 13;
constexpr std::uint64_t kTagShuffle = 14;

Dataset Classification(const DatasetSpec& spec) {
  std::mt19937_64 dir_rng(DeriveSeed(spec.seed, kTagDirection));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> u(spec.dims);
  for (double& v : u) v = normal(dir_rng);
  const double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
  for (double& v : u) v /= norm;

  std::mt19937_64 rng(DeriveSeed(spec.seed, kTagSamples));
  std::bernoulli_distribution coin(0.5);
  Dataset d{DenseMatrix(spec.samples, spec.dims), DenseMatrix(spec.samples, 1)};
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const bool positive = coin(rng);
    const double sign = positive ? 1.0 : -1.0;
    for (std::size_t j = 0; j < spec.dims; ++j) {
      d.x(i, j) = sign * spec.separation * u[j] + normal(rng);
    }
    d.y(i, 0) = positive ? 1.0 : 0.0;
  }
  return d;
}

Dataset Regression(const DatasetSpec& spec) {
  std::mt19937_64 teacher(DeriveSeed(spec.seed, kTagTeacher));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(spec.dims);
  for (double& v : w) v = normal(teacher);
  const double b = normal(teacher);

  std::mt19937_64 rng(DeriveSeed(spec.seed, kTagSamples));
  Dataset d{DenseMatrix(spec.samples, spec.dims), DenseMatrix(spec.samples, 1)};
  for (std::size_t i = 0; i < spec.samples; ++i) {
    double y = b;
    for (std::size_t j = 0; j < spec.dims; ++j) {
      d.x(i, j) = normal(rng);
      y += w[j] * d.x(i, j);
    }
    if (spec.noise > 0.0) y += spec.noise * normal(rng);
    d.y(i, 0) = y;
  }
  return d;
}

}  // namespace

Dataset GenerateSamples(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::kSyntheticClassification:
      if (spec.dims == 0 || spec.samples == 0) {
        throw Error(ErrorCode::kConfig, "synthetic dataset needs dims and samples > 0");
      }
      return Classification(spec);
    case DatasetKind::kSyntheticRegression:
      if (spec.dims == 0 || spec.samples == 0) {
        throw Error(ErrorCode::kConfig, "synthetic dataset needs dims and samples > 0");
      }
      return Regression(spec);
    case DatasetKind::kCsv:
      return LoadCsv(spec.path);
  }
  throw Error(ErrorCode::kConfig, "unknown dataset kind");
}

TrainTest MakeTrainTest(const DatasetSpec& spec) {
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "test_fraction must lie in [0, 1)");
  }
  Dataset all = GenerateSamples(spec);
  const std::size_t n = all.size();
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction));
  const std::size_t n_train = n - n_test;
  TrainTest tt;
  Batch train = all.Rows(0, n_train);
  Batch test = all.Rows(n_train, n);
  tt.train = Dataset{std::move(train.inputs), std::move(train.labels)};
  tt.test = Dataset{std::move(test.inputs), std::move(test.labels)};
  return tt;
}

Dataset LoadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kConfig, path + ": missing header row");
  const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2) throw Error(ErrorCode::kConfig, path + ": need at least one feature and a label");
  std::vector<double> xs, ys;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kConfig,
                    path + ":" + std::to_string(lineno) + ": non-numeric cell '" + cell + "'");
      }
      if (c + 1 < cols) xs.push_back(v);
      else ys.push_back(v);
      ++c;
    }
    if (c != cols) {
      throw Error(ErrorCode::kConfig, path + ":" + std::to_string(lineno) + ": expected " +
                                          std::to_string(cols) + " cells, got " + std::to_string(c));
    }
    if (ys.back() != 0.0 && ys.back() != 1.0) {
      throw Error(ErrorCode::kConfig, path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    }
    ++rows;
  }
  return Dataset{DenseMatrix(rows, cols - 1, std::move(xs)), DenseMatrix(rows, 1, std::move(ys))};
}

void WriteCsv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (std::size_t j = 0; j < data.x.cols(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.x.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y(i, 0));
    out << buf << '\n';
  }
}

double BayesAccuracy(double separation) {
  return 0.5 * std::erfc(-separation / std::sqrt(2.0));
}

double BayesCrossEntropy(double separation) {
  // Projection onto the cluster axis is N(m, 1) for the positive class; the
  // Bayes posterior log-odds there is 2*m*z. Integrate log(1+exp(-2mz)) over
  // the Gaussian with a fine trapezoid rule.
  const double m = separation;
  const double lo = m - 12.0, hi = m + 12.0;
  const int n = 24000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + h * i;
    const double pdf = std::exp(-0.5 * (z - m) * (z - m)) / std::sqrt(2.0 * M_PI);
    const double t = -2.0 * m * z;
    const double loss = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    acc += (i == 0 || i == n ? 0.5 : 1.0) * pdf * loss;
  }
  return acc * h;
}

BatchSchedule::BatchSchedule(std::size_t rows, std::size_t batch_size, std::uint64_t seed)
    : rows_(rows), batch_size_(batch_size), per_epoch_(batch_size == 0 ? 0 : rows / batch_size),
      seed_(seed) {
  if (batch_size == 0 || per_epoch_ == 0) {
    throw Error(ErrorCode::kConfig, "batch size must be in [1, training rows]");
  }
}

std::vector<std::size_t> BatchSchedule::RowsFor(std::uint64_t t) const {
  const std::uint64_t epoch = t / per_epoch_;
  const std::size_t within = static_cast<std::size_t>(t % per_epoch_);
  if (epoch != cached_epoch_) {
    perm_.resize(rows_);
    std::iota(perm_.begin(), perm_.end(), 0);
    std::mt19937_64 rng(DeriveSeed(seed_, kTagShuffle, epoch));
    // Fisher-Yates with an explicit draw so the order is stable across
    // standard library implementations.
    for (std::size_t i = rows_; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(perm_[i - 1], perm_[j]);
    }
    cached_epoch_ = epoch;
  }
  const auto& perm = perm_;
  return {perm.begin() + static_cast<std::ptrdiff_t>(within * batch_size_),
          perm.begin() + static_cast<std::ptrdiff_t>((within + 1) * batch_size_)};
}

}  // namespace dct
