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
#ifndef DCT_DATA_H_
#define DCT_DATA_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dct/nn.h"
#include "dct/tensor.h"

namespace dct {

enum class DatasetKind { kSyntheticClassification, kSyntheticRegression, kCsv };

std::string DatasetKindName(DatasetKind kind);
DatasetKind ParseDatasetKind(const std::string& name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSyntheticClassification;
  std::size_t dims = 13;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
  // Classification: distance from each cluster mean to the Bayes boundary.
  double separation = 1.0;
  // Regression: standard deviation of additive label noise.
  double noise = 0.0;
  std::string path;  // csv only

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct Dataset {
  DenseMatrix x;
  DenseMatrix y;

  std::size_t size() const { return x.rows(); }
  Batch Rows(std::size_t begin, std::size_t end) const;
  Batch Gather(const std::vector<std::size_t>& rows) const;
  Batch All() const { return Rows(0, size()); }
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Deterministic in `spec.seed`: same spec, same bytes.
Dataset GenerateSamples(const DatasetSpec& spec);
// Generates (or loads) the samples and splits off the trailing test fraction.
TrainTest MakeTrainTest(const DatasetSpec& spec);

// Header row required; last column is the label.
Dataset LoadCsv(const std::string& path);
void WriteCsv(const std::string& path, const Dataset& data);

// Accuracy and mean cross-entropy of the Bayes-optimal classifier for the
// two-cluster generator.
double BayesAccuracy(double separation);
double BayesCrossEntropy(double separation);

/// Mini-batch order: epoch e visits the training rows in a permutation that
/// depends only on (seed, e). A trailing partial batch is dropped. Caches the
/// current epoch's permutation, so use one instance per thread.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t rows, std::size_t batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return per_epoch_; }
  std::size_t batch_size() const { return batch_size_; }
  // Rows of global batch number t.
  std::vector<std::size_t> RowsFor(std::uint64_t t) const;
  Batch Get(const Dataset& data, std::uint64_t t) const { return data.Gather(RowsFor(t)); }

 private:
  std::size_t rows_;
  std::size_t batch_size_;
  std::size_t per_epoch_;
  std::uint64_t seed_;
  mutable std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  mutable std::vector<std::size_t> perm_;
};

// Mixes a base seed with a stream tag so independent generators never share
// a sequence.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

}  // namespace dct

#endif  // DCT_DATA_H_
