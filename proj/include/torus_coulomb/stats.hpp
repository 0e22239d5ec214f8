#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace torus_coulomb {

inline constexpr int kMinBatches = 16;

/// Accumulates a time series into consecutive equal-size batches. Samples
/// beyond batches * batch_size are dropped.
class BatchMeans {
 public:
  BatchMeans(std::uint64_t samples, int batches) : batches_(batches) {
    if (batches < kMinBatches) {
      throw std::invalid_argument("batch means needs at least " + std::to_string(kMinBatches) +
                                  " batches");
    }
    if (samples < static_cast<std::uint64_t>(batches)) {
      throw std::invalid_argument("need at least one sample per batch: " + std::to_string(samples) +
                                  " samples for " + std::to_string(batches) + " batches");
    }
    batch_size_ = samples / static_cast<std::uint64_t>(batches);
    means_.reserve(static_cast<std::size_t>(batches));
  }

  void push(double value) {
    if (static_cast<int>(means_.size()) == batches_) return;
    running_ += value;
    if (++filled_ == batch_size_) {
      means_.push_back(running_ / static_cast<double>(batch_size_));
      running_ = 0.0;
      filled_ = 0;
    }
  }

  bool complete() const { return static_cast<int>(means_.size()) == batches_; }
  std::span<const double> means() const { return means_; }

 private:
  int batches_;
  std::uint64_t batch_size_ = 1;
  std::uint64_t filled_ = 0;
  double running_ = 0.0;
  std::vector<double> means_;
};

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean and standard error of independent batch means.
inline MeanWithError batch_statistics(std::span<const double> means) {
  if (means.size() < 2) throw std::invalid_argument("batch_statistics: need >= 2 batch means");
  double sum = 0.0;
  for (double m : means) sum += m;
  const double n = static_cast<double>(means.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace torus_coulomb
