#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kernelcount/data/dataset.hpp"
#include "kernelcount/models/models.hpp"

namespace kc::models {

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t iterations = 25000;
  double initial_lr = 0.0003;
  std::optional<double> reduced_lr = 0.0001;  // switched to once, on a test-loss plateau
  std::size_t plateau_patience = 8;           // evaluations without improvement
  double plateau_min_delta = 1e-4;
  std::size_t eval_every = 250;
  std::size_t log_every = 100;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  double augment_fraction = 0.7;
  std::size_t test_eval_cap = 1024;  // held-out samples used for logged test loss (0 = all)

  static TrainConfig classifier_defaults();
  static TrainConfig regressor_defaults();
};

struct HistoryRecord {
  std::size_t iteration = 0;
  double train_loss = 0.0;  // mean mini-batch loss since the previous record
  double test_loss = 0.0;
  double lr = 0.0;
};

using TrainHistory = std::vector<HistoryRecord>;

/// CSV with header `iteration,train_loss,test_loss,lr`.
std::string history_to_csv(const TrainHistory& history);

struct TrainResult {
  Net net;
  TrainHistory history;
  SplitIndices split;  // indices into the dataset passed to the trainer
};

/// The held-out split a trainer with this config uses for n samples, so other
/// models can be scored on the same partition.
SplitIndices training_split(std::size_t n, const TrainConfig& config);

/// Seeded split, augmentation of the training side, Adam on mean log loss.
/// Throws if either class is missing or a patch is not 32x32x3.
TrainResult train_classifier(const std::vector<PatchSample>& dataset, const TrainConfig& config);

/// Smooth-L1 on centers normalized to [0, 1]^2. Every sample must be a kernel
/// with a center inside its patch.
TrainResult train_regressor(const std::vector<PatchSample>& dataset, const TrainConfig& config);

/// Mean log loss / smooth-L1 of a trained network over the given samples (inference mode).
double classifier_loss(const Net& net, const std::vector<PatchSample>& samples);
double regressor_loss(const Net& net, const std::vector<PatchSample>& samples);

}  // namespace kc::models
