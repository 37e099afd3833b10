#include "kernelcount/models/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "kernelcount/data/augment.hpp"
#include "kernelcount/nn/loss.hpp"
#include "kernelcount/nn/optim.hpp"
#include "kernelcount/util/random.hpp"

namespace kc::models {

TrainConfig TrainConfig::classifier_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::regressor_defaults() {
  TrainConfig c;
  c.batch_size = 45;
  c.reduced_lr = std::nullopt;
  c.augment_fraction = 0.0;
  return c;
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out = "iteration,train_loss,test_loss,lr\n";
  char line[160];
  for (const auto& h : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g\n", h.iteration, h.train_loss, h.test_loss, h.lr);
    out += line;
  }
  return out;
}

namespace {

enum class Task { classify, regress };

constexpr std::size_t kPatchValues = static_cast<std::size_t>(kPatchSize) * kPatchSize * 3;
constexpr std::size_t kEvalChunk = 256;

void validate(const std::vector<PatchSample>& data, Task task) {
  const nn::Shape want{kPatchSize, kPatchSize, 3};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    if (s.patch.shape() != want) {
      throw std::invalid_argument("sample " + std::to_string(i) + " is " + nn::shape_string(s.patch.shape()) +
                                  ", expected 32x32x3");
    }
    if (task == Task::regress) {
      if (s.label != Label::kernel || !s.center) {
        throw std::invalid_argument("regressor sample " + std::to_string(i) + " has no kernel center");
      }
      const PointF c = *s.center;
      if (!(c.x >= 0 && c.x <= kPatchSize && c.y >= 0 && c.y <= kPatchSize)) {
        throw std::invalid_argument("regressor sample " + std::to_string(i) + " has its center outside the patch");
      }
    }
    pos += s.label == Label::kernel ? 1 : 0;
  }
  if (task == Task::classify && (pos == 0 || pos == data.size())) {
    throw std::invalid_argument("classifier training needs both kernel and non-kernel samples (have " +
                                std::to_string(pos) + " kernel of " + std::to_string(data.size()) + ")");
  }
  if (data.empty()) throw std::invalid_argument("empty training set");
}

std::size_t target_width(Task task) { return task == Task::classify ? 1 : 2; }

void fill_batch(const std::vector<PatchSample>& data, std::span<const std::size_t> idx, Task task,
                nn::Tensor<float>& x, nn::Tensor<float>& y) {
  const std::size_t n = idx.size(), tw = target_width(task);
  x = nn::Tensor<float>({n, kPatchSize, kPatchSize, 3});
  y = nn::Tensor<float>({n, tw});
  for (std::size_t b = 0; b < n; ++b) {
    const auto& s = data[idx[b]];
    std::memcpy(x.data() + b * kPatchValues, s.patch.data(), kPatchValues * sizeof(float));
    if (task == Task::classify) {
      y[b] = s.label == Label::kernel ? 1.0f : 0.0f;
    } else {
      y[2 * b] = static_cast<float>(s.center->x / kPatchSize);
      y[2 * b + 1] = static_cast<float>(s.center->y / kPatchSize);
    }
  }
}

nn::LossValue<float> loss_of(const nn::Tensor<float>& pred, const nn::Tensor<float>& target, Task task) {
  return task == Task::classify ? nn::bce_loss(pred, target) : nn::smooth_l1_loss(pred, target);
}

double mean_loss(const Net& net, const std::vector<PatchSample>& data, std::span<const std::size_t> idx, Task task) {
  double total = 0.0;
  nn::Tensor<float> x, y;
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), start + kEvalChunk);
    fill_batch(data, idx.subspan(start, end - start), task, x, y);
    total += loss_of(net.infer(x), y, task).value * static_cast<double>(end - start);
  }
  return idx.empty() ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(idx.size());
}

TrainResult train(const std::vector<PatchSample>& dataset, const TrainConfig& config, Task task) {
  validate(dataset, task);
  if (config.batch_size == 0 || config.iterations == 0) throw std::invalid_argument("batch size and iterations must be positive");
  if (config.log_every == 0 || config.eval_every == 0) throw std::invalid_argument("logging cadences must be positive");

  Rng rng(config.seed);
  const std::uint64_t split_seed = rng.fork();
  const std::uint64_t augment_seed = rng.fork();
  const std::uint64_t init_seed = rng.fork();
  Rng order_rng(rng.fork());

  TrainResult result{task == Task::classify ? build_classifier<float>(init_seed) : build_regressor<float>(init_seed),
                     {},
                     split_indices(dataset.size(), config.test_fraction, split_seed)};
  if (task == Task::classify) {
    const auto train_pos = std::count_if(result.split.train.begin(), result.split.train.end(),
                                         [&](std::size_t i) { return dataset[i].label == Label::kernel; });
    if (train_pos == 0 || static_cast<std::size_t>(train_pos) == result.split.train.size()) {
      throw std::invalid_argument("training split lost a class; provide more samples of each label");
    }
  }

  const std::vector<PatchSample> train_set =
      augment_training_set(select(dataset, result.split.train), config.augment_fraction, augment_seed);
  const std::vector<PatchSample> test_set = select(dataset, result.split.test);
  std::vector<std::size_t> test_idx(test_set.size());
  for (std::size_t i = 0; i < test_idx.size(); ++i) test_idx[i] = i;
  if (config.test_eval_cap > 0 && test_idx.size() > config.test_eval_cap) test_idx.resize(config.test_eval_cap);

  Net& net = result.net;
  nn::Adam<float> adam(net.params());
  double lr = config.initial_lr;
  bool reduced = false;
  double best_test = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  std::vector<std::size_t> order = permutation(train_set.size(), order_rng);
  std::size_t cursor = 0;
  std::vector<std::size_t> batch(config.batch_size);
  nn::Tensor<float> x, y;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (auto& b : batch) {
      if (cursor == order.size()) {
        order = permutation(train_set.size(), order_rng);
        cursor = 0;
      }
      b = order[cursor++];
    }
    fill_batch(train_set, batch, task, x, y);
    net.zero_grad();
    const auto pred = net.forward(x, nn::Mode::train);
    const auto loss = loss_of(pred, y, task);
    net.backward(loss.gradient);
    adam.step(lr);
    loss_sum += loss.value;
    ++loss_count;

    const bool log_now = it % config.log_every == 0 || it == config.iterations;
    const bool eval_now = it % config.eval_every == 0;
    if (!log_now && !eval_now) continue;
    net.clear_cache();
    const double test_loss = mean_loss(net, test_set, test_idx, task);
    if (log_now) {
      result.history.push_back({it, loss_sum / static_cast<double>(loss_count), test_loss, lr});
      loss_sum = 0.0;
      loss_count = 0;
    }
    if (eval_now && config.reduced_lr && !reduced) {
      if (test_loss < best_test - config.plateau_min_delta) {
        best_test = test_loss;
        stale = 0;
      } else if (++stale >= config.plateau_patience) {
        lr = *config.reduced_lr;
        reduced = true;
      }
    }
  }
  net.clear_cache();
  return result;
}

}  // namespace

SplitIndices training_split(std::size_t n, const TrainConfig& config) {
  Rng rng(config.seed);
  return split_indices(n, config.test_fraction, rng.fork());
}

TrainResult train_classifier(const std::vector<PatchSample>& dataset, const TrainConfig& config) {
  return train(dataset, config, Task::classify);
}

TrainResult train_regressor(const std::vector<PatchSample>& dataset, const TrainConfig& config) {
  return train(dataset, config, Task::regress);
}

double classifier_loss(const Net& net, const std::vector<PatchSample>& samples) {
  validate(samples, Task::classify);
  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return mean_loss(net, samples, idx, Task::classify);
}

double regressor_loss(const Net& net, const std::vector<PatchSample>& samples) {
  validate(samples, Task::regress);
  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return mean_loss(net, samples, idx, Task::regress);
}

}  // namespace kc::models
