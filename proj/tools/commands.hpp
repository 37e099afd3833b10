#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kernelcount/detect/detector.hpp"

namespace kc::cli {

/// Thrown for bad input data or model files; maps to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenSyntheticArgs {
  std::size_t ears = 20;
  std::uint64_t seed = 0;
  std::string out;
  int width = 1024, height = 768;
  int rows_min = 16, rows_max = 24;
  int cols_min = 8, cols_max = 12;
  double max_jitter = 1.5, max_lighting = 0.4, max_angle = 15.0, hidden_ratio = 2.5;
};

struct BuildPatchesArgs {
  std::string images;
  std::size_t negatives = 400;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<std::size_t> iterations, batch_size;
  std::optional<double> lr, reduced_lr;
  double test_fraction = 0.2;
  std::string history;
};

struct TrainBaselineArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  double regularization = 1e-4;
  std::size_t epochs = 30;
  double test_fraction = 0.2;
};

struct ScanArgs {
  std::string image, classifier, regressor;
  detect::ScanConfig scan;
  bool include_timing = true;
};

struct CountArgs {
  ScanArgs scan;
  std::string images;  // directory of synthetic images with truth sidecars
  std::string table;   // id,predicted,actual output
  bool totals = false;
};

struct EvaluateArgs {
  std::string pred, truth;
};

struct OverlayArgs {
  std::string image, report, out;
  bool boxes = false;
  int radius = 2;
};

nlohmann::json gen_synthetic(const GenSyntheticArgs& a);
nlohmann::json build_patches(const BuildPatchesArgs& a);
nlohmann::json train_classifier(const TrainArgs& a);
nlohmann::json train_regressor(const TrainArgs& a);
nlohmann::json train_baseline(const TrainBaselineArgs& a);
nlohmann::json detect(const ScanArgs& a);
nlohmann::json count(const CountArgs& a);
nlohmann::json evaluate(const EvaluateArgs& a);
nlohmann::json overlay(const OverlayArgs& a);

}  // namespace kc::cli
