#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kernelcount/data/dataset.hpp"

namespace kc::eval {

struct ClassificationMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;  // 0 when precision + recall == 0
};

/// Positive class is Label::kernel.
ClassificationMetrics classification_metrics(std::span<const Label> predicted, std::span<const Label> actual);
ClassificationMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

struct CountingMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  /// Pearson r x 100; empty when either sequence has zero variance.
  std::optional<double> correlation;
};

CountingMetrics counting_metrics(std::span<const double> predicted, std::span<const double> actual);
double pearson(std::span<const double> a, std::span<const double> b);

struct CountRow {
  std::string id;
  double predicted = 0.0;
  double actual = 0.0;
};

/// "id,predicted,actual" table, one row per ear.
std::string counts_to_csv(const std::vector<CountRow>& rows);
std::vector<CountRow> counts_from_csv(const std::string& text);

nlohmann::json to_json(const ClassificationMetrics& m);
nlohmann::json to_json(const CountingMetrics& m);

}  // namespace kc::eval
