#include "kernelcount/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace kc::eval {

ClassificationMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  const std::size_t total = tp + fp + tn + fn;
  if (total == 0) throw std::invalid_argument("no samples to score");
  ClassificationMetrics m{tp, fp, tn, fn};
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const double pr = m.precision + m.recall;
  m.f_score = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

ClassificationMetrics classification_metrics(std::span<const Label> predicted, std::span<const Label> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("prediction and label counts differ");
  if (predicted.empty()) throw std::invalid_argument("no samples to score");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::kernel, a = actual[i] == Label::kernel;
    tp += p && a;
    fp += p && !a;
    tn += !p && !a;
    fn += !p && a;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sequence lengths differ");
  if (a.size() < 2) throw std::invalid_argument("correlation needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nan("");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CountingMetrics counting_metrics(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("sequence lengths differ");
  if (predicted.empty()) throw std::invalid_argument("no counts to score");
  CountingMetrics m;
  double sq = 0, ab = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - actual[i];
    sq += e * e;
    ab += std::abs(e);
  }
  const double n = static_cast<double>(predicted.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = ab / n;
  if (predicted.size() >= 2) {
    const double r = pearson(predicted, actual);
    if (!std::isnan(r)) m.correlation = 100.0 * r;
  }
  return m;
}

std::string counts_to_csv(const std::vector<CountRow>& rows) {
  std::string out = "id,predicted,actual\n";
  char buf[96];
  for (const auto& r : rows) {
    if (r.id.find_first_of(",\n") != std::string::npos) throw std::invalid_argument("ids may not contain commas");
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g\n", r.predicted, r.actual);
    out += r.id;
    out += buf;
  }
  return out;
}

std::vector<CountRow> counts_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty counts table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,predicted,actual") throw std::runtime_error("expected header 'id,predicted,actual', got '" + line + "'");
  std::vector<CountRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected 3 fields");
    }
    CountRow r;
    r.id = line.substr(0, c1);
    try {
      std::size_t used = 0;
      const std::string p = line.substr(c1 + 1, c2 - c1 - 1), a = line.substr(c2 + 1);
      r.predicted = std::stod(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      r.actual = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
    } catch (const std::logic_error&) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": counts must be numbers");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json to_json(const ClassificationMetrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"tn", m.tn},
          {"fn", m.fn},
          {"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f_score", m.f_score}};
}

nlohmann::json to_json(const CountingMetrics& m) {
  nlohmann::json j{{"rmse", m.rmse}, {"mae", m.mae}};
  j["correlation"] = m.correlation ? nlohmann::json(*m.correlation) : nlohmann::json(nullptr);
  return j;
}

}  // namespace kc::eval
