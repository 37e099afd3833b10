#pragma once

#include <vector>

#include "kernelcount/detect/detector.hpp"
#include "kernelcount/util/random.hpp"

namespace kc::testing {

/// Reference suppression without sorting: a detection survives iff no
/// surviving detection of higher priority (confidence, then earlier index)
/// overlaps it beyond the threshold. Solved by fixed-point iteration from
/// "everything survives", which settles in at most n rounds.
inline std::vector<std::size_t> nms_oracle(const std::vector<detect::Detection>& d, double threshold) {
  const std::size_t n = d.size();
  auto outranks = [&](std::size_t a, std::size_t b) {
    return d[a].confidence > d[b].confidence || (d[a].confidence == d[b].confidence && a < b);
  };
  std::vector<bool> alive(n, true);
  for (std::size_t round = 0; round <= n; ++round) {
    std::vector<bool> next(n, true);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && alive[j] && outranks(j, i) && iou(d[j].window, d[i].window) > threshold) {
          next[i] = false;
          break;
        }
      }
    }
    if (next == alive) break;
    alive = next;
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) kept.push_back(i);
  }
  return kept;
}

/// Up to `max_boxes` random windows clustered in a small field so overlaps
/// are common; confidences are drawn from a coarse grid so ties occur.
inline std::vector<detect::Detection> random_detections(Rng& rng, std::size_t max_boxes) {
  std::vector<detect::Detection> out(rng.below(max_boxes + 1));
  for (auto& d : out) {
    d.window = {static_cast<int>(rng.below(60)), static_cast<int>(rng.below(60)), 4 + static_cast<int>(rng.below(30)),
                4 + static_cast<int>(rng.below(30))};
    d.confidence = static_cast<float>(0.5 + 0.01 * static_cast<double>(rng.below(50)));
  }
  return out;
}

}  // namespace kc::testing
