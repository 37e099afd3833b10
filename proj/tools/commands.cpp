#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

#include "kernelcount/baseline/hog_svm.hpp"
#include "kernelcount/data/synthetic.hpp"
#include "kernelcount/eval/metrics.hpp"
#include "kernelcount/eval/overlay.hpp"
#include "kernelcount/models/train.hpp"
#include "kernelcount/nn/serialize.hpp"
#include "kernelcount/util/binary_io.hpp"

namespace fs = std::filesystem;

namespace kc::cli {

namespace {

std::vector<fs::path> synthetic_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto& p = e.path();
    if (e.is_regular_file() && (p.extension() == ".png" || p.extension() == ".ppm") &&
        fs::exists(truth_sidecar_path(p))) {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no images with truth sidecars in " + dir.string());
  return out;
}

PatchDataset load_dataset(const std::string& manifest_path) {
  PatchDataset ds;
  ds.manifest = read_manifest(manifest_path);
  ds.samples = load_samples(ds.manifest, fs::path(manifest_path).parent_path());
  return ds;
}

models::TrainConfig train_config(const TrainArgs& a, models::TrainConfig c) {
  c.seed = a.seed;
  c.test_fraction = a.test_fraction;
  if (a.iterations) c.iterations = *a.iterations;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.lr) c.initial_lr = *a.lr;
  if (a.reduced_lr) c.reduced_lr = *a.reduced_lr;
  return c;
}

nlohmann::json summary(const models::TrainResult& r) {
  nlohmann::json j{{"train_samples", r.split.train.size()}, {"test_samples", r.split.test.size()}};
  if (!r.history.empty()) {
    j["final_train_loss"] = r.history.back().train_loss;
    j["final_test_loss"] = r.history.back().test_loss;
    j["final_lr"] = r.history.back().lr;
  }
  return j;
}

std::vector<Label> labels_of(const std::vector<PatchSample>& samples) {
  std::vector<Label> out;
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

}  // namespace

nlohmann::json gen_synthetic(const GenSyntheticArgs& a) {
  EarSuiteOptions o;
  o.count = a.ears;
  o.width = a.width;
  o.height = a.height;
  o.rows_min = a.rows_min;
  o.rows_max = a.rows_max;
  o.cols_min = a.cols_min;
  o.cols_max = a.cols_max;
  o.max_jitter = a.max_jitter;
  o.max_lighting = a.max_lighting;
  o.max_angle_deg = a.max_angle;
  o.hidden_ratio = a.hidden_ratio;
  fs::create_directories(a.out);
  auto images = nlohmann::json::array();
  std::size_t i = 0;
  for (const auto& e : ear_suite(o, a.seed)) {
    const auto truth = generate_synthetic_ear(e.params, e.seed);
    char name[32];
    std::snprintf(name, sizeof name, "ear_%03zu.png", i++);
    const fs::path path = fs::path(a.out) / name;
    write_image(truth.image, path);
    write_truth(truth, path);
    images.push_back({{"path", path.string()},
                      {"visible_count", truth.visible_count},
                      {"rows", e.params.rows},
                      {"cols", e.params.cols},
                      {"angle_deg", e.params.angle_deg}});
  }
  return {{"seed", a.seed}, {"images", std::move(images)}};
}

nlohmann::json build_patches(const BuildPatchesArgs& a) {
  std::vector<SyntheticEarTruth> truths;
  for (const auto& p : synthetic_images(a.images)) truths.push_back(read_truth(p));
  const auto ds = build_patch_dataset(truths, a.negatives, a.seed);
  write_patch_dataset(ds.manifest, ds.samples, a.out);
  return {{"manifest", (fs::path(a.out) / "manifest.json").string()},
          {"images", truths.size()},
          {"kernel", ds.manifest.count(Label::kernel)},
          {"non_kernel", ds.manifest.count(Label::non_kernel)}};
}

nlohmann::json train_classifier(const TrainArgs& a) {
  const auto ds = load_dataset(a.manifest);
  const auto result = models::train_classifier(ds.samples, train_config(a, models::TrainConfig::classifier_defaults()));
  nn::save_weights(result.net, a.out);
  if (!a.history.empty()) io::write_text(a.history, models::history_to_csv(result.history));
  const auto test = select(ds.samples, result.split.test);
  auto j = summary(result);
  j["weights"] = a.out;
  j["test"] = eval::to_json(eval::classification_metrics(models::classify_samples(result.net, test), labels_of(test)));
  return j;
}

nlohmann::json train_regressor(const TrainArgs& a) {
  const auto ds = load_dataset(a.manifest);
  std::vector<PatchSample> kernels;
  for (const auto& s : ds.samples) {
    if (s.label == Label::kernel) kernels.push_back(s);
  }
  const auto result = models::train_regressor(kernels, train_config(a, models::TrainConfig::regressor_defaults()));
  nn::save_weights(result.net, a.out);
  if (!a.history.empty()) io::write_text(a.history, models::history_to_csv(result.history));
  auto j = summary(result);
  j["weights"] = a.out;
  j["test_mean_center_error_px"] = models::mean_center_error(result.net, select(kernels, result.split.test));
  return j;
}

nlohmann::json train_baseline(const TrainBaselineArgs& a) {
  const auto ds = load_dataset(a.manifest);
  models::TrainConfig split_cfg;
  split_cfg.seed = a.seed;
  split_cfg.test_fraction = a.test_fraction;
  const auto split = models::training_split(ds.samples.size(), split_cfg);
  const auto train = select(ds.samples, split.train);
  const auto test = select(ds.samples, split.test);
  baseline::HogSvmConfig cfg;
  cfg.regularization = a.regularization;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  const auto model = baseline::train_hog_svm(train, cfg);
  baseline::save_svm(a.out, model);
  return {{"weights", a.out},
          {"train_samples", train.size()},
          {"test_samples", test.size()},
          {"test", eval::to_json(eval::classification_metrics(baseline::predict_hog_svm(model, test), labels_of(test)))}};
}

nlohmann::json detect(const ScanArgs& a) {
  const auto image = read_image(a.image);
  const auto classifier = models::load_classifier(a.classifier);
  auto kept = detect::nms(detect::sliding_window_scan(image, classifier, a.scan).detections, a.scan.nms_iou_threshold);
  if (!a.regressor.empty()) kept = detect::refine_centers(image, std::move(kept), models::load_regressor(a.regressor));
  detect::CountReport r;
  r.visible_count = kept.size();
  r.estimated_total = detect::count_kernels(kept, a.scan.count_multiplier);
  r.detections = std::move(kept);
  return detect::report_to_json(r, false);
}

nlohmann::json count(const CountArgs& a) {
  const auto classifier = models::load_classifier(a.scan.classifier);
  const auto regressor = models::load_regressor(a.scan.regressor);
  if (a.images.empty()) {
    const auto report = detect::detect_and_count(read_image(a.scan.image), classifier, regressor, a.scan.scan);
    return detect::report_to_json(report, a.scan.include_timing);
  }
  std::vector<eval::CountRow> rows;
  auto reports = nlohmann::json::array();
  for (const auto& p : synthetic_images(a.images)) {
    const auto truth = read_truth(p);
    const auto report = detect::detect_and_count(truth.image, classifier, regressor, a.scan.scan);
    eval::CountRow row{p.filename().string(), 0.0, 0.0};
    if (a.totals) {
      row.predicted = static_cast<double>(report.estimated_total);
      row.actual = static_cast<double>(detect::count_kernels(truth.centers.size(), truth.hidden_ratio));
    } else {
      row.predicted = static_cast<double>(report.visible_count);
      row.actual = static_cast<double>(truth.visible_count);
    }
    rows.push_back(row);
    auto j = detect::report_to_json(report, a.scan.include_timing);
    j["id"] = row.id;
    j.erase("detections");
    reports.push_back(std::move(j));
  }
  if (!a.table.empty()) io::write_text(a.table, eval::counts_to_csv(rows));
  std::vector<double> pred, actual;
  for (const auto& r : rows) {
    pred.push_back(r.predicted);
    actual.push_back(r.actual);
  }
  return {{"images", std::move(reports)}, {"metrics", eval::to_json(eval::counting_metrics(pred, actual))}};
}

nlohmann::json evaluate(const EvaluateArgs& a) {
  const auto pred_rows = eval::counts_from_csv(io::read_text(a.pred));
  std::vector<eval::CountRow> truth_rows = a.truth.empty() ? pred_rows : eval::counts_from_csv(io::read_text(a.truth));
  std::map<std::string, double> actual_by_id;
  for (const auto& r : truth_rows) {
    if (!actual_by_id.emplace(r.id, r.actual).second) throw DataError("duplicate id in truth table: " + r.id);
  }
  std::vector<double> pred, actual;
  for (const auto& r : pred_rows) {
    const auto it = actual_by_id.find(r.id);
    if (it == actual_by_id.end()) throw DataError("id missing from truth table: " + r.id);
    pred.push_back(r.predicted);
    actual.push_back(it->second);
  }
  if (pred.size() != truth_rows.size()) throw DataError("prediction and truth tables list different ids");
  auto j = eval::to_json(eval::counting_metrics(pred, actual));
  j["n"] = pred.size();
  return j;
}

nlohmann::json overlay(const OverlayArgs& a) {
  const auto image = read_image(a.image);
  const auto doc = nlohmann::json::parse(io::read_text(a.report));
  std::vector<detect::Detection> dets;
  for (const auto& d : doc.at("detections")) {
    detect::Detection det;
    det.window = {d.at("x").get<int>(), d.at("y").get<int>(), d.at("w").get<int>(), d.at("h").get<int>()};
    det.confidence = d.at("confidence").get<float>();
    if (d.contains("cx") && !d["cx"].is_null()) det.center = PointF{d["cx"].get<double>(), d["cy"].get<double>()};
    dets.push_back(det);
  }
  eval::OverlayStyle style;
  style.draw_boxes = a.boxes;
  style.dot_radius = a.radius;
  write_image(eval::render_overlay(image, dets, style), a.out);
  return {{"out", a.out}, {"detections", dets.size()}};
}

}  // namespace kc::cli
