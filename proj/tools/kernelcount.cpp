#include <fstream>
#include <iostream>
#include <stdexcept>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace kc::cli;

std::string config_path;

CLI::App* command(CLI::App& app, const std::string& name, const std::string& help) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", config_path, "key=value file; command-line flags take precedence");
  return sub;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

/// Splices `--key=value` lines from the --config file in right after the
/// command name, skipping keys that also appear on the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::vector<std::string> injected;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (!given(args, key)) injected.push_back(key + "=" + trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void add_scan_options(CLI::App* sub, ScanArgs& a) {
  sub->add_option("--stride-x", a.scan.stride_x, "horizontal scan stride")->capture_default_str();
  sub->add_option("--stride-y", a.scan.stride_y, "vertical scan stride")->capture_default_str();
  sub->add_option("--threshold", a.scan.confidence_threshold, "confidence threshold")->capture_default_str();
  sub->add_option("--nms-iou", a.scan.nms_iou_threshold, "NMS overlap threshold")->capture_default_str();
  sub->add_option("--multiplier", a.scan.count_multiplier, "side-count multiplier")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corn kernel detection and counting"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string out;

  GenSyntheticArgs gen;
  auto* gen_cmd = command(app, "gen-synthetic", "render synthetic ears with truth sidecars");
  gen_cmd->add_option("--ears", gen.ears)->capture_default_str();
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_option("--out", out, "output directory")->required();
  gen_cmd->add_option("--width", gen.width)->capture_default_str();
  gen_cmd->add_option("--height", gen.height)->capture_default_str();
  gen_cmd->add_option("--rows-min", gen.rows_min)->capture_default_str();
  gen_cmd->add_option("--rows-max", gen.rows_max)->capture_default_str();
  gen_cmd->add_option("--cols-min", gen.cols_min)->capture_default_str();
  gen_cmd->add_option("--cols-max", gen.cols_max)->capture_default_str();
  gen_cmd->add_option("--max-jitter", gen.max_jitter)->capture_default_str();
  gen_cmd->add_option("--max-lighting", gen.max_lighting)->capture_default_str();
  gen_cmd->add_option("--max-angle", gen.max_angle)->capture_default_str();
  gen_cmd->add_option("--hidden-ratio", gen.hidden_ratio)->capture_default_str();

  BuildPatchesArgs patches;
  auto* patch_cmd = command(app, "build-patches", "cut kernel and non-kernel patches from synthetic ears");
  patch_cmd->add_option("--images", patches.images, "directory from gen-synthetic")->required();
  patch_cmd->add_option("--negatives", patches.negatives, "negatives per image")->capture_default_str();
  patch_cmd->add_option("--seed", seed);
  patch_cmd->add_option("--out", out, "output directory")->required();

  TrainArgs cls, reg;
  auto train_options = [&](CLI::App* sub, TrainArgs& a) {
    sub->add_option("--manifest", a.manifest)->required();
    sub->add_option("--seed", seed);
    sub->add_option("--out", out, "weight file")->required();
    sub->add_option("--iterations", a.iterations);
    sub->add_option("--batch-size", a.batch_size);
    sub->add_option("--lr", a.lr);
    sub->add_option("--test-fraction", a.test_fraction)->capture_default_str();
    sub->add_option("--history", a.history, "write the loss history CSV here");
  };
  auto* cls_cmd = command(app, "train-classifier", "train the kernel/non-kernel CNN");
  train_options(cls_cmd, cls);
  cls_cmd->add_option("--reduced-lr", cls.reduced_lr);
  auto* reg_cmd = command(app, "train-regressor", "train the center-regression CNN on kernel patches");
  train_options(reg_cmd, reg);

  TrainBaselineArgs base;
  auto* base_cmd = command(app, "train-baseline", "train the HOG+SVM comparison classifier");
  base_cmd->add_option("--manifest", base.manifest)->required();
  base_cmd->add_option("--seed", seed);
  base_cmd->add_option("--out", out, "SVM model file")->required();
  base_cmd->add_option("--regularization", base.regularization)->capture_default_str();
  base_cmd->add_option("--epochs", base.epochs)->capture_default_str();
  base_cmd->add_option("--test-fraction", base.test_fraction)->capture_default_str();

  ScanArgs det;
  auto* det_cmd = command(app, "detect", "sliding-window scan and NMS on one image");
  det_cmd->add_option("--image", det.image)->required();
  det_cmd->add_option("--classifier", det.classifier)->required();
  det_cmd->add_option("--regressor", det.regressor, "refine centers with this regressor");
  det_cmd->add_option("--seed", seed);
  add_scan_options(det_cmd, det);

  CountArgs cnt;
  auto* cnt_cmd = command(app, "count", "full pipeline; one image or a directory of synthetic ears");
  auto* cnt_image = cnt_cmd->add_option("--image", cnt.scan.image);
  auto* cnt_dir = cnt_cmd->add_option("--images", cnt.images, "directory with truth sidecars");
  cnt_image->excludes(cnt_dir);
  cnt_cmd->add_option("--classifier", cnt.scan.classifier)->required();
  cnt_cmd->add_option("--regressor", cnt.scan.regressor)->required();
  cnt_cmd->add_option("--out", cnt.table, "write an id,predicted,actual table (with --images)");
  cnt_cmd->add_flag("--totals", cnt.totals, "compare estimated totals instead of visible counts");
  cnt_cmd->add_flag("--timing,!--no-timing", cnt.scan.include_timing, "include wall-clock fields (default)");
  cnt_cmd->add_option("--seed", seed);
  add_scan_options(cnt_cmd, cnt.scan);

  EvaluateArgs ev;
  auto* ev_cmd = command(app, "evaluate", "counting metrics from id,predicted,actual tables");
  ev_cmd->add_option("--pred", ev.pred)->required();
  ev_cmd->add_option("--truth", ev.truth, "actual counts; defaults to the pred table's own column");
  ev_cmd->add_option("--seed", seed);

  OverlayArgs ov;
  auto* ov_cmd = command(app, "overlay", "draw detections from a report onto the image");
  ov_cmd->add_option("--image", ov.image)->required();
  ov_cmd->add_option("--report", ov.report, "JSON from count or detect")->required();
  ov_cmd->add_option("--out", out, "output image")->required();
  ov_cmd->add_flag("--boxes", ov.boxes);
  ov_cmd->add_option("--radius", ov.radius)->capture_default_str();
  ov_cmd->add_option("--seed", seed);

  try {
    auto args = expand_config(argc, argv);
    std::vector<char*> ptrs;
    for (auto& a : args) ptrs.push_back(a.data());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0 && app.get_subcommands().empty()) std::cerr << app.help();
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    nlohmann::json result;
    if (*gen_cmd) {
      gen.seed = seed;
      gen.out = out;
      result = gen_synthetic(gen);
    } else if (*patch_cmd) {
      patches.seed = seed;
      patches.out = out;
      result = build_patches(patches);
    } else if (*cls_cmd) {
      cls.seed = seed;
      cls.out = out;
      result = train_classifier(cls);
    } else if (*reg_cmd) {
      reg.seed = seed;
      reg.out = out;
      result = train_regressor(reg);
    } else if (*base_cmd) {
      base.seed = seed;
      base.out = out;
      result = train_baseline(base);
    } else if (*det_cmd) {
      result = detect(det);
    } else if (*cnt_cmd) {
      if (cnt.scan.image.empty() && cnt.images.empty()) {
        std::cerr << "count: one of --image or --images is required\n" << cnt_cmd->help();
        return 1;
      }
      result = count(cnt);
    } else if (*ev_cmd) {
      result = evaluate(ev);
    } else if (*ov_cmd) {
      ov.out = out;
      result = overlay(ov);
    }
    std::cout << result.dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
