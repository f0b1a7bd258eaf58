#include "sanet/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "sanet/checkpoint.hpp"
#include "sanet/dataset.hpp"
#include "sanet/events.hpp"
#include "sanet/lanes.hpp"
#include "sanet/training.hpp"

namespace sanet {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kCodeVersion = "0.1.0";

std::string format_index(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%05d%s", prefix, i, ext);
  return buf;
}

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input: " + path);
  uint64_t hash = 0xCBF29CE484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<uint8_t>(buf[i]);
      hash *= 0x100000001B3ULL;
    }
  }
  return hash;
}

std::string hex64(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

/// Run manifest, written into the output directory before any heavy work.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& config,
                    const std::vector<std::string>& input_paths) {
  fs::create_directories(out_dir);
  json inputs = json::object();
  for (const auto& path : input_paths)
    inputs[fs::path(path).filename().string()] = hex64(fnv1a_file(path));
  json manifest = {{"command", command},
                   {"version", kCodeVersion},
                   {"config", config},
                   {"inputs", inputs}};
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      const int s = std::stoi(text);
      return {s, s};
    }
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("bad --size value: " + text + " (expected S or WxH)");
  }
}

std::string normalization_name(LossNormalization n) {
  return n == LossNormalization::kPerTermMean ? "per_term_mean"
                                              : "total_pixel_mean";
}

LossNormalization parse_normalization(const std::string& name) {
  if (name == "per_term_mean") return LossNormalization::kPerTermMean;
  if (name == "total_pixel_mean") return LossNormalization::kTotalPixelMean;
  throw ConfigError("unknown loss_normalization: " + name);
}

std::vector<std::string> direction_tokens(const std::vector<Direction>& dirs) {
  std::vector<std::string> tokens;
  for (Direction d : dirs) tokens.emplace_back(direction_token(d));
  return tokens;
}

struct TrainPaths {
  std::string train_dir;
  std::string eval_dir;
  std::string out_dir;
};

json train_config_json(const TrainConfig& config, const TrainPaths& paths) {
  return {{"batch_size", config.batch_size},
          {"initial_lr", config.initial_lr},
          {"power", config.power},
          {"max_iter", config.max_iter},
          {"momentum", config.momentum},
          {"lambda_bg", config.lambda_bg},
          {"lambda_lane", config.lambda_lane},
          {"seed", config.seed},
          {"kernel_size", config.kernel_size},
          {"directions", direction_tokens(config.directions)},
          {"channels", config.channels},
          {"n_classes", config.n_classes},
          {"eval_interval", config.eval_interval},
          {"loss_normalization", normalization_name(config.loss_normalization)},
          {"hflip", config.hflip},
          {"train_dir", paths.train_dir},
          {"eval_dir", paths.eval_dir},
          {"out_dir", paths.out_dir}};
}

void load_train_config(const std::string& path, TrainConfig& config,
                       TrainPaths& paths) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config: " + path);
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  try {
    config.batch_size = parsed.value("batch_size", config.batch_size);
    config.initial_lr = parsed.value("initial_lr", config.initial_lr);
    config.power = parsed.value("power", config.power);
    config.max_iter = parsed.value("max_iter", config.max_iter);
    config.momentum = parsed.value("momentum", config.momentum);
    config.lambda_bg = parsed.value("lambda_bg", config.lambda_bg);
    config.lambda_lane = parsed.value("lambda_lane", config.lambda_lane);
    config.seed = parsed.value("seed", config.seed);
    config.kernel_size = parsed.value("kernel_size", config.kernel_size);
    if (parsed.contains("directions")) {
      config.directions.clear();
      for (const auto& token : parsed["directions"])
        config.directions.push_back(parse_direction(token.get<std::string>()));
    }
    if (parsed.contains("channels")) {
      const auto& ch = parsed["channels"];
      if (!ch.is_array() || ch.size() != 3)
        throw ConfigError("config: channels must have 3 entries");
      for (size_t i = 0; i < 3; ++i) config.channels[i] = ch[i].get<int>();
    }
    config.n_classes = parsed.value("n_classes", config.n_classes);
    config.eval_interval = parsed.value("eval_interval", config.eval_interval);
    if (parsed.contains("loss_normalization"))
      config.loss_normalization =
          parse_normalization(parsed["loss_normalization"].get<std::string>());
    config.hflip = parsed.value("hflip", config.hflip);
    paths.train_dir = parsed.value("train_dir", paths.train_dir);
    paths.eval_dir = parsed.value("eval_dir", paths.eval_dir);
    paths.out_dir = parsed.value("out_dir", paths.out_dir);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
}

json train_record_json(const TrainRecord& record) {
  json line = {{"iter", record.iter}, {"lr", record.lr}, {"loss", record.loss}};
  if (record.mean_f1) line["mean_f1"] = *record.mean_f1;
  if (record.mean_iou) line["mean_iou"] = *record.mean_iou;
  return line;
}

// ---- subcommands ----------------------------------------------------------

int cmd_accumulate(const std::string& events_path, uint64_t dt_us, int clip,
                   const std::string& out_dir, const std::string& size_arg) {
  std::optional<std::pair<uint16_t, uint16_t>> resolution;
  if (!size_arg.empty()) {
    const auto [w, h] = parse_size(size_arg);
    resolution = {{static_cast<uint16_t>(w), static_cast<uint16_t>(h)}};
  }
  write_manifest(out_dir, "accumulate",
                 {{"events", events_path},
                  {"dt_us", dt_us},
                  {"clip", clip},
                  {"out", out_dir}},
                 {events_path});
  const EventStream stream = parse_events(events_path, resolution);
  const auto frames = accumulate(stream, dt_us);
  for (const auto& frame : frames) {
    GrayImage image(frame.width, frame.height);
    image.pixels = normalize_frame(frame, clip);
    write_png_gray(
        (fs::path(out_dir) /
         format_index("frame_", static_cast<int>(frame.window_index), ".png"))
            .string(),
        image);
  }
  json report = {{"n_events", stream.events.size()},
                 {"n_frames", frames.size()},
                 {"width", stream.width},
                 {"height", stream.height},
                 {"dt_us", dt_us}};
  std::ofstream report_file(fs::path(out_dir) / "frames.json");
  report_file << report.dump(2) << '\n';
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_rasterize(const std::string& labels_path, const std::string& size_arg,
                  double width_px, const std::string& out_dir) {
  const auto [w, h] = parse_size(size_arg);
  write_manifest(out_dir, "rasterize",
                 {{"labels", labels_path},
                  {"size", size_arg},
                  {"width_px", width_px},
                  {"out", out_dir}},
                 {labels_path});
  const auto lanes = read_annotations(labels_path);
  const auto raster = rasterize(lanes, width_px, w, h);
  write_png_mask((fs::path(out_dir) / "mask.png").string(), raster.mask);
  GrayImage binary(w, h);
  for (size_t i = 0; i < raster.binary.size(); ++i)
    binary.pixels[i] = raster.binary[i] ? 255 : 0;
  write_png_gray((fs::path(out_dir) / "binary.png").string(), binary);
  GrayImage black(w, h);
  write_png_rgb((fs::path(out_dir) / "color.png").string(),
                make_overlay(black, raster.mask));
  return 0;
}

int cmd_gen(int count, int size, int lanes, int occluders, double noise,
            double width_px, uint64_t seed, const std::string& out_dir) {
  write_manifest(out_dir, "gen",
                 {{"count", count},
                  {"size", size},
                  {"lanes", lanes},
                  {"occluders", occluders},
                  {"noise", noise},
                  {"width_px", width_px},
                  {"seed", seed},
                  {"out", out_dir}},
                 {});
  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "masks");
  fs::create_directories(fs::path(out_dir) / "annotations");
  Rng master(seed);
  for (int i = 0; i < count; ++i) {
    SceneConfig config;
    config.size = size;
    config.lanes = lanes;
    config.occluders = occluders;
    config.noise_density = noise;
    config.lane_width_px = width_px;
    config.seed = master.split(static_cast<uint64_t>(i)).seed();
    const Scene scene = gen_scene(config);
    const std::string stem = format_index("scene_", i, "");
    write_png_gray(
        (fs::path(out_dir) / "images" / (stem + ".png")).string(), scene.image);
    write_png_mask(
        (fs::path(out_dir) / "masks" / (stem + ".png")).string(), scene.mask);
    write_annotations(
        (fs::path(out_dir) / "annotations" / (stem + ".jsonl")).string(),
        scene.lanes);
  }
  std::cout << "generated " << count << " scenes in " << out_dir << '\n';
  return 0;
}

int cmd_split(const std::string& data_dir, uint64_t seed,
              const std::string& out_dir) {
  const fs::path images = fs::path(data_dir) / "images";
  if (!fs::is_directory(images))
    throw DataError("split: no images/ under " + data_dir);
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(images))
    if (entry.path().extension() == ".png" || entry.path().extension() == ".pgm")
      stems.push_back(entry.path().stem().string());
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw DataError("split: dataset is empty");

  write_manifest(out_dir, "split",
                 {{"data", data_dir}, {"seed", seed}, {"out", out_dir}}, {});

  Rng rng(seed);
  rng.shuffle(stems);
  const size_t n = stems.size();
  const auto n_train = static_cast<size_t>(std::llround(n * 0.5));
  const auto n_val = static_cast<size_t>(std::llround(n / 6.0));

  auto subset_of = [&](size_t index) {
    if (index < n_train) return "train";
    if (index < n_train + n_val) return "val";
    return "test";
  };
  json counts = {{"train", 0}, {"val", 0}, {"test", 0}};
  for (size_t i = 0; i < n; ++i) {
    const std::string subset = subset_of(i);
    counts[subset] = counts[subset].get<int>() + 1;
    for (const char* kind : {"images", "masks", "annotations"}) {
      const fs::path src_dir = fs::path(data_dir) / kind;
      if (!fs::is_directory(src_dir)) continue;
      for (const auto& entry : fs::directory_iterator(src_dir)) {
        if (entry.path().stem() != stems[i]) continue;
        const fs::path dst_dir = fs::path(out_dir) / subset / kind;
        fs::create_directories(dst_dir);
        fs::copy_file(entry.path(), dst_dir / entry.path().filename(),
                      fs::copy_options::overwrite_existing);
      }
    }
  }
  json report = {{"total", n}, {"counts", counts}, {"seed", seed}};
  std::ofstream report_file(fs::path(out_dir) / "split.json");
  report_file << report.dump(2) << '\n';
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_train(const TrainConfig& config, const TrainPaths& paths) {
  if (paths.train_dir.empty() || paths.eval_dir.empty() ||
      paths.out_dir.empty())
    throw ConfigError("train: train_dir, eval_dir and out_dir are required "
                      "(config file or --data/--out)");
  write_manifest(paths.out_dir, "train", train_config_json(config, paths), {});
  const Dataset train_set = load_dataset(paths.train_dir, config.n_classes);
  const Dataset eval_set = load_dataset(paths.eval_dir, config.n_classes);

  std::ofstream metrics_log(fs::path(paths.out_dir) / "metrics.jsonl",
                            std::ios::binary);
  if (!metrics_log)
    throw DataError("cannot write metrics log in " + paths.out_dir);
  const TrainResult result =
      train(config, train_set, eval_set, [&](const TrainRecord& record) {
        metrics_log << train_record_json(record).dump() << '\n';
      });

  save_checkpoint((fs::path(paths.out_dir) / "best.sanc").string(),
                  result.best_params);
  save_checkpoint((fs::path(paths.out_dir) / "final.sanc").string(),
                  result.params);
  json summary = {{"best_iter", result.best_iter},
                  {"best_mean_iou", result.best_mean_iou},
                  {"iterations", config.max_iter}};
  std::ofstream summary_file(fs::path(paths.out_dir) / "train.json");
  summary_file << summary.dump(2) << '\n';
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir,
             const std::string& report_path) {
  const SanetParams params = load_checkpoint(ckpt);
  const Dataset dataset = load_dataset(data_dir, params.config.n_classes);
  const ConfusionCounts counts = evaluate_dataset(params, dataset);
  const json report =
      evaluation_report(counts, static_cast<int>(dataset.size()));
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + report_path);
    out << report.dump(2) << '\n';
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& data_path,
              const std::string& out_dir) {
  const SanetParams params = load_checkpoint(ckpt);
  std::vector<fs::path> inputs;
  if (fs::is_directory(data_path)) {
    const fs::path dir = fs::is_directory(fs::path(data_path) / "images")
                             ? fs::path(data_path) / "images"
                             : fs::path(data_path);
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".png" ||
          entry.path().extension() == ".pgm")
        inputs.push_back(entry.path());
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.emplace_back(data_path);
  }
  if (inputs.empty()) throw DataError("infer: no input images in " + data_path);
  write_manifest(out_dir, "infer",
                 {{"ckpt", ckpt}, {"data", data_path}, {"out", out_dir}},
                 {ckpt});
  for (const auto& path : inputs) {
    const GrayImage image = path.extension() == ".png"
                                ? read_png_gray(path.string())
                                : read_pgm(path.string());
    const Tensor logits = sanet_forward(image_to_tensor(image), params);
    const ClassMask mask = predict_mask(logits);
    const std::string stem = path.stem().string();
    write_png_mask((fs::path(out_dir) / (stem + "_mask.png")).string(), mask);
    write_png_rgb((fs::path(out_dir) / (stem + "_overlay.png")).string(),
                  make_overlay(image, mask));
  }
  std::cout << "wrote " << inputs.size() << " predictions to " << out_dir
            << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Lane marker extraction for event-camera frames"};
  app.require_subcommand(1);

  // accumulate
  auto* accumulate_cmd =
      app.add_subcommand("accumulate", "Accumulate an event stream into frames");
  std::string events_path, out_dir, size_arg;
  uint64_t dt_us = 30000;
  int clip = 3;
  accumulate_cmd->add_option("--events", events_path, "Event file (.dve or .csv)")
      ->required();
  accumulate_cmd->add_option("--dt-us", dt_us, "Window length in microseconds");
  accumulate_cmd->add_option("--clip", clip, "Count clip for 8-bit rendering");
  accumulate_cmd->add_option("--out", out_dir, "Output directory")->required();
  accumulate_cmd->add_option("--size", size_arg,
                             "Sensor resolution WxH (CSV inputs only)");

  // rasterize
  auto* rasterize_cmd =
      app.add_subcommand("rasterize", "Rasterize lane annotations into masks");
  std::string labels_path, raster_size;
  double width_px = 20.0;
  rasterize_cmd->add_option("--labels", labels_path, "Annotation JSONL file")
      ->required();
  rasterize_cmd->add_option("--size", raster_size, "Image size S or WxH")
      ->required();
  rasterize_cmd->add_option("--width-px", width_px, "Lane width in pixels");
  rasterize_cmd->add_option("--out", out_dir, "Output directory")->required();

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic scenes");
  int count = 10, size = 128, lanes = 4, occluders = 2;
  double noise = 0.012, gen_width_px = 6.0;
  uint64_t seed = 0;
  gen_cmd->add_option("--count", count, "Number of scenes");
  gen_cmd->add_option("--size", size, "Square image size");
  gen_cmd->add_option("--lanes", lanes, "Lanes per scene (1-4)");
  gen_cmd->add_option("--occluders", occluders, "Occluding rectangles per scene");
  gen_cmd->add_option("--noise", noise, "Speckle noise density");
  gen_cmd->add_option("--width-px", gen_width_px, "Mask lane width in pixels");
  gen_cmd->add_option("--seed", seed, "Master seed");
  gen_cmd->add_option("--out", out_dir, "Output directory")->required();

  // split
  auto* split_cmd =
      app.add_subcommand("split", "Split a dataset 1/2 train, 1/6 val, 1/3 test");
  std::string data_dir;
  split_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  split_cmd->add_option("--seed", seed, "Shuffle seed");
  split_cmd->add_option("--out", out_dir, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a network");
  std::string config_path, directions_arg;
  TrainConfig train_config;
  TrainPaths train_paths;
  int max_iter_flag = -1, kernel_flag = -1;
  bool seed_given = false;
  train_cmd->add_option("--config", config_path, "Config JSON file");
  train_cmd->add_option("--data", data_dir,
                        "Dataset root (expects <root>/train and <root>/val)");
  train_cmd->add_option("--out", out_dir, "Output directory");
  train_cmd
      ->add_option("--seed", seed, "Seed override")
      ->each([&](const std::string&) { seed_given = true; });
  train_cmd->add_option("--max-iter", max_iter_flag, "Iteration override");
  train_cmd->add_option("--kernel-size", kernel_flag, "Slice kernel size");
  train_cmd->add_option("--directions", directions_arg,
                        "Comma list from {vd,vu,hl,hr,mdd,mdu,cdd,cdu}");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ckpt_path, report_path;
  eval_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--report", report_path, "Write the JSON report here");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Predict masks and overlays");
  infer_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  infer_cmd->add_option("--data", data_dir, "Image file or directory")
      ->required();
  infer_cmd->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n\n" << app.help() << '\n';
    return 1;
  }

  try {
    if (accumulate_cmd->parsed())
      return cmd_accumulate(events_path, dt_us, clip, out_dir, size_arg);
    if (rasterize_cmd->parsed())
      return cmd_rasterize(labels_path, raster_size, width_px, out_dir);
    if (gen_cmd->parsed())
      return cmd_gen(count, size, lanes, occluders, noise, gen_width_px, seed,
                     out_dir);
    if (split_cmd->parsed()) return cmd_split(data_dir, seed, out_dir);
    if (train_cmd->parsed()) {
      if (!config_path.empty())
        load_train_config(config_path, train_config, train_paths);
      if (seed_given) train_config.seed = seed;
      if (max_iter_flag > 0) train_config.max_iter = max_iter_flag;
      if (kernel_flag > 0) train_config.kernel_size = kernel_flag;
      if (!directions_arg.empty())
        train_config.directions = parse_direction_list(directions_arg);
      if (!data_dir.empty()) {
        train_paths.train_dir = (fs::path(data_dir) / "train").string();
        train_paths.eval_dir = (fs::path(data_dir) / "val").string();
      }
      if (!out_dir.empty()) train_paths.out_dir = out_dir;
      return cmd_train(train_config, train_paths);
    }
    if (eval_cmd->parsed()) return cmd_eval(ckpt_path, data_dir, report_path);
    if (infer_cmd->parsed()) return cmd_infer(ckpt_path, data_dir, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace sanet
