#include "cli.hpp"

#include <CLI11.hpp>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "bigreg/error.hpp"
#include "bigreg/evaluation.hpp"
#include "bigreg/parallel.hpp"
#include "bigreg/pipeline.hpp"
#include "bigreg/synthetic.hpp"
#include "bigreg/volume_io.hpp"

#ifndef BIGREG_VERSION
#define BIGREG_VERSION "unknown"
#endif

namespace bigreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

// A volume is two files; hash both.
json volume_input(const std::string& path) {
  return {{"path", path},
          {"payload_fnv1a64", fnv1a64_file(payload_path(path).string())},
          {"sidecar_fnv1a64", fnv1a64_file(sidecar_path(path).string())}};
}

json file_input(const std::string& path) { return {{"path", path}, {"fnv1a64", fnv1a64_file(path)}}; }

json to_json(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  json a = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a.push_back(m(r, c));
  return a;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::vector<int> parse_ints(const std::string& text, std::size_t count, const char* what) {
  std::vector<int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string(what) + ": bad integer '" + item + "'");
    }
  }
  if (v.size() != count)
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(count) + " comma-separated integers");
  return v;
}

std::optional<std::pair<int, int>> parse_range(const std::string& text, const char* what) {
  if (text.empty()) return std::nullopt;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument(std::string(what) + ": expected first:last");
  const auto v = parse_ints(text.substr(0, colon) + "," + text.substr(colon + 1), 2, what);
  return std::pair{v[0], v[1]};
}

// Config files hold flag names without dashes. They are expanded in front
// of the command-line arguments so the latter win (options take the last
// value given).
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open config " + *path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("config " + *path + ": " + e.what());
  }
  if (!cfg.is_object()) throw FormatError("config " + *path + ": expected a JSON object");
  std::vector<std::string> out{args.front()};
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& e : value) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      out.insert(out.end(), {flag, joined});
    } else if (value.is_string()) {
      out.insert(out.end(), {flag, value.get<std::string>()});
    } else if (value.is_number()) {
      out.insert(out.end(), {flag, value.dump()});
    } else {
      throw FormatError("config " + *path + ": unsupported value for '" + key + "'");
    }
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

class ThreadScope {
 public:
  explicit ThreadScope(int n) : previous_(thread_count()) {
    if (n > 0) set_thread_count(n);
  }
  ~ThreadScope() { set_thread_count(previous_); }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  int previous_;
};

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string dims = "256,256,128";
  std::string out;
  std::optional<double> max_translation;
  std::optional<double> crop_fraction;
  std::optional<double> noise_sigma;
  std::optional<double> tissue;
  std::optional<int> landmarks;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto d = parse_ints(a.dims, 3, "--dims");
  PhantomSpec spec = PhantomSpec::for_dims(Dims{d[0], d[1], d[2]});
  spec.seed = a.seed;
  if (a.max_translation) spec.max_translation = *a.max_translation;
  if (a.crop_fraction) spec.lsfm_crop_fraction = *a.crop_fraction;
  if (a.noise_sigma) spec.noise_sigma = *a.noise_sigma;
  if (a.tissue) spec.lsfm_tissue_thickness = *a.tissue;
  if (a.landmarks) spec.landmark_count = *a.landmarks;

  const PhantomPair p = generate_phantom(spec);
  const fs::path dir(a.out);
  ensure_dir(dir);
  save_volume(p.moving, dir / "moving");
  save_volume(p.fixed, dir / "fixed");
  save_transform(p.gt, dir / "gt.mat");
  save_landmarks(p.landmarks, dir / "landmarks.csv");

  json m;
  m["command"] = "synth";
  m["version"] = BIGREG_VERSION;
  m["seed"] = a.seed;
  m["config"] = {{"dims", {d[0], d[1], d[2]}},
                 {"voxel_size_um", spec.voxel_size_um},
                 {"max_translation", spec.max_translation},
                 {"crop_fraction", spec.lsfm_crop_fraction},
                 {"noise_sigma", spec.noise_sigma},
                 {"tissue", spec.lsfm_tissue_thickness},
                 {"landmarks", spec.landmark_count},
                 {"lacunae", spec.lacuna_count},
                 {"canals", spec.canal_count}};
  m["gt"] = to_json(p.gt);
  m["landmark_pairs"] = p.landmarks.size();
  m["outputs"] = {"moving.json", "moving.raw", "fixed.json", "fixed.raw", "gt.mat", "landmarks.csv"};
  write_json(m, dir / "manifest.json");
  out << "synth: wrote phantom pair with " << p.landmarks.size() << " landmarks to " << dir.string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------- register

struct RegisterArgs {
  std::string moving, fixed, out;
  std::string stages = "s11,s12,s2";
  std::string preset = "bone";
  std::uint64_t seed = 0;
  bool allow_partial = false;
  bool emit_moved = false;
  bool preprocess = false;
  std::string moving_slices, fixed_slices;
  std::string export_init;
  std::optional<double> moving_threshold, fixed_threshold, downsample, fpfh_radius, ransac_distance,
      ransac_confidence, icp_distance, icp_epsilon, unsharp_sigma, unsharp_weight, min_overlap;
  std::optional<int> closing_radius, normal_neighbors, fpfh_neighbors, icp_iterations;
  std::optional<std::int64_t> ransac_iterations;
  std::string search_window;
  bool full_search = false;
};

PipelineConfig build_config(const RegisterArgs& a) {
  PipelineConfig c;
  if (a.preset == "bone") c = PipelineConfig::bone();
  else if (a.preset == "phantom") c = PipelineConfig::phantom();
  else throw InvalidArgument("--preset must be 'bone' or 'phantom'");
  c.stages = StageToggles::parse(a.stages);
  c.allow_partial_stages = a.allow_partial;
  c.ransac.seed = a.seed;
  if (a.moving_threshold) c.moving_threshold = *a.moving_threshold;
  if (a.fixed_threshold) c.fixed_threshold = *a.fixed_threshold;
  if (a.closing_radius) c.closing_radius = *a.closing_radius;
  if (a.normal_neighbors) c.normal_neighbors = *a.normal_neighbors;
  if (a.downsample) c.stage1_downsample = *a.downsample;
  if (a.fpfh_radius) c.fpfh_radius = *a.fpfh_radius;
  if (a.fpfh_neighbors) c.fpfh_max_neighbors = *a.fpfh_neighbors;
  if (a.ransac_iterations) c.ransac.iterations = *a.ransac_iterations;
  if (a.ransac_distance) c.ransac.inlier_distance = *a.ransac_distance;
  if (a.ransac_confidence) c.ransac.confidence = *a.ransac_confidence;
  if (a.icp_distance) c.icp.max_correspondence_distance = *a.icp_distance;
  if (a.icp_iterations) c.icp.max_iterations = *a.icp_iterations;
  if (a.icp_epsilon) c.icp.epsilon = *a.icp_epsilon;
  if (a.unsharp_sigma) c.stage2.unsharp_sigma = *a.unsharp_sigma;
  if (a.unsharp_weight) c.stage2.unsharp_weight = *a.unsharp_weight;
  if (a.min_overlap) c.stage2.min_overlap_fraction = *a.min_overlap;
  if (!a.search_window.empty()) {
    const auto w = parse_ints(a.search_window, 3, "--search-window");
    c.stage2.half_window = Eigen::Vector3i(w[0], w[1], w[2]);
  }
  c.stage2.full_search = a.full_search;
  c.validate();
  return c;
}

json config_echo(const RegisterArgs& a, const PipelineConfig& c) {
  json s2 = {{"unsharp_sigma", c.stage2.unsharp_sigma},
             {"unsharp_weight", c.stage2.unsharp_weight},
             {"full_search", c.stage2.full_search},
             {"min_overlap_fraction", c.stage2.min_overlap_fraction},
             {"half_window", nullptr}};
  if (c.stage2.half_window)
    s2["half_window"] = {c.stage2.half_window->x(), c.stage2.half_window->y(), c.stage2.half_window->z()};
  return {{"preset", a.preset},
          {"stages", c.stages.str()},
          {"allow_partial_stages", c.allow_partial_stages},
          {"preprocess", a.preprocess},
          {"moving_slices", a.moving_slices},
          {"fixed_slices", a.fixed_slices},
          {"moving_threshold", c.moving_threshold},
          {"fixed_threshold", c.fixed_threshold},
          {"closing_radius", c.closing_radius},
          {"normal_neighbors", c.normal_neighbors},
          {"stage1_downsample", c.stage1_downsample},
          {"fpfh_radius", c.fpfh_radius},
          {"fpfh_max_neighbors", c.fpfh_max_neighbors},
          {"ransac",
           {{"iterations", c.ransac.iterations},
            {"inlier_distance", c.ransac.inlier_distance},
            {"confidence", c.ransac.confidence},
            {"edge_similarity", c.ransac.edge_similarity},
            {"seed", c.ransac.seed}}},
          {"icp",
           {{"max_correspondence_distance", c.icp.max_correspondence_distance},
            {"max_iterations", c.icp.max_iterations},
            {"epsilon", c.icp.epsilon}}},
          {"stage2", s2},
          {"intermediate_interpolation", to_string(c.intermediate_interpolation)},
          {"final_interpolation", to_string(c.final_interpolation)}};
}

int cmd_register(const RegisterArgs& a, std::ostream& out) {
  const PipelineConfig cfg = build_config(a);
  json inputs = {{"moving", volume_input(a.moving)}, {"fixed", volume_input(a.fixed)}};

  Volume moving = load_volume(a.moving);
  Volume fixed = load_volume(a.fixed);
  const PreprocessConfig pre{parse_range(a.moving_slices, "--moving-slices"),
                             parse_range(a.fixed_slices, "--fixed-slices")};
  if (a.preprocess) {
    VolumePair p = preprocess_pair(moving, fixed, pre);
    moving = std::move(p.moving);
    fixed = std::move(p.fixed);
  } else if (pre.moving_z_range || pre.fixed_z_range) {
    throw InvalidArgument("slice ranges need --preprocess");
  } else if (!(moving.dims() == fixed.dims()) || moving.voxel_size() != fixed.voxel_size()) {
    throw InvalidArgument("moving " + moving.dims().str() + " and fixed " + fixed.dims().str() +
                          " differ in dims or voxel size; pass --preprocess");
  }

  const RegistrationResult r = register_volumes(moving, fixed, cfg, a.emit_moved);

  const fs::path dir(a.out);
  ensure_dir(dir);
  save_transform(r.t_overall, dir / "t_overall.mat");
  json outputs = {"manifest.json", "t_overall.mat", "timings.json"};
  if (r.moved) {
    save_volume(*r.moved, dir / "moved");
    outputs.push_back("moved.json");
    outputs.push_back("moved.raw");
  }
  if (!a.export_init.empty()) {
    save_transform(r.t_overall, a.export_init);
    outputs.push_back(a.export_init);
  }

  json scores = json::object();
  if (r.ransac)
    scores["s11"] = {{"inlier_count", r.ransac->score.inlier_count},
                     {"fitness", r.ransac->score.fitness},
                     {"rmse", r.ransac->score.rmse},
                     {"iterations_run", r.ransac->iterations_run},
                     {"valid_hypotheses", r.ransac->valid_hypotheses},
                     {"best_iteration", r.ransac->best_iteration}};
  if (r.icp)
    scores["s12"] = {{"fitness", r.icp->score.fitness},
                     {"rmse", r.icp->score.rmse},
                     {"initial_loss", r.icp->initial_loss.loss},
                     {"final_loss", r.icp->final_loss.loss},
                     {"final_pairs", r.icp->final_loss.pairs},
                     {"iterations", r.icp->iterations},
                     {"converged", r.icp->converged},
                     {"no_correspondences", r.icp->no_correspondences}};
  if (r.stage2_peak)
    scores["s2"] = {{"shift", {r.stage2_peak->shift.dx, r.stage2_peak->shift.dy, r.stage2_peak->shift.dz}},
                    {"score", r.stage2_peak->score}};

  json m;
  m["command"] = "register";
  m["version"] = BIGREG_VERSION;
  m["seed"] = a.seed;
  m["inputs"] = inputs;
  m["config"] = config_echo(a, cfg);
  m["transforms"] = {{"t_11", to_json(r.t_11)}, {"t_12", to_json(r.t_12)}, {"t_1", to_json(r.t_1)},
                     {"t_2", to_json(r.t_2)}, {"t_overall", to_json(r.t_overall)}};
  m["scores"] = scores;
  m["surface_points"] = {{"moving", r.moving_points}, {"fixed", r.fixed_points}};
  m["outputs"] = outputs;
  write_json(m, dir / "manifest.json");

  // Wall-clock and thread count vary between reruns, so they stay out of the manifest.
  write_json({{"threads", thread_count()},
              {"surface_s", r.timings.surface_s},
              {"s11_s", r.timings.s11_s},
              {"s12_s", r.timings.s12_s},
              {"s2_s", r.timings.s2_s},
              {"resample_s", r.timings.resample_s}},
             dir / "timings.json");
  out << "register: " << cfg.stages.str() << " done, t_overall written to " << (dir / "t_overall.mat").string()
      << '\n';
  return kExitOk;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string transform, landmarks, gt, out;
  double voxel_size = 1.42;
  double tau = 12.0;
  std::int64_t gt_iterations = 100000;
  std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (!(a.voxel_size > 0.0)) throw InvalidArgument("--voxel-size must be positive");
  if (!(a.tau >= 0.0)) throw InvalidArgument("--tau must be non-negative");
  const RigidTransform t = load_transform(a.transform);
  const LandmarkSet l = load_landmarks(a.landmarks, a.voxel_size);
  if (l.empty()) throw FormatError("landmarks: no pairs in " + a.landmarks);
  RigidTransform gt;
  std::string gt_source;
  if (!a.gt.empty()) {
    gt = load_transform(a.gt);
    gt_source = "file";
  } else {
    gt = landmark_ransac_gt(l, a.gt_iterations, a.tau, a.seed).transform;
    gt_source = "landmark_ransac";
  }
  const Metrics mt = evaluate_metrics(l, t, gt, a.tau);
  const json metrics = {{"lmd_um", mt.lmd_um},
                        {"lm_fitness", mt.lm_fitness},
                        {"rot_err_deg", mt.rot_err_deg},
                        {"trans_err_um", mt.trans_err_um}};
  out << metrics.dump() << '\n';
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    ensure_dir(dir);
    write_json(metrics, dir / "metrics.json");
    json inputs = {{"transform", file_input(a.transform)}, {"landmarks", file_input(a.landmarks)}};
    if (!a.gt.empty()) inputs["gt"] = file_input(a.gt);
    write_json({{"command", "evaluate"},
                {"version", BIGREG_VERSION},
                {"seed", a.seed},
                {"inputs", inputs},
                {"config",
                 {{"voxel_size_um", a.voxel_size},
                  {"tau_um", a.tau},
                  {"gt_source", gt_source},
                  {"gt_iterations", a.gt_iterations}}},
                {"gt", to_json(gt)},
                {"outputs", {"manifest.json", "metrics.json"}}},
               dir / "manifest.json");
  }
  return kExitOk;
}

// --------------------------------------------------------------- render

struct RenderArgs {
  std::string volume, overlay, out;
  int tile = 16;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  if (a.tile < 1) throw InvalidArgument("--tile must be >= 1");
  const Volume v = load_volume(a.volume);
  std::optional<Volume> o;
  if (!a.overlay.empty()) {
    o = load_volume(a.overlay);
    if (!(o->dims() == v.dims()))
      throw InvalidArgument("overlay " + o->dims().str() + " and volume " + v.dims().str() + " dims differ");
  }
  const fs::path dir(a.out);
  ensure_dir(dir);
  json outputs = {"manifest.json"};
  for (const auto& [plane, name] : {std::pair{SlicePlane::XY, "xy"}, std::pair{SlicePlane::XZ, "xz"},
                                    std::pair{SlicePlane::YZ, "yz"}}) {
    Image8 img = central_slice(v, plane);
    if (o) img = checkerboard(img, central_slice(*o, plane), a.tile);
    const std::string file = std::string(name) + ".pgm";
    write_pgm(img, dir / file);
    outputs.push_back(file);
  }
  json inputs = {{"volume", volume_input(a.volume)}};
  if (o) inputs["overlay"] = volume_input(a.overlay);
  write_json({{"command", "render"},
              {"version", BIGREG_VERSION},
              {"inputs", inputs},
              {"config", {{"tile", a.tile}, {"overlay", o.has_value()}}},
              {"outputs", outputs}},
             dir / "manifest.json");
  out << "render: wrote " << (o ? "overlay " : "") << "slices to " << dir.string() << '\n';
  return kExitOk;
}

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  return app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal rigid registration of bone volumes (surface FPFH/RANSAC/ICP + masked NCC)", "bigreg"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", BIGREG_VERSION);
  std::string config_path;
  int threads = 0;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file supplying any flag");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores); outputs do not depend on it");
  };

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a phantom pair with ground truth and landmarks");
  synth->add_option("--seed", sa.seed, "Phantom seed")->capture_default_str();
  synth->add_option("--dims", sa.dims, "Grid size x,y,z")->capture_default_str();
  synth->add_option("--out", sa.out, "Output directory")->required();
  opt(synth, "--max-translation", sa.max_translation, "Largest pre-transform translation (voxels)");
  opt(synth, "--crop-fraction", sa.crop_fraction, "Share of the cross-section cut from the LSFM-like volume");
  opt(synth, "--noise-sigma", sa.noise_sigma, "Gaussian noise sigma (intensity units)");
  opt(synth, "--tissue", sa.tissue, "Thickness of the LSFM-only soft-tissue layer (voxels, 0 = none)");
  opt(synth, "--landmarks", sa.landmarks, "Maximum landmark count");
  common(synth);

  RegisterArgs ra;
  auto* reg = app.add_subcommand("register", "Register a moving volume onto a fixed volume");
  reg->add_option("--moving", ra.moving, "Moving volume (XRM)")->required();
  reg->add_option("--fixed", ra.fixed, "Fixed volume (LSFM)")->required();
  reg->add_option("--out", ra.out, "Output directory")->required();
  reg->add_option("--stages", ra.stages, "Comma-separated subset of s11,s12,s2")->capture_default_str();
  reg->add_option("--preset", ra.preset, "Parameter preset: bone or phantom")->capture_default_str();
  reg->add_option("--seed", ra.seed, "RANSAC seed")->capture_default_str();
  reg->add_flag("--allow-partial", ra.allow_partial, "Permit stage sets without s11");
  reg->add_flag("--emit-moved", ra.emit_moved, "Write the moving volume resampled by t_overall");
  reg->add_flag("--preprocess", ra.preprocess, "Resample, slice-crop, pad and normalize before registering");
  reg->add_option("--moving-slices", ra.moving_slices, "Moving z range first:last (with --preprocess)");
  reg->add_option("--fixed-slices", ra.fixed_slices, "Fixed z range first:last (with --preprocess)");
  reg->add_option("--export-init", ra.export_init, "Also write t_overall to this path");
  opt(reg, "--moving-threshold", ra.moving_threshold, "Moving surface threshold (strict)");
  opt(reg, "--fixed-threshold", ra.fixed_threshold, "Fixed surface threshold (strict)");
  opt(reg, "--closing-radius", ra.closing_radius, "Slice-wise closing radius before outlining");
  opt(reg, "--normal-neighbors", ra.normal_neighbors, "Neighbors for normal estimation");
  opt(reg, "--downsample", ra.downsample, "Stage-1.1 voxel-grid cell (voxels, 0 = off)");
  opt(reg, "--fpfh-radius", ra.fpfh_radius, "FPFH radius (voxels)");
  opt(reg, "--fpfh-neighbors", ra.fpfh_neighbors, "FPFH neighbor cap");
  opt(reg, "--ransac-iterations", ra.ransac_iterations, "RANSAC iteration cap");
  opt(reg, "--ransac-distance", ra.ransac_distance, "RANSAC inlier distance (voxels)");
  opt(reg, "--ransac-confidence", ra.ransac_confidence, "RANSAC early-exit confidence");
  opt(reg, "--icp-distance", ra.icp_distance, "ICP correspondence distance (voxels)");
  opt(reg, "--icp-iterations", ra.icp_iterations, "ICP iteration cap");
  opt(reg, "--icp-epsilon", ra.icp_epsilon, "ICP update-norm stopping threshold");
  opt(reg, "--unsharp-sigma", ra.unsharp_sigma, "Stage-2 unsharp-mask sigma (voxels)");
  opt(reg, "--unsharp-weight", ra.unsharp_weight, "Stage-2 unsharp-mask weight");
  opt(reg, "--min-overlap", ra.min_overlap, "Stage-2 minimum overlap fraction");
  reg->add_option("--search-window", ra.search_window, "Stage-2 half window x,y,z (default dims/4)");
  reg->add_flag("--full-search", ra.full_search, "Stage-2 search over every shift");
  common(reg);

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "Landmark metrics for a transform");
  eval->add_option("--transform", ea.transform, "Estimated transform (4x4 text)")->required();
  eval->add_option("--landmarks", ea.landmarks, "CSV with header mx,my,mz,fx,fy,fz (voxels)")->required();
  eval->add_option("--gt", ea.gt, "Ground-truth transform; derived from the landmarks when absent");
  eval->add_option("--voxel-size", ea.voxel_size, "Voxel size (um)")->capture_default_str();
  eval->add_option("--tau", ea.tau, "Landmark inlier threshold (um)")->capture_default_str();
  eval->add_option("--gt-iterations", ea.gt_iterations, "RANSAC iterations for the derived GT")
      ->capture_default_str();
  eval->add_option("--seed", ea.seed, "Seed for the derived GT")->capture_default_str();
  eval->add_option("--out", ea.out, "Directory for metrics.json and manifest.json");
  common(eval);

  RenderArgs rn;
  auto* render = app.add_subcommand("render", "Central-slice PGM renders, optionally as a checkerboard overlay");
  render->add_option("--volume", rn.volume, "Volume to render")->required();
  render->add_option("--overlay", rn.overlay, "Second volume for a checkerboard overlay");
  render->add_option("--tile", rn.tile, "Checkerboard tile size (pixels)")->capture_default_str();
  render->add_option("--out", rn.out, "Output directory")->required();
  common(render);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<const char*> argv{"bigreg"};
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << BIGREG_VERSION << '\n';
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "bigreg: " << e.what() << '\n';
      return kExitUsage;
    }
    if (threads < 0) throw InvalidArgument("--threads must be >= 0");
    const ThreadScope scope(threads);
    if (synth->parsed()) return cmd_synth(sa, out);
    if (reg->parsed()) return cmd_register(ra, out);
    if (eval->parsed()) return cmd_evaluate(ea, out);
    return cmd_render(rn, out);
  } catch (const StageError& e) {
    err << "bigreg: " << e.what() << '\n';
    return kExitFailure;
  } catch (const IoError& e) {
    err << "bigreg: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "bigreg: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "bigreg: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SpecInfeasible& e) {
    err << "bigreg: infeasible phantom: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "bigreg: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace bigreg::cli
