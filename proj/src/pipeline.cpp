#include "voxedit/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "voxedit/grid_io.hpp"

namespace voxedit {

namespace {

std::string floor_mode_name(AnnealFloor m) { return m == AnnealFloor::kClamp ? "clamp" : "freeze"; }

AnnealFloor parse_floor_mode(const std::string& s) {
  if (s == "freeze") return AnnealFloor::kFreezeLast;
  if (s == "clamp") return AnnealFloor::kClamp;
  throw std::invalid_argument("unknown anneal floor mode: " + s);
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  const EditConfig& e = cfg.edit;
  const AnnealSchedule& a = e.schedule;
  nlohmann::json d;
  d["resolution"] = cfg.recon.resolution;
  d["bounds_min"] = {cfg.recon.bounds.min.x(), cfg.recon.bounds.min.y(), cfg.recon.bounds.min.z()};
  d["bounds_max"] = {cfg.recon.bounds.max.x(), cfg.recon.bounds.max.y(), cfg.recon.bounds.max.z()};
  d["recon_epochs"] = cfg.recon.epochs;
  d["recon_iterations"] = cfg.recon.iterations;
  d["recon_lr"] = cfg.recon.lr;
  d["init_density"] = cfg.recon.init_density;
  d["edit_iterations"] = e.iterations;
  d["edit_lr"] = e.lr;
  d["reg"] = regularizer_name(e.reg.kind);
  d["reg_weight"] = e.reg.weight;
  if (e.guidance_scale) d["guidance_scale"] = *e.guidance_scale;
  d["anneal"] = {{"epsilon", a.epsilon},   {"i_start", a.i_start}, {"period", a.period},
                 {"gamma", a.gamma},       {"k_floor", a.k_floor}, {"t0", a.t0},
                 {"t_final", a.t_final},   {"floor_mode", floor_mode_name(a.floor_mode)}};
  d["render_resolution"] = e.poses.width;
  d["samples_per_ray"] = e.render.samples_per_ray;
  d["background"] = e.render.background;
  d["pose_radius"] = e.poses.radius;
  d["elevation_min_deg"] = e.poses.elevation_min_deg;
  d["elevation_max_deg"] = e.poses.elevation_max_deg;
  d["fov_x"] = e.poses.fov_x;
  d["attn_iterations"] = cfg.lift.iterations;
  d["attn_lr"] = cfg.lift.lr;
  d["attn_timestep"] = cfg.lift.timestep;
  d["sigma"] = cfg.segment.sigma;
  d["lambda"] = cfg.segment.lambda;
  d["edit_seeds"] = cfg.segment.edit_seeds;
  d["obj_seeds"] = cfg.segment.object_seeds;
  d["unary"] = cfg.segment.unary == UnaryMode::kSoft ? "soft" : "seeds";
  d["unary_weight"] = cfg.segment.unary_weight;

  nlohmann::json j;
  j["dataset"] = cfg.dataset.string();
  j["input_grid"] = cfg.input_grid.string();
  j["output_dir"] = cfg.output_dir.string();
  j["attention_maps"] = cfg.attention_maps.string();
  j["prompt"] = cfg.prompt;
  j["edit_token"] = cfg.edit_token;
  j["backend"] = cfg.backend;
  j["seed"] = cfg.seed;
  j["skip_refine"] = cfg.skip_refine;
  j["defaults"] = d;
  return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.dataset = j.value("dataset", std::string());
  cfg.input_grid = j.value("input_grid", std::string());
  cfg.output_dir = j.value("output_dir", std::string("."));
  cfg.attention_maps = j.value("attention_maps", std::string());
  cfg.prompt = j.value("prompt", std::string());
  cfg.edit_token = j.value("edit_token", std::string());
  cfg.backend = j.value("backend", std::string());
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.skip_refine = j.value("skip_refine", false);

  const nlohmann::json d = j.value("defaults", nlohmann::json::object());
  read_opt(d, "resolution", cfg.recon.resolution);
  if (d.contains("bounds_min")) {
    const auto v = d.at("bounds_min").get<std::array<double, 3>>();
    cfg.recon.bounds.min = Vec3(v[0], v[1], v[2]);
  }
  if (d.contains("bounds_max")) {
    const auto v = d.at("bounds_max").get<std::array<double, 3>>();
    cfg.recon.bounds.max = Vec3(v[0], v[1], v[2]);
  }
  read_opt(d, "recon_epochs", cfg.recon.epochs);
  read_opt(d, "recon_iterations", cfg.recon.iterations);
  read_opt(d, "recon_lr", cfg.recon.lr);
  read_opt(d, "init_density", cfg.recon.init_density);

  EditConfig& e = cfg.edit;
  read_opt(d, "edit_iterations", e.iterations);
  read_opt(d, "edit_lr", e.lr);
  if (d.contains("reg")) e.reg.kind = parse_regularizer(d.at("reg").get<std::string>());
  read_opt(d, "reg_weight", e.reg.weight);
  if (d.contains("guidance_scale")) e.guidance_scale = d.at("guidance_scale").get<double>();
  if (d.contains("anneal")) {
    const auto& a = d.at("anneal");
    read_opt(a, "epsilon", e.schedule.epsilon);
    read_opt(a, "i_start", e.schedule.i_start);
    read_opt(a, "period", e.schedule.period);
    read_opt(a, "gamma", e.schedule.gamma);
    read_opt(a, "k_floor", e.schedule.k_floor);
    read_opt(a, "t0", e.schedule.t0);
    read_opt(a, "t_final", e.schedule.t_final);
    if (a.contains("floor_mode")) e.schedule.floor_mode = parse_floor_mode(a.at("floor_mode").get<std::string>());
  }
  int res = e.poses.width;
  read_opt(d, "render_resolution", res);
  e.poses.width = e.poses.height = res;
  read_opt(d, "samples_per_ray", e.render.samples_per_ray);
  read_opt(d, "background", e.render.background);
  read_opt(d, "pose_radius", e.poses.radius);
  read_opt(d, "elevation_min_deg", e.poses.elevation_min_deg);
  read_opt(d, "elevation_max_deg", e.poses.elevation_max_deg);
  read_opt(d, "fov_x", e.poses.fov_x);
  e.poses.center = cfg.recon.bounds.center();
  e.prompt = cfg.prompt;
  e.seed = cfg.seed;
  cfg.recon.render = e.render;
  cfg.recon.seed = cfg.seed;

  read_opt(d, "attn_iterations", cfg.lift.iterations);
  read_opt(d, "attn_lr", cfg.lift.lr);
  read_opt(d, "attn_timestep", cfg.lift.timestep);
  cfg.lift.poses = e.poses;
  cfg.lift.render = e.render;
  cfg.lift.prompt = cfg.prompt;
  cfg.lift.token = cfg.edit_token;
  cfg.lift.seed = cfg.seed + 1;

  read_opt(d, "sigma", cfg.segment.sigma);
  read_opt(d, "lambda", cfg.segment.lambda);
  read_opt(d, "edit_seeds", cfg.segment.edit_seeds);
  read_opt(d, "obj_seeds", cfg.segment.object_seeds);
  if (d.contains("unary")) {
    const auto u = d.at("unary").get<std::string>();
    if (u != "seeds" && u != "soft") throw std::invalid_argument("unary must be seeds or soft");
    cfg.segment.unary = u == "soft" ? UnaryMode::kSoft : UnaryMode::kSeeds;
  }
  read_opt(d, "unary_weight", cfg.segment.unary_weight);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return pipeline_config_from_json(nlohmann::json::parse(in));
}

namespace {

class ManifestWriter {
 public:
  ManifestWriter(const PipelineConfig& cfg, std::string backend)
      : path_(cfg.output_dir / "manifest.json") {
    j_ = pipeline_config_to_json(cfg);
    j_["version"] = kVersion;
    j_["backend_resolved"] = std::move(backend);
    j_["stage_seeds"] = {{"reconstruct", cfg.recon.seed},
                         {"edit", cfg.edit.seed},
                         {"lift_edit", cfg.lift.seed},
                         {"lift_object", cfg.lift.seed + 1}};
    j_["artifacts"] = nlohmann::json::object();
    j_["completed_stages"] = nlohmann::json::array();
  }

  void artifact(const std::string& name, const std::filesystem::path& p) { j_["artifacts"][name] = p.filename().string(); }
  void completed(const std::string& stage) { j_["completed_stages"].push_back(stage); }
  void failed(const std::string& stage, const std::string& what) {
    j_["failed_stage"] = stage;
    j_["error"] = what;
  }
  void warnings(const std::vector<std::string>& w) { j_["warnings"] = w; }
  void write() const {
    std::ofstream out(path_);
    out << j_.dump(2) << '\n';
  }

 private:
  std::filesystem::path path_;
  nlohmann::json j_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, GuidanceBackend* backend) {
  std::filesystem::create_directories(cfg.output_dir);
  std::unique_ptr<GuidanceBackend> owned;
  PipelineResult result;
  std::string stage = "setup";
  ManifestWriter manifest(cfg, backend ? backend->describe() : resolve_backend_spec(cfg.backend));

  const auto out = [&](const std::string& name) {
    const auto p = cfg.output_dir / name;
    result.artifacts[name] = p;
    manifest.artifact(name, p);
    return p;
  };

  try {
    if (!backend) {
      owned = make_backend(resolve_backend_spec(cfg.backend), cfg.edit.render);
      backend = owned.get();
    }

    stage = "reconstruct";
    Dataset dataset;
    if (!cfg.dataset.empty()) dataset = load_dataset(cfg.dataset);
    if (!cfg.input_grid.empty()) {
      result.initial = load_feature_grid(cfg.input_grid);
    } else if (!dataset.views.empty()) {
      result.initial = reconstruct(dataset, cfg.recon);
    } else {
      throw std::invalid_argument("either dataset or input_grid is required");
    }
    save_grid(out("gi.voxe"), result.initial);
    manifest.completed(stage);

    stage = "edit";
    EditConfig ecfg = cfg.edit;
    if (!dataset.views.empty()) ecfg.reference_views = &dataset;
    result.edited = edit(result.initial, ecfg, *backend);
    save_grid(out("ge.voxe"), result.edited);
    manifest.completed(stage);

    if (cfg.skip_refine) {
      result.refined = result.edited;
    } else {
      stage = "lift-attn";
      LiftConfig obj_cfg = cfg.lift;
      obj_cfg.seed = cfg.lift.seed + 1;
      if (!cfg.attention_maps.empty()) {
        result.attention_edit =
            lift_attention(result.edited, load_attention_maps(cfg.attention_maps, AttentionRole::kEdit), cfg.lift);
        result.attention_object =
            lift_attention(result.edited, load_attention_maps(cfg.attention_maps, AttentionRole::kObject), obj_cfg);
      } else {
        result.attention_edit = lift_attention(result.edited, *backend, AttentionRole::kEdit, cfg.lift);
        result.attention_object = lift_attention(result.edited, *backend, AttentionRole::kObject, obj_cfg);
      }
      save_grid(out("ae.voxe"), result.attention_edit);
      save_grid(out("ao.voxe"), result.attention_object);
      manifest.completed(stage);

      stage = "segment";
      result.mask = segment(result.edited, result.attention_edit, result.attention_object, cfg.segment,
                            &result.warnings).mask;
      save_mask(out("mask.voxm"), result.mask);
      manifest.completed(stage);

      stage = "merge";
      result.refined = merge(result.initial, result.edited, result.mask);
    }
    save_grid(out("gr.voxe"), result.refined);
    manifest.completed(cfg.skip_refine ? "skip-refine" : "merge");
  } catch (const std::exception& e) {
    manifest.failed(stage, e.what());
    manifest.warnings(result.warnings);
    manifest.write();
    throw std::runtime_error("pipeline stage '" + stage + "' failed: " + e.what());
  }
  manifest.warnings(result.warnings);
  manifest.write();
  result.artifacts["manifest.json"] = cfg.output_dir / "manifest.json";
  return result;
}

std::vector<Image> render_turntable(const FeatureGrid& grid, int n_views, const std::filesystem::path& out_dir,
                                    const TurntableConfig& cfg) {
  if (n_views <= 0) throw std::invalid_argument("render_turntable: n_views must be positive");
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::vector<Image> frames;
  frames.reserve(static_cast<std::size_t>(n_views));
  for (int k = 0; k < n_views; ++k) {
    const double azimuth = 2.0 * std::numbers::pi * k / n_views;
    const CameraPose pose = orbit_pose(grid.bounds().center(), cfg.radius, azimuth, cfg.elevation_deg * kDeg,
                                       cfg.fov_x, cfg.width, cfg.height);
    frames.push_back(render(grid, pose, cfg.render).rgb);
    if (!out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04d.png", k);
      save_png(out_dir / name, frames.back());
    }
  }
  return frames;
}

}  // namespace voxedit
