// voxedit command-line front end. Each subcommand wraps one pipeline stage.
#include <cstdio>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>

#include "voxedit/grid_io.hpp"
#include "voxedit/parallel.hpp"
#include "voxedit/pipeline.hpp"

using namespace voxedit;

namespace {

struct Common {
  std::uint64_t seed = 0;
  int threads = 0;
};

void progress_line(const char* stage, int i, int total, double value) {
  if (total <= 0) return;
  const int every = std::max(1, total / 20);
  if (i % every == 0 || i + 1 == total) std::fprintf(stderr, "[%s] %d/%d  %.6g\n", stage, i + 1, total, value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-guided voxel grid editing"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "worker threads (0 = all cores)");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "fit a grid to posed images");
  std::string rec_data, rec_out;
  ReconConfig rcfg;
  rec->add_option("--data", rec_data, "dataset directory with transforms.json")->required();
  rec->add_option("--out", rec_out, "output grid (.voxe)")->required();
  rec->add_option("--res", rcfg.resolution, "grid resolution")->capture_default_str();
  rec->add_option("--iters", rcfg.iterations, "iterations (overrides --epochs)");
  rec->add_option("--epochs", rcfg.epochs)->capture_default_str();
  rec->add_option("--lr", rcfg.lr)->capture_default_str();
  rec->add_option("--seed", rcfg.seed);

  // edit
  auto* ed = app.add_subcommand("edit", "score-distillation edit of a grid");
  std::string ed_grid, ed_out, ed_reg = "correlation", ed_backend, ed_data;
  EditConfig ecfg;
  double ed_scale = 0.0;
  ed->add_option("--grid", ed_grid)->required();
  ed->add_option("--prompt", ecfg.prompt)->required();
  ed->add_option("--out", ed_out)->required();
  ed->add_option("--iters", ecfg.iterations)->capture_default_str();
  ed->add_option("--reg", ed_reg)->capture_default_str();
  ed->add_option("--reg-weight", ecfg.reg.weight)->capture_default_str();
  ed->add_option("--backend", ed_backend, "mock:target=<img>|replay:<dir>|http:<url>");
  ed->add_option("--seed", ecfg.seed);
  ed->add_option("--lr", ecfg.lr)->capture_default_str();
  ed->add_option("--render-res", ecfg.poses.width)->capture_default_str();
  auto* ed_scale_opt = ed->add_option("--guidance-scale", ed_scale);
  ed->add_option("--data", ed_data, "reference views for image-space regularizers");

  // lift-attn
  auto* la = app.add_subcommand("lift-attn", "lift 2D attention maps into a grid");
  std::string la_grid, la_role = "edit", la_maps, la_backend, la_out;
  LiftConfig lcfg;
  la->add_option("--grid", la_grid)->required();
  la->add_option("--role", la_role)->check(CLI::IsMember({"edit", "object"}));
  auto* la_maps_opt = la->add_option("--maps", la_maps, "directory of stored maps");
  auto* la_backend_opt = la->add_option("--backend", la_backend);
  la_maps_opt->excludes(la_backend_opt);
  la->add_option("--prompt", lcfg.prompt);
  la->add_option("--token", lcfg.token);
  la->add_option("--out", la_out)->required();
  la->add_option("--iters", lcfg.iterations)->capture_default_str();
  la->add_option("--t", lcfg.timestep)->capture_default_str();
  la->add_option("--seed", lcfg.seed);
  la->add_option("--render-res", lcfg.poses.width)->capture_default_str();

  // segment
  auto* sg = app.add_subcommand("segment", "graph-cut the edited region");
  std::string sg_grid, sg_ae, sg_ao, sg_out, sg_unary = "seeds";
  SegmentConfig scfg;
  sg->add_option("--grid", sg_grid)->required();
  sg->add_option("--attn-edit", sg_ae)->required();
  sg->add_option("--attn-obj", sg_ao)->required();
  sg->add_option("--out", sg_out)->required();
  sg->add_option("--sigma", scfg.sigma)->capture_default_str();
  sg->add_option("--lambda", scfg.lambda)->capture_default_str();
  sg->add_option("--edit-seeds", scfg.edit_seeds)->capture_default_str();
  sg->add_option("--obj-seeds", scfg.object_seeds)->capture_default_str();
  sg->add_option("--unary", sg_unary)->check(CLI::IsMember({"seeds", "soft"}));
  sg->add_option("--unary-weight", scfg.unary_weight)->capture_default_str();

  // merge
  auto* mg = app.add_subcommand("merge", "combine initial and edited grids under a mask");
  std::string mg_in, mg_ed, mg_mask, mg_out;
  mg->add_option("--input", mg_in)->required();
  mg->add_option("--edited", mg_ed)->required();
  mg->add_option("--mask", mg_mask)->required();
  mg->add_option("--out", mg_out)->required();

  // render
  auto* rd = app.add_subcommand("render", "turntable PNG renders of a grid");
  std::string rd_grid, rd_out;
  int rd_views = 8;
  TurntableConfig tcfg;
  rd->add_option("--grid", rd_grid)->required();
  rd->add_option("--out", rd_out, "output directory")->required();
  rd->add_option("--views", rd_views)->capture_default_str();
  rd->add_option("--elevation", tcfg.elevation_deg, "degrees")->capture_default_str();
  rd->add_option("--radius", tcfg.radius)->capture_default_str();
  rd->add_option("--size", tcfg.width)->capture_default_str();

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "run every stage from a config file");
  std::string pl_config, pl_out;
  bool pl_skip = false;
  pl->add_option("config", pl_config, "JSON config")->required();
  pl->add_option("--out", pl_out, "overrides output_dir");
  pl->add_flag("--skip-refine", pl_skip);

  CLI11_PARSE(app, argc, argv);
  if (common.threads > 0) set_num_threads(common.threads);

  try {
    if (*rec) {
      const Dataset ds = load_dataset(rec_data);
      rcfg.render.samples_per_ray = 0;
      const int total = rcfg.iterations > 0 ? rcfg.iterations : rcfg.epochs * static_cast<int>(ds.views.size());
      rcfg.progress = [&](const ReconProgress& p) { progress_line("reconstruct", p.iteration, total, p.loss); };
      const FeatureGrid g = reconstruct(ds, rcfg);
      save_grid(rec_out, g);
      std::printf("train PSNR %.3f dB\n", mean_psnr(g, ds, rcfg.render));
    } else if (*ed) {
      const FeatureGrid gi = load_feature_grid(ed_grid);
      ecfg.reg.kind = parse_regularizer(ed_reg);
      ecfg.poses.height = ecfg.poses.width;
      ecfg.poses.center = gi.bounds().center();
      if (*ed_scale_opt) ecfg.guidance_scale = ed_scale;
      Dataset refs;
      if (!ed_data.empty()) {
        refs = load_dataset(ed_data);
        ecfg.reference_views = &refs;
      }
      auto backend = make_backend(resolve_backend_spec(ed_backend), ecfg.render);
      ecfg.progress = [&](const EditProgress& p) { progress_line("edit", p.iteration, ecfg.iterations, p.t); };
      save_grid(ed_out, edit(gi, ecfg, *backend));
    } else if (*la) {
      const FeatureGrid ge = load_feature_grid(la_grid);
      const AttentionRole role = parse_role(la_role);
      lcfg.poses.height = lcfg.poses.width;
      lcfg.poses.center = ge.bounds().center();
      lcfg.progress = [&](const LiftProgress& p) { progress_line("lift-attn", p.iteration, lcfg.iterations, p.loss); };
      AttentionGrid a;
      if (!la_maps.empty()) {
        a = lift_attention(ge, load_attention_maps(la_maps, role), lcfg);
      } else {
        auto backend = make_backend(resolve_backend_spec(la_backend), lcfg.render);
        a = lift_attention(ge, *backend, role, lcfg);
      }
      save_grid(la_out, a);
    } else if (*sg) {
      scfg.unary = sg_unary == "soft" ? UnaryMode::kSoft : UnaryMode::kSeeds;
      std::vector<std::string> warnings;
      const CutResult cut = segment(load_feature_grid(sg_grid), load_attention_grid(sg_ae), load_attention_grid(sg_ao),
                                    scfg, &warnings);
      for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      save_mask(sg_out, cut.mask);
      std::printf("%zu voxels labelled edit, cut cost %.6g\n", cut.mask.count_set(), cut.flow);
    } else if (*mg) {
      save_grid(mg_out, merge(load_feature_grid(mg_in), load_feature_grid(mg_ed), load_mask(mg_mask)));
    } else if (*rd) {
      const FeatureGrid g = load_feature_grid(rd_grid);
      tcfg.height = tcfg.width;
      render_turntable(g, rd_views, rd_out, tcfg);
    } else if (*pl) {
      PipelineConfig cfg = load_pipeline_config(pl_config);
      if (!pl_out.empty()) cfg.output_dir = pl_out;
      if (pl_skip) cfg.skip_refine = true;
      const PipelineResult r = run_pipeline(cfg);
      for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      for (const auto& [name, path] : r.artifacts) std::printf("%s\n", path.string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "voxedit: %s\n", e.what());
    return 1;
  }
  return 0;
}
