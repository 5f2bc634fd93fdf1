#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irem/bspline.hpp"
#include "irem/checkpoint.hpp"
#include "irem/experiment.hpp"
#include "irem/phantom.hpp"

namespace fs = std::filesystem;
using namespace irem;

namespace {

constexpr int kValidationExit = 2;
constexpr int kRuntimeExit = 3;

struct ConfigOverrides {
  std::optional<std::string> output_dir;
  std::optional<int> epochs;
  std::optional<int> two_l;
  std::optional<int> batch_size;
  std::optional<double> lr0;
  std::optional<std::uint64_t> shuffle_seed;
  std::optional<double> spacing;
};

void add_overrides(CLI::App* cmd, ConfigOverrides& o) {
  cmd->add_option("--output-dir", o.output_dir, "Override output_dir");
  cmd->add_option("--epochs", o.epochs, "Override train.epochs");
  cmd->add_option("--two-l", o.two_l, "Override encoder.two_l");
  cmd->add_option("--batch-size", o.batch_size, "Override train.batch_size");
  cmd->add_option("--lr0", o.lr0, "Override train.lr0");
  cmd->add_option("--shuffle-seed", o.shuffle_seed, "Override train.shuffle_seed");
  cmd->add_option("--spacing", o.spacing, "Override grid.spacing (isotropic, mm)");
}

ExperimentConfig load_with_overrides(const std::string& path, const ConfigOverrides& o) {
  ExperimentConfig cfg = load_experiment(path);
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.two_l) {
    if (*o.two_l < 2 || *o.two_l % 2 != 0) throw ValidationError("--two-l must be a positive even integer");
    cfg.half_dim = *o.two_l / 2;
  }
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.lr0) cfg.train.lr0 = *o.lr0;
  if (o.shuffle_seed) cfg.train.shuffle_seed = *o.shuffle_seed;
  if (o.spacing) {
    if (!(*o.spacing > 0)) throw ValidationError("--spacing must be positive");
    cfg.grid_spacing = Vec3::Constant(*o.spacing);
  }
  validate(cfg.train);
  return cfg;
}

int parse_axis(const std::string& spec) {
  std::string v = spec;
  if (v.rfind("axis=", 0) == 0) v = v.substr(5);
  if (v == "x" || v == "0") return 0;
  if (v == "y" || v == "1") return 1;
  if (v == "z" || v == "2") return 2;
  throw ValidationError("slice axis must be x, y or z, got '" + spec + "'");
}

GridSpec grid_for(const Box3& fallback_box, const std::optional<std::string>& like, std::optional<double> spacing,
                  const Vec3& fallback_spacing) {
  GridSpec spec{fallback_box, fallback_spacing};
  if (like) {
    const Volume ref = load_volume(*like);
    spec = {voxel_center_bounds(ref), ref.spacing};
  }
  if (spacing) spec.spacing = Vec3::Constant(*spacing);
  validate(spec);
  return spec;
}

void print_epoch(const Model&, const EpochRecord& r) {
  std::printf("epoch %d loss %.6g lr %.3g (%.1f s)\n", r.epoch, r.loss, r.lr, r.seconds);
  std::fflush(stdout);
}

NormalizedStackSet load_stack_set(const std::string& manifest) {
  std::vector<Volume> stacks;
  std::vector<Rigid> transforms;
  for (const StackEntry& e : load_stack_manifest(manifest)) {
    stacks.push_back(load_volume(e.volume));
    transforms.push_back(load_transform(e.transform));
  }
  return normalize_intensities(std::move(stacks), std::move(transforms));
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      dims.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ValidationError("bad 2L value '" + item + "'");
    }
  }
  return dims;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Implicit neural representation super-resolution of thick-slice MR stacks");
  app.require_subcommand(1);

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Write a procedural HR phantom volume");
  std::string phantom_kind = "brain";
  int phantom_size = 64;
  double phantom_spacing = 1.0;
  std::string phantom_out;
  phantom->add_option("--kind", phantom_kind, "brain or smooth")->capture_default_str();
  phantom->add_option("--size", phantom_size, "Voxels per axis")->capture_default_str();
  phantom->add_option("--spacing", phantom_spacing, "Voxel size (mm)")->capture_default_str();
  phantom->add_option("-o,--out", phantom_out, "Output volume path")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate thick-slice LR stacks from an HR volume");
  std::string sim_input, sim_out;
  SimulationConfig sim_cfg;
  std::vector<std::string> sim_orientations;
  simulate->add_option("-i,--input", sim_input, "HR volume")->required();
  simulate->add_option("-o,--out", sim_out, "Output directory")->required();
  simulate->add_option("--factor", sim_cfg.factor, "Slice thickening factor")->capture_default_str();
  simulate->add_option("--orientations", sim_orientations, "Subset of axial coronal sagittal");
  simulate->add_option("--seed", sim_cfg.seed, "Recorded simulation seed")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model from an experiment config");
  std::string train_config;
  ConfigOverrides train_over;
  train_cmd->add_option("-c,--config", train_config, "Experiment JSON")->required();
  add_overrides(train_cmd, train_over);

  // reconstruct
  auto* recon = app.add_subcommand("reconstruct", "Evaluate a checkpoint on a dense grid");
  std::string recon_ckpt, recon_out;
  std::optional<std::string> recon_like, recon_slices, recon_slice_dir;
  std::optional<double> recon_spacing;
  Eigen::Index recon_chunk = 8192;
  recon->add_option("--checkpoint", recon_ckpt, "Checkpoint manifest or stem")->required();
  recon->add_option("-o,--out", recon_out, "Output volume path")->required();
  recon->add_option("--spacing", recon_spacing, "Isotropic grid spacing (mm); default finest of --like or 1");
  recon->add_option("--like", recon_like, "Use this volume's voxel grid");
  recon->add_option("--chunk-size", recon_chunk, "Points per forward pass")->capture_default_str();
  recon->add_option("--export-slices", recon_slices, "Write PGM slices, e.g. axis=z");
  recon->add_option("--slice-dir", recon_slice_dir, "Directory for PGM slices (default <out>_slices)");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Cubic B-spline fusion of the stacks");
  std::string base_stacks, base_out;
  std::optional<std::string> base_like;
  std::optional<double> base_spacing;
  float base_fill = 0.0f;
  baseline->add_option("--stacks", base_stacks, "Stack manifest")->required();
  baseline->add_option("-o,--out", base_out, "Output volume path")->required();
  baseline->add_option("--spacing", base_spacing, "Isotropic grid spacing (mm)");
  baseline->add_option("--like", base_like, "Use this volume's voxel grid");
  baseline->add_option("--fill", base_fill, "Value outside every stack")->capture_default_str();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "PSNR and SSIM against a reference");
  std::string eval_ref;
  std::vector<std::string> eval_candidates;
  std::optional<std::string> eval_out;
  double eval_range = 0.0;
  evaluate_cmd->add_option("--reference", eval_ref, "Reference volume")->required();
  evaluate_cmd->add_option("--candidate", eval_candidates, "method=path, repeatable")->required();
  evaluate_cmd->add_option("--data-range", eval_range, "Intensity range; default reference max - min");
  evaluate_cmd->add_option("-o,--out", eval_out, "CSV path (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate one model per encoding dimension");
  std::string sweep_config, sweep_dims;
  ConfigOverrides sweep_over;
  sweep->add_option("-c,--config", sweep_config, "Experiment JSON")->required();
  sweep->add_option("--dims", sweep_dims, "Comma-separated 2L values, e.g. 16,64,256")->required();
  add_overrides(sweep, sweep_over);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "simulate, train, reconstruct, baseline and evaluate");
  std::string pipe_config;
  ConfigOverrides pipe_over;
  pipeline->add_option("-c,--config", pipe_config, "Experiment JSON")->required();
  add_overrides(pipeline, pipe_over);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  try {
    if (*phantom) {
      save_volume(make_phantom(phantom_kind, phantom_size, phantom_spacing), phantom_out);
      std::cout << "wrote " << phantom_out << '\n';
    } else if (*simulate) {
      if (!sim_orientations.empty()) {
        sim_cfg.orientations.clear();
        for (const auto& o : sim_orientations) sim_cfg.orientations.push_back(parse_orientation(o));
      }
      validate(sim_cfg);
      const Volume hr = load_volume(sim_input);
      const fs::path manifest = write_simulated_stacks(simulate_stacks(hr, sim_cfg), sim_cfg, sim_out);
      std::cout << "wrote " << manifest.string() << '\n';
    } else if (*train_cmd) {
      const ExperimentConfig cfg = load_with_overrides(train_config, train_over);
      const PreparedData data = prepare_data(cfg);
      const TrainOutcome out = train_experiment(cfg, data.set, cfg.output_dir, print_epoch);
      std::cout << "wrote " << (cfg.output_dir / ("ckpt_" + std::to_string(out.model.epoch))).string() << '\n';
    } else if (*recon) {
      const Model model = load_checkpoint(recon_ckpt);
      const GridSpec spec = grid_for(model.bbox, recon_like, recon_spacing, Vec3::Ones());
      const Volume v = reconstruct_volume(model, spec, {recon_chunk});
      save_volume(v, recon_out);
      std::cout << "wrote " << recon_out << " dims " << v.dims.transpose() << '\n';
      if (recon_slices) {
        const fs::path dir = recon_slice_dir ? fs::path(*recon_slice_dir) : fs::path(recon_out).replace_extension("").concat("_slices");
        const int n = export_slices(v, parse_axis(*recon_slices), dir);
        std::cout << "wrote " << n << " slices to " << dir.string() << '\n';
      }
    } else if (*baseline) {
      const NormalizedStackSet set = load_stack_set(base_stacks);
      const GridSpec fallback = default_grid(set);
      const GridSpec spec = grid_for(fallback.bbox, base_like, base_spacing, fallback.spacing);
      const FuseResult r = bspline_fuse(set, spec, {base_fill});
      if (r.coverage < 1.0)
        std::cerr << "warning: " << (1.0 - r.coverage) * 100.0 << "% of grid points lie outside every stack\n";
      save_volume(r.volume, base_out);
      std::cout << "wrote " << base_out << '\n';
    } else if (*evaluate_cmd) {
      const Volume ref = load_volume(eval_ref);
      std::vector<MetricReport> reports;
      Vec3 spacing = ref.spacing;
      for (const std::string& c : eval_candidates) {
        const auto eq = c.find('=');
        const std::string method = eq == std::string::npos ? fs::path(c).stem().string() : c.substr(0, eq);
        const std::string path = eq == std::string::npos ? c : c.substr(eq + 1);
        const Volume cand = load_volume(path);
        spacing = cand.spacing;
        reports.push_back(evaluate(ref, cand, method, eval_range));
        reports.back().reference = eval_ref;
      }
      if (eval_out)
        write_metrics_csv(reports, spacing, *eval_out);
      else
        std::cout << metrics_csv(reports, spacing);
    } else if (*sweep) {
      const std::vector<int> dims = parse_dims(sweep_dims);
      const ExperimentConfig cfg = load_with_overrides(sweep_config, sweep_over);
      const auto rows = run_sweep(cfg, dims, cfg.output_dir, print_epoch);
      for (const SweepRow& r : rows)
        std::cout << "2L=" << r.encoding_dim << " psnr " << format_double(r.report.psnr_db) << " ssim "
                  << format_double(r.report.ssim) << '\n';
      std::cout << "wrote " << (cfg.output_dir / "sweep.csv").string() << '\n';
    } else if (*pipeline) {
      const ExperimentConfig cfg = load_with_overrides(pipe_config, pipe_over);
      const PipelineResult r = run_pipeline(cfg, cfg.output_dir, print_epoch);
      std::cout << metrics_csv(r.reports, r.grid.spacing);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
  return 0;
}
