#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irem/metrics.hpp"
#include "irem/reconstruct.hpp"
#include "irem/simulate.hpp"
#include "irem/train.hpp"

namespace irem {

struct PhantomSpec {
  std::string kind = "brain";
  int size = 64;
  double spacing = 1.0;
};

/// Where the stacks come from: a procedural phantom or HR volume to be
/// simulated, or a stack manifest written by `simulate`.
struct InputSpec {
  std::optional<PhantomSpec> phantom;
  std::optional<std::filesystem::path> hr;
  std::optional<std::filesystem::path> stacks;
};

struct ExperimentConfig {
  std::filesystem::path output_dir;
  InputSpec input;
  SimulationConfig simulation;
  int half_dim = 128;
  std::uint64_t encoder_seed = 0;
  float frequency_scale = 1.0f;
  int hidden_width = kDefaultHiddenWidth;
  std::uint64_t init_seed = 0;
  TrainConfig train;
  std::optional<Vec3> grid_spacing;
  Eigen::Index chunk_size = 8192;
};

/// Parses and validates a JSON experiment file. Relative paths resolve
/// against the file's directory; seeds must be given explicitly. Throws
/// ValidationError before any computation.
ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir);

struct StackEntry {
  Orientation orientation = Orientation::axial;
  std::filesystem::path volume;
  std::filesystem::path transform;
};

/// Stack manifest written by `simulate`: one entry per stack, paths
/// relative to the manifest's directory.
void save_stack_manifest(const std::vector<StackEntry>& entries, int factor,
                         const std::filesystem::path& path);
std::vector<StackEntry> load_stack_manifest(const std::filesystem::path& path);

/// Writes stacks (raw intensity units) with identity transforms and a
/// manifest.json into `dir`. Returns the manifest path.
std::filesystem::path write_simulated_stacks(const std::vector<Volume>& stacks, const SimulationConfig& cfg,
                                             const std::filesystem::path& dir);

struct PreparedData {
  NormalizedStackSet set;
  std::optional<Volume> reference;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Evaluation lattice: the reference voxel grid when an HR volume is known,
/// else the configured spacing (or the finest stack spacing) over the stack
/// union box.
GridSpec evaluation_grid(const ExperimentConfig& cfg, const PreparedData& data);

struct TrainOutcome {
  Model model;
  std::vector<EpochRecord> log;
};

/// Builds a fresh model for the config and trains it. When `out_dir` is
/// given, writes train_log.csv and ckpt_<epoch> checkpoints there.
TrainOutcome train_experiment(const ExperimentConfig& cfg, const NormalizedStackSet& set,
                              const std::optional<std::filesystem::path>& out_dir, const EpochHook& progress = {});

struct PipelineResult {
  Model model;
  Volume irem;
  Volume bspline;
  GridSpec grid;
  std::vector<MetricReport> reports;  // empty without a reference
};

/// prepare -> train -> reconstruct -> B-spline baseline -> evaluate.
/// Writes artifacts under `out_dir` when given.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                            const EpochHook& progress = {});

struct SweepRow {
  int encoding_dim = 0;
  MetricReport report;
};

/// Trains one model per encoding dimension 2L with otherwise identical
/// settings and evaluates each against the reference.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::vector<int>& encoding_dims,
                                const std::optional<std::filesystem::path>& out_dir, const EpochHook& progress = {});

std::string format_spacing(const Vec3& spacing);
std::string format_double(double v);

/// `method,psnr_db,ssim,data_range,grid_spacing`
void write_metrics_csv(const std::vector<MetricReport>& reports, const Vec3& grid_spacing,
                       const std::filesystem::path& path);
std::string metrics_csv(const std::vector<MetricReport>& reports, const Vec3& grid_spacing);

/// `epoch,loss,lr,seconds`
void write_train_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path);

/// `two_l,psnr_db,ssim,data_range,grid_spacing`
void write_sweep_csv(const std::vector<SweepRow>& rows, const Vec3& grid_spacing,
                     const std::filesystem::path& path);

}  // namespace irem
