#include "irem/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "irem/bspline.hpp"
#include "irem/checkpoint.hpp"
#include "irem/phantom.hpp"
#include "json.hpp"

namespace irem {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing required field '" + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_as<T>(j, key, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::exists(p)) throw ValidationError(what + " not found: " + p.string());
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");

  ExperimentConfig cfg;
  cfg.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "out", "config"));

  const json& in = require(j, "input", "config");
  int sources = 0;
  if (in.contains("phantom")) {
    const json& p = in.at("phantom");
    PhantomSpec spec;
    spec.kind = get_or<std::string>(p, "kind", spec.kind, "input.phantom");
    spec.size = get_as<int>(p, "size", "input.phantom");
    spec.spacing = get_or<double>(p, "spacing", spec.spacing, "input.phantom");
    if (spec.kind != "brain" && spec.kind != "smooth")
      throw ValidationError("input.phantom: unknown kind '" + spec.kind + "'");
    if (spec.size < 1 || !(spec.spacing > 0)) throw ValidationError("input.phantom: size and spacing must be positive");
    cfg.input.phantom = spec;
    ++sources;
  }
  if (in.contains("hr")) {
    cfg.input.hr = resolve(base_dir, get_as<std::string>(in, "hr", "input"));
    require_file(header_path(*cfg.input.hr), "input.hr volume");
    ++sources;
  }
  if (in.contains("stacks")) {
    cfg.input.stacks = resolve(base_dir, get_as<std::string>(in, "stacks", "input"));
    require_file(*cfg.input.stacks, "input.stacks manifest");
    for (const StackEntry& e : load_stack_manifest(*cfg.input.stacks)) {
      require_file(header_path(e.volume), "stack volume");
      require_file(e.transform, "stack transform");
    }
    ++sources;
  }
  if (sources != 1) throw ValidationError("input: give exactly one of 'phantom', 'hr' or 'stacks'");

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    cfg.simulation.factor = get_as<int>(s, "factor", "simulation");
    cfg.simulation.seed = get_or<std::uint64_t>(s, "seed", 0, "simulation");
    if (s.contains("orientations")) {
      cfg.simulation.orientations.clear();
      for (const auto& name : get_as<std::vector<std::string>>(s, "orientations", "simulation"))
        cfg.simulation.orientations.push_back(parse_orientation(name));
    }
    validate(cfg.simulation);
  } else if (!cfg.input.stacks) {
    throw ValidationError("config: 'simulation' is required unless input.stacks is given");
  }

  const json& enc = require(j, "encoder", "config");
  const int two_l = get_as<int>(enc, "two_l", "encoder");
  if (two_l < 2 || two_l % 2 != 0) throw ValidationError("encoder.two_l must be a positive even integer");
  cfg.half_dim = two_l / 2;
  cfg.encoder_seed = get_as<std::uint64_t>(enc, "seed", "encoder");
  cfg.frequency_scale = get_or<float>(enc, "frequency_scale", 1.0f, "encoder");
  if (!(cfg.frequency_scale > 0)) throw ValidationError("encoder.frequency_scale must be positive");

  const json& net = require(j, "network", "config");
  cfg.hidden_width = get_or<int>(net, "hidden_width", kDefaultHiddenWidth, "network");
  cfg.init_seed = get_as<std::uint64_t>(net, "init_seed", "network");
  if (cfg.hidden_width < 1) throw ValidationError("network.hidden_width must be positive");

  const json& t = require(j, "train", "config");
  TrainConfig& tc = cfg.train;
  tc.batch_size = get_or<int>(t, "batch_size", tc.batch_size, "train");
  tc.lr0 = get_or<double>(t, "lr0", tc.lr0, "train");
  tc.decay_factor = get_or<double>(t, "decay_factor", tc.decay_factor, "train");
  tc.decay_every = get_or<int>(t, "decay_every", tc.decay_every, "train");
  tc.adam.beta1 = get_or<double>(t, "beta1", tc.adam.beta1, "train");
  tc.adam.beta2 = get_or<double>(t, "beta2", tc.adam.beta2, "train");
  tc.adam.epsilon = get_or<double>(t, "epsilon", tc.adam.epsilon, "train");
  tc.epochs = get_as<int>(t, "epochs", "train");
  tc.shuffle_seed = get_as<std::uint64_t>(t, "shuffle_seed", "train");
  tc.checkpoint_every = get_or<int>(t, "checkpoint_every", 0, "train");
  validate(tc);

  if (j.contains("grid") && j.at("grid").contains("spacing")) {
    const json& s = j.at("grid").at("spacing");
    Vec3 spacing;
    if (s.is_number()) {
      spacing = Vec3::Constant(s.get<double>());
    } else if (s.is_array() && s.size() == 3 && s[0].is_number() && s[1].is_number() && s[2].is_number()) {
      spacing = Vec3(s[0].get<double>(), s[1].get<double>(), s[2].get<double>());
    } else {
      throw ValidationError("grid.spacing must be a number or an array of 3 numbers");
    }
    if (!(spacing.array() > 0).all()) throw ValidationError("grid.spacing must be positive");
    cfg.grid_spacing = spacing;
  }
  if (j.contains("reconstruct")) {
    cfg.chunk_size = get_or<Eigen::Index>(j.at("reconstruct"), "chunk_size", cfg.chunk_size, "reconstruct");
    if (cfg.chunk_size < 1) throw ValidationError("reconstruct.chunk_size must be positive");
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path.parent_path());
}

void save_stack_manifest(const std::vector<StackEntry>& entries, int factor, const std::filesystem::path& path) {
  json j;
  j["factor"] = factor;
  j["stacks"] = json::array();
  for (const StackEntry& e : entries)
    j["stacks"].push_back({{"orientation", std::string(to_string(e.orientation))},
                           {"volume", e.volume.generic_string()},
                           {"transform", e.transform.generic_string()}});
  std::ofstream(path) << j.dump(2) << '\n';
}

std::vector<StackEntry> load_stack_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("stack manifest not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed stack manifest " + path.string() + ": " + e.what());
  }
  const std::string where = path.string();
  const json& stacks = require(j, "stacks", where);
  if (!stacks.is_array() || stacks.empty()) throw ValidationError(where + ": 'stacks' must be a nonempty array");
  std::vector<StackEntry> out;
  for (const json& s : stacks) {
    StackEntry e;
    e.orientation = parse_orientation(get_as<std::string>(s, "orientation", where));
    e.volume = resolve(path.parent_path(), get_as<std::string>(s, "volume", where));
    e.transform = resolve(path.parent_path(), get_as<std::string>(s, "transform", where));
    out.push_back(std::move(e));
  }
  return out;
}

std::filesystem::path write_simulated_stacks(const std::vector<Volume>& stacks, const SimulationConfig& cfg,
                                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<StackEntry> entries;
  for (std::size_t s = 0; s < stacks.size(); ++s) {
    const std::string name(to_string(cfg.orientations[s]));
    StackEntry e{cfg.orientations[s], "stack_" + name + ".json", "transform_" + name + ".json"};
    save_volume(stacks[s], dir / e.volume);
    save_transform(Rigid::identity(), dir / e.transform);
    entries.push_back(e);
  }
  const auto manifest = dir / "manifest.json";
  save_stack_manifest(entries, cfg.factor, manifest);
  return manifest;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData data;
  if (cfg.input.stacks) {
    std::vector<Volume> stacks;
    std::vector<Rigid> transforms;
    for (const StackEntry& e : load_stack_manifest(*cfg.input.stacks)) {
      stacks.push_back(load_volume(e.volume));
      transforms.push_back(load_transform(e.transform));
    }
    data.set = normalize_intensities(std::move(stacks), std::move(transforms));
    return data;
  }
  Volume hr = cfg.input.phantom
                  ? make_phantom(cfg.input.phantom->kind, cfg.input.phantom->size, cfg.input.phantom->spacing)
                  : load_volume(*cfg.input.hr);
  data.set = simulate_lr_stacks(hr, cfg.simulation);
  data.reference = std::move(hr);
  return data;
}

GridSpec evaluation_grid(const ExperimentConfig& cfg, const PreparedData& data) {
  if (data.reference && !cfg.grid_spacing) {
    if (!data.reference->direction.isIdentity(1e-12))
      throw ValidationError("reference volume must be axis-aligned to define the evaluation grid");
    return {voxel_center_bounds(*data.reference), data.reference->spacing};
  }
  GridSpec spec = default_grid(data.set);
  if (cfg.grid_spacing) spec.spacing = *cfg.grid_spacing;
  return spec;
}

TrainOutcome train_experiment(const ExperimentConfig& cfg, const NormalizedStackSet& set,
                              const std::optional<std::filesystem::path>& out_dir, const EpochHook& progress) {
  TrainOutcome out;
  out.model = make_model(cfg.half_dim, cfg.encoder_seed, cfg.init_seed, bounding_box(set), set.intensity_scale,
                         cfg.hidden_width, cfg.frequency_scale);
  const std::vector<TrainingSample> samples = build_training_set(set);
  const int every = cfg.train.checkpoint_every;
  if (out_dir) std::filesystem::create_directories(*out_dir);
  const EpochHook hook = [&](const Model& m, const EpochRecord& r) {
    if (out_dir && every > 0 && m.epoch % every == 0 && m.epoch != cfg.train.epochs)
      save_checkpoint(m, *out_dir / ("ckpt_" + std::to_string(m.epoch)));
    if (progress) progress(m, r);
  };
  out.log = train(cfg.train, samples, out.model, hook);
  if (out_dir) {
    save_checkpoint(out.model, *out_dir / ("ckpt_" + std::to_string(out.model.epoch)));
    write_train_log(out.log, *out_dir / "train_log.csv");
  }
  return out;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                            const EpochHook& progress) {
  const PreparedData data = prepare_data(cfg);
  PipelineResult result;
  result.grid = evaluation_grid(cfg, data);
  TrainOutcome trained = train_experiment(cfg, data.set, out_dir, progress);
  result.model = std::move(trained.model);
  result.irem = reconstruct_volume(result.model, result.grid, {cfg.chunk_size});
  result.bspline = bspline_fuse(data.set, result.grid).volume;
  if (data.reference) {
    result.reports.push_back(evaluate(*data.reference, result.bspline, "bspline"));
    result.reports.push_back(evaluate(*data.reference, result.irem, "irem"));
  }
  if (out_dir) {
    save_volume(result.irem, *out_dir / "irem.json");
    save_volume(result.bspline, *out_dir / "bspline.json");
    if (data.reference) {
      save_volume(*data.reference, *out_dir / "reference.json");
      write_metrics_csv(result.reports, result.grid.spacing, *out_dir / "metrics.csv");
    }
  }
  return result;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::vector<int>& encoding_dims,
                                const std::optional<std::filesystem::path>& out_dir, const EpochHook& progress) {
  if (encoding_dims.empty()) throw ValidationError("sweep needs at least one 2L value");
  for (int d : encoding_dims)
    if (d < 2 || d % 2 != 0) throw ValidationError("sweep 2L values must be positive even integers");
  const PreparedData data = prepare_data(cfg);
  if (!data.reference) throw ValidationError("sweep needs an HR reference (phantom or hr input)");
  const GridSpec grid = evaluation_grid(cfg, data);

  std::vector<SweepRow> rows;
  for (int d : encoding_dims) {
    ExperimentConfig run = cfg;
    run.half_dim = d / 2;
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = *out_dir / ("two_l_" + std::to_string(d));
    const TrainOutcome trained = train_experiment(run, data.set, dir, progress);
    const Volume v = reconstruct_volume(trained.model, grid, {cfg.chunk_size});
    rows.push_back({d, evaluate(*data.reference, v, "irem_2l_" + std::to_string(d))});
  }
  if (out_dir) write_sweep_csv(rows, grid.spacing, *out_dir / "sweep.csv");
  return rows;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_spacing(const Vec3& s) {
  if (s.x() == s.y() && s.y() == s.z()) return format_double(s.x());
  return format_double(s.x()) + "x" + format_double(s.y()) + "x" + format_double(s.z());
}

std::string metrics_csv(const std::vector<MetricReport>& reports, const Vec3& grid_spacing) {
  std::string out = "method,psnr_db,ssim,data_range,grid_spacing\n";
  for (const MetricReport& r : reports)
    out += r.method + ',' + format_double(r.psnr_db) + ',' + format_double(r.ssim) + ',' +
           format_double(r.data_range) + ',' + format_spacing(grid_spacing) + '\n';
  return out;
}

void write_metrics_csv(const std::vector<MetricReport>& reports, const Vec3& grid_spacing,
                       const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << metrics_csv(reports, grid_spacing);
}

void write_train_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "epoch,loss,lr,seconds\n";
  for (const EpochRecord& r : log)
    out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.lr) << ','
        << format_double(r.seconds) << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const Vec3& grid_spacing,
                     const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "two_l,psnr_db,ssim,data_range,grid_spacing\n";
  for (const SweepRow& r : rows)
    out << r.encoding_dim << ',' << format_double(r.report.psnr_db) << ',' << format_double(r.report.ssim) << ','
        << format_double(r.report.data_range) << ',' << format_spacing(grid_spacing) << '\n';
}

}  // namespace irem
