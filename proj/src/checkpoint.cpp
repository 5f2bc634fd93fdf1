#include "irem/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace irem {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "irem-checkpoint-1";

std::filesystem::path with_ext(const std::filesystem::path& path, const char* ext) {
  std::filesystem::path p = path;
  if (p.extension() == ".json" || p.extension() == ".bin") p.replace_extension();
  return p.string() + ext;
}

template <typename F>
void for_each_blob_block(Network<float>& net, F&& f) {
  for (Layer<float>& l : net.layers) {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weight;
    f(w.data(), w.size());
    l.weight = w;
    f(l.bias.data(), l.bias.size());
    if (l.has_norm()) {
      f(l.bn_scale.data(), l.bn_scale.size());
      f(l.bn_shift.data(), l.bn_shift.size());
      f(l.running_mean.data(), l.running_mean.size());
      f(l.running_var.data(), l.running_var.size());
    }
  }
}

}  // namespace

Model make_model(int half_dim, std::uint64_t encoder_seed, std::uint64_t init_seed, const Box3& bbox,
                 double intensity_scale, int hidden_width, float frequency_scale) {
  if (!(intensity_scale > 0)) throw ValidationError("intensity scale must be positive");
  if (bbox.isEmpty()) throw ValidationError("model bounding box is empty");
  Model m;
  m.encoder = make_encoder<float>(half_dim, encoder_seed, frequency_scale);
  m.network = init_params<float>(half_dim, init_seed, hidden_width);
  m.bbox = bbox;
  m.intensity_scale = intensity_scale;
  m.init_seed = init_seed;
  return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& stem) {
  const auto manifest = with_ext(stem, ".json");
  const auto blob = with_ext(stem, ".bin");
  if (manifest.has_parent_path()) std::filesystem::create_directories(manifest.parent_path());

  json j;
  j["format"] = kFormat;
  j["L"] = model.encoder.half_dim;
  j["seed"] = model.encoder.seed;
  j["frequency_scale"] = model.encoder.frequency_scale;
  j["hidden_width"] = model.network.hidden_width;
  j["init_seed"] = model.init_seed;
  j["bn_momentum"] = model.network.bn_momentum;
  j["bn_epsilon"] = model.network.bn_epsilon;
  j["bbox"] = {{"min", {model.bbox.min().x(), model.bbox.min().y(), model.bbox.min().z()}},
               {"max", {model.bbox.max().x(), model.bbox.max().y(), model.bbox.max().z()}}};
  j["intensity_scale"] = model.intensity_scale;
  j["epoch"] = model.epoch;
  j["blob"] = blob.filename().string();
  j["parameter_count"] = parameter_count(model.network.encoding_dim, model.network.hidden_width);
  std::ofstream(manifest) << j.dump(2) << '\n';

  std::ofstream out(blob, std::ios::binary);
  Network<float> copy = model.network;
  for_each_blob_block(copy, [&](float* data, Eigen::Index n) {
    write_f32_le(out, data, static_cast<std::size_t>(n));
  });
  if (!out) throw Error("failed writing " + blob.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  const auto manifest = with_ext(path, ".json");
  std::ifstream in(manifest);
  if (!in) throw ValidationError("cannot open checkpoint " + manifest.string());
  json j;
  try {
    j = json::parse(in);
    if (j.at("format").get<std::string>() != kFormat)
      throw ValidationError(manifest.string() + ": unsupported checkpoint format");
    const auto lo = j.at("bbox").at("min").get<std::vector<double>>();
    const auto hi = j.at("bbox").at("max").get<std::vector<double>>();
    if (lo.size() != 3 || hi.size() != 3) throw ValidationError(manifest.string() + ": bad bbox");
    Model m = make_model(j.at("L").get<int>(), j.at("seed").get<std::uint64_t>(),
                         j.at("init_seed").get<std::uint64_t>(), Box3(Vec3(lo.data()), Vec3(hi.data())),
                         j.at("intensity_scale").get<double>(), j.at("hidden_width").get<int>(),
                         j.at("frequency_scale").get<float>());
    m.network.bn_momentum = j.at("bn_momentum").get<float>();
    m.network.bn_epsilon = j.at("bn_epsilon").get<float>();
    m.epoch = j.at("epoch").get<int>();

    const auto blob = manifest.parent_path() / j.at("blob").get<std::string>();
    std::ifstream bin(blob, std::ios::binary);
    if (!bin) throw ValidationError("cannot open checkpoint blob " + blob.string());
    std::uintmax_t expected = 0;
    for_each_blob_block(m.network, [&](float*, Eigen::Index n) { expected += 4u * static_cast<std::uintmax_t>(n); });
    if (std::filesystem::file_size(blob) != expected)
      throw ValidationError(blob.string() + ": blob size does not match the manifest");
    for_each_blob_block(m.network, [&](float* data, Eigen::Index n) {
      read_f32_le(bin, data, static_cast<std::size_t>(n));
    });
    if (!bin) throw Error("failed reading " + blob.string());
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
}

}  // namespace irem
