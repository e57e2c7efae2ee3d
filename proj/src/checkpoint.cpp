#include "dire/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dire {

namespace {

constexpr char kMagic[8] = {'D', 'I', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

bool is_json_path(const std::filesystem::path& path) { return path.extension() == ".json"; }

nlohmann::json header_json(const Checkpoint& ckpt, bool inline_values) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : ckpt.model.params.blocks()) {
    nlohmann::json entry{{"name", b.name}, {"rows", b.value.rows()}, {"cols", b.value.cols()}};
    if (inline_values) {
      entry["values"] = std::vector<double>(b.value.flat().begin(), b.value.flat().end());
    }
    blocks.push_back(std::move(entry));
  }
  return {{"format", "dire-checkpoint"},
          {"version", kVersion},
          {"model", ckpt.model.spec.name()},
          {"dims", dims_to_json(ckpt.model.dims)},
          {"lineage", ckpt.lineage},
          {"blocks", std::move(blocks)}};
}

Checkpoint from_header(const nlohmann::json& h) {
  if (h.value("format", "") != "dire-checkpoint") {
    throw std::runtime_error("checkpoint: not a dire checkpoint");
  }
  if (h.at("version").get<std::uint32_t>() != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  Checkpoint ckpt;
  ckpt.model.spec = parse_model_spec(h.at("model").get<std::string>());
  ckpt.model.dims = dims_from_json(h.at("dims"));
  ckpt.lineage = h.value("lineage", nlohmann::json::object());
  for (const auto& b : h.at("blocks")) {
    ckpt.model.params.add(b.at("name").get<std::string>(),
                          Mat(b.at("rows").get<std::size_t>(), b.at("cols").get<std::size_t>()));
  }
  return ckpt;
}

}  // namespace

nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"image", d.image},         {"attribute", d.attribute}, {"noun", d.noun},
          {"multimodal", d.multimodal}, {"exposures", d.exposures}, {"hidden", d.hidden}};
}

ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.image = j.at("image").get<std::size_t>();
  d.attribute = j.at("attribute").get<std::size_t>();
  d.noun = j.at("noun").get<std::size_t>();
  d.multimodal = j.at("multimodal").get<std::size_t>();
  d.exposures = j.at("exposures").get<std::size_t>();
  d.hidden = j.at("hidden").get<std::size_t>();
  return d;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (is_json_path(path)) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    out << header_json(ckpt, true).dump(1) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  const std::string header = header_json(ckpt, false).dump();
  const std::uint64_t header_len = header.size();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
  out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& b : ckpt.model.params.blocks()) {
    out.write(reinterpret_cast<const char*>(b.value.flat().data()),
              static_cast<std::streamsize>(b.value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (is_json_path(path)) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    const auto h = nlohmann::json::parse(in);
    Checkpoint ckpt = from_header(h);
    auto& blocks = ckpt.model.params.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto values = h["blocks"][i].at("values").get<std::vector<double>>();
      blocks[i].value = Mat(blocks[i].value.rows(), blocks[i].value.cols(), values);
    }
    return ckpt;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  char magic[sizeof kMagic];
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("load_checkpoint: " + path.string() + " is not a checkpoint");
  }
  if (version != kVersion) throw std::runtime_error("load_checkpoint: unsupported version");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  Checkpoint ckpt = from_header(nlohmann::json::parse(header));
  for (auto& b : ckpt.model.params.blocks()) {
    in.read(reinterpret_cast<char*>(b.value.flat().data()),
            static_cast<std::streamsize>(b.value.size() * sizeof(double)));
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path.string());
  return ckpt;
}

}  // namespace dire
