#include "fidkit/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fidkit/errors.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

namespace fidkit {

namespace {

using nlohmann::json;

void write_u64(std::ofstream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

}  // namespace

void save_container(const std::string& path, const TensorMap& tensors) {
  json header = json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    header[name] = {{"shape", t.shape}, {"offset", offset}};
    offset += static_cast<std::uint64_t>(t.numel()) * sizeof(float);
  }
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out.write(kContainerMagic, sizeof(kContainerMagic));
  write_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, t] : tensors) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw_io("short write to '" + path + "'");
}

TensorMap load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw_io("cannot open weight container '" + path + "'");
  const std::streamsize file_size = in.tellg();
  in.seekg(0);

  char magic[8];
  if (file_size < 16 || !in.read(magic, 8) ||
      std::memcmp(magic, kContainerMagic, 8) != 0) {
    throw_data("'" + path + "' is not a weight container (bad magic)");
  }
  std::uint64_t header_len = 0;
  char lenbuf[8];
  in.read(lenbuf, 8);
  std::memcpy(&header_len, lenbuf, 8);
  if (16 + header_len > static_cast<std::uint64_t>(file_size)) {
    throw_data("'" + path + "': header length exceeds file size");
  }

  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw_data("'" + path + "': malformed container header: " + e.what());
  }
  if (!header.is_object()) throw_data("'" + path + "': container header is not an object");

  const std::uint64_t payload_size = static_cast<std::uint64_t>(file_size) - 16 - header_len;
  const std::uint64_t payload_start = 16 + header_len;

  TensorMap tensors;
  for (auto it = header.begin(); it != header.end(); ++it) {
    const std::string& name = it.key();
    const json& entry = it.value();
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("offset")) {
      throw_data("'" + path + "': tensor '" + name + "' has a malformed header entry");
    }
    Tensor t;
    t.shape = entry.at("shape").get<std::vector<std::size_t>>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    const std::uint64_t bytes = static_cast<std::uint64_t>(Tensor::numel_of(t.shape)) * sizeof(float);
    if (offset + bytes > payload_size) {
      throw_data("'" + path + "': tensor '" + name + "' extends past end of file (truncated container)");
    }
    t.data.resize(bytes / sizeof(float));
    in.seekg(static_cast<std::streamoff>(payload_start + offset));
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw_io("'" + path + "': read failed for tensor '" + name + "'");
    tensors.emplace(name, std::move(t));
  }
  return tensors;
}

ModelWeights::ModelWeights(ModelConfig config, TensorMap tensors)
    : config_(std::move(config)), tensors_(std::move(tensors)) {}

const Tensor& ModelWeights::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw_data("missing tensor '" + name + "'");
  return it->second;
}

bool ModelWeights::has(const std::string& name) const { return tensors_.count(name) > 0; }

ModelWeights load_weights(const std::string& path, const ModelConfig& config) {
  config.validate();
  TensorMap tensors = load_container(path);

  for (const TensorSpec& spec : required_tensors(config)) {
    auto it = tensors.find(spec.name);
    if (it == tensors.end()) {
      throw_data("'" + path + "': missing tensor '" + spec.name + "'");
    }
    if (it->second.shape != spec.shape) {
      throw_data("'" + path + "': tensor '" + spec.name + "' has shape " +
                 shape_string(it->second.shape) + ", expected " + shape_string(spec.shape));
    }
  }

  ModelConfig cfg = config;
  auto head = tensors.find("lm_head");
  if (head != tensors.end()) {
    const TensorSpec spec = lm_head_spec(config);
    if (head->second.shape != spec.shape) {
      throw_data("'" + path + "': tensor 'lm_head' has shape " +
                 shape_string(head->second.shape) + ", expected " + shape_string(spec.shape));
    }
    cfg.tied_lm_head = false;
  } else {
    cfg.tied_lm_head = true;
  }
  return ModelWeights(cfg, std::move(tensors));
}

}  // namespace fidkit
