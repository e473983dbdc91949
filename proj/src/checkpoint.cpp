#include "ddk/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace ddk {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'D', 'D', 'K', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError(path + ": truncated checkpoint");
  }
  return v;
}

std::string get_bytes(std::istream& in, std::uint32_t n, const std::string& path) {
  if (n > (1u << 26)) throw DataError(path + ": implausible field length");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw DataError(path + ": truncated checkpoint");
  return s;
}

}  // namespace

std::string config_to_json(const ModelConfig& cfg) {
  json j;
  j["architecture"] = architecture_name(cfg.architecture);
  j["conv"] = json::array();
  for (const auto& c : cfg.conv) {
    j["conv"].push_back({{"channels", c.channels},
                         {"kernel", c.kernel},
                         {"stride", c.stride},
                         {"dilation", c.dilation}});
  }
  j["lstm_hidden"] = cfg.lstm_hidden;
  j["lstm_layers"] = cfg.lstm_layers;
  j["fc_hidden"] = cfg.fc_hidden;
  j["dropout"] = cfg.dropout;
  j["leaky_slope"] = cfg.leaky_slope;
  j["sample_rate_hz"] = cfg.sample_rate_hz;
  j["frame_ms"] = cfg.frame_ms;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config: expected a JSON object");
  ModelConfig cfg;
  if (j.contains("architecture")) {
    cfg = parse_architecture(j.at("architecture").get<std::string>()) == Architecture::Cnn
              ? ModelConfig::default_cnn()
              : ModelConfig::default_lstm();
  } else {
    cfg = ModelConfig::default_lstm();
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "architecture") {
        continue;
      } else if (key == "conv") {
        cfg.conv.clear();
        for (const auto& c : value) {
          ConvLayerConfig layer;
          for (const auto& [ck, cv] : c.items()) {
            if (ck == "channels") layer.channels = cv.get<int>();
            else if (ck == "kernel") layer.kernel = cv.get<int>();
            else if (ck == "stride") layer.stride = cv.get<int>();
            else if (ck == "dilation") layer.dilation = cv.get<int>();
            else throw ConfigError("model config: unknown conv key '" + ck + "'");
          }
          cfg.conv.push_back(layer);
        }
      } else if (key == "lstm_hidden") {
        cfg.lstm_hidden = value.get<int>();
      } else if (key == "lstm_layers") {
        cfg.lstm_layers = value.get<int>();
      } else if (key == "fc_hidden") {
        cfg.fc_hidden = value.get<int>();
      } else if (key == "dropout") {
        cfg.dropout = value.get<double>();
      } else if (key == "leaky_slope") {
        cfg.leaky_slope = value.get<double>();
      } else if (key == "sample_rate_hz") {
        cfg.sample_rate_hz = value.get<int>();
      } else if (key == "frame_ms") {
        cfg.frame_ms = value.get<int>();
      } else {
        throw ConfigError("model config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return cfg;
}

void save_checkpoint(const std::string& path, const Model<float>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  const std::string cfg = config_to_json(model.config());
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto params = model.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param<float>* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, static_cast<std::uint32_t>(p->shape.size()));
    for (int d : p->shape) put_u32(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path);
}

Model<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  try {
    cfg = config_from_json(get_bytes(in, get_u32(in, path), path));
    cfg.validate(false);
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());
  }
  Model<float> model(cfg, 0, false);
  auto params = model.params();
  const std::uint32_t n = get_u32(in, path);
  if (n != params.size()) {
    throw DataError(path + ": expected " + std::to_string(params.size()) + " parameters, found " +
                    std::to_string(n));
  }
  for (Param<float>* p : params) {
    const std::string name = get_bytes(in, get_u32(in, path), path);
    if (name != p->name) throw DataError(path + ": expected parameter " + p->name + ", found " + name);
    const std::uint32_t ndim = get_u32(in, path);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndim && d < 8; ++d) shape.push_back(static_cast<int>(get_u32(in, path)));
    if (shape != p->shape) throw DataError(path + ": shape mismatch for " + name);
    if (!in.read(reinterpret_cast<char*>(p->value.data()),
                 static_cast<std::streamsize>(p->value.size() * sizeof(float)))) {
      throw DataError(path + ": truncated checkpoint");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(path + ": trailing bytes");
  return model;
}

}  // namespace ddk
