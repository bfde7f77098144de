// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace deeplas {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'D', 'L', 'C', 'K', 'P', 'T', '0', '1'};

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i)
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

double get_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

json config_to_json(const ModelConfig& c) {
  return json{{"arch", c.arch},
              {"input_dims", c.input.dims},
              {"input_channels", c.input.channels},
              {"hidden", c.hidden},
              {"channels", c.channels},
              {"decoder_hidden", c.decoder_hidden},
              {"baseline_subsample", c.baseline_subsample},
              {"vocab", c.vocab}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.arch = j.at("arch").get<std::string>();
  c.input.dims = j.at("input_dims").get<std::int64_t>();
  c.input.channels = j.at("input_channels").get<std::int64_t>();
  c.hidden = j.at("hidden").get<std::int64_t>();
  c.channels = j.at("channels").get<std::int64_t>();
  c.decoder_hidden = j.at("decoder_hidden").get<std::int64_t>();
  c.baseline_subsample = j.at("baseline_subsample").get<bool>();
  c.vocab = j.at("vocab").get<std::string>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const LasModel<float>& model, std::int64_t step,
                     const std::map<std::string, std::string>& extra,
                     const Adam<float>* optimizer) {
  const ParamStore<float>& store = model.params();
  std::string payload;
  json tensors = json::array();
  auto add_f32 = [&](const std::string& name, const Shape& shape,
                     std::span<const float> values) {
    tensors.push_back({{"name", name}, {"shape", shape}, {"dtype", "f32"},
                       {"offset", payload.size()}});
    for (float f : values) put_f32(payload, f);
  };
  for (std::size_t i = 0; i < store.size(); ++i)
    add_f32(store.name(i), store.value(i).shape(), store.value(i).data());
  for (std::size_t i = 0; i < store.buffer_count(); ++i) {
    const auto& b = store.buffer(i);
    tensors.push_back({{"name", store.buffer_name(i)},
                       {"shape", Shape{static_cast<std::int64_t>(b.size())}},
                       {"dtype", "f64"},
                       {"offset", payload.size()}});
    for (double d : b) put_f64(payload, d);
  }
  if (optimizer) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      add_f32("adam.m." + store.name(i), store.value(i).shape(),
              optimizer->first_moments().at(i));
      add_f32("adam.v." + store.name(i), store.value(i).shape(),
              optimizer->second_moments().at(i));
    }
  }
  json header{{"format", "deeplas-checkpoint"},
              {"version", kCheckpointVersion},
              {"config", config_to_json(model.config())},
              {"step", step},
              {"extra", extra},
              {"optimizer", optimizer ? json{{"steps", optimizer->steps()}}
                                      : json(nullptr)},
              {"tensors", tensors},
              {"payload_bytes", payload.size()}};
  const std::string h = header.dump();
  std::string out(kMagic, 8);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(h.size()) >> (8 * i)) & 0xff));
  out += h;
  out += payload;

  // Write then rename so a crash never leaves a half-written checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("checkpoint: cannot open " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("checkpoint: write failed " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<LasModel<float>> load_checkpoint(
    const std::filesystem::path& path, CheckpointInfo* info,
    Adam<float>* optimizer) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  const std::string where = " in " + path.string();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw CheckpointError("checkpoint: bad magic" + where);
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i)
    hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (hlen > bytes.size() - 16) throw CheckpointError("checkpoint: truncated header" + where);
  json header;
  try {
    header = json::parse(bytes.substr(16, hlen));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header: ") + e.what() + where);
  }
  const char* payload = bytes.data() + 16 + hlen;
  const std::uint64_t payload_size = bytes.size() - 16 - hlen;

  std::unique_ptr<LasModel<float>> model;
  CheckpointInfo meta;
  try {
    meta.version = header.at("version").get<int>();
    if (meta.version != kCheckpointVersion)
      throw CheckpointError("checkpoint: unsupported version " +
                            std::to_string(meta.version) + where);
    meta.model = config_from_json(header.at("config"));
    meta.step = header.at("step").get<std::int64_t>();
    meta.extra = header.at("extra").get<std::map<std::string, std::string>>();
    meta.has_optimizer = !header.at("optimizer").is_null();
    if (header.at("payload_bytes").get<std::uint64_t>() != payload_size)
      throw CheckpointError("checkpoint: payload size mismatch" + where);

    model = std::make_unique<LasModel<float>>(meta.model, 0);
    ParamStore<float>& store = model->params();
    std::set<std::string> seen;
    std::map<std::string, std::pair<Shape, std::vector<float>>> moments;
    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<Shape>();
      const auto dtype = t.at("dtype").get<std::string>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      if (!seen.insert(name).second)
        throw CheckpointError("checkpoint: duplicate tensor '" + name + "'" + where);
      const auto n = static_cast<std::uint64_t>(shape_numel(shape));
      const std::uint64_t width = dtype == "f64" ? 8 : 4;
      if (dtype != "f32" && dtype != "f64")
        throw CheckpointError("checkpoint: unknown dtype for '" + name + "'");
      if (offset > payload_size || n * width > payload_size - offset)
        throw CheckpointError("checkpoint: tensor '" + name + "' out of range" + where);
      const char* p = payload + offset;
      if (dtype == "f64") {
        const auto b = store.find_buffer(name);
        if (!b) throw CheckpointError("checkpoint: unknown buffer '" + name + "'" + where);
        auto& dst = store.buffer(*b);
        if (dst.size() != n)
          throw CheckpointError("checkpoint: buffer '" + name + "' size mismatch" + where);
        for (std::uint64_t k = 0; k < n; ++k) dst[k] = get_f64(p + 8 * k);
        continue;
      }
      std::vector<float> values(n);
      for (std::uint64_t k = 0; k < n; ++k) values[k] = get_f32(p + 4 * k);
      if (name.rfind("adam.", 0) == 0) {
        moments[name] = {shape, std::move(values)};
        continue;
      }
      const auto ref = store.find(name);
      if (!ref) throw CheckpointError("checkpoint: unknown parameter '" + name + "'" + where);
      Tensor<float>& dst = store.value(*ref);
      if (dst.shape() != shape)
        throw CheckpointError("checkpoint: parameter '" + name + "' has shape " +
                              shape_str(shape) + ", model expects " +
                              shape_str(dst.shape()) + where);
      std::copy(values.begin(), values.end(), dst.mutable_data().begin());
    }
    for (std::size_t i = 0; i < store.size(); ++i)
      if (!seen.count(store.name(i)))
        throw CheckpointError("checkpoint: missing parameter '" + store.name(i) + "'" + where);
    for (std::size_t i = 0; i < store.buffer_count(); ++i)
      if (!seen.count(store.buffer_name(i)))
        throw CheckpointError("checkpoint: missing buffer '" + store.buffer_name(i) + "'" + where);

    if (optimizer) {
      if (!meta.has_optimizer)
        throw CheckpointError("checkpoint: no optimizer state" + where);
      *optimizer = Adam<float>(store);
      optimizer->set_steps(header.at("optimizer").at("steps").get<std::int64_t>());
      for (std::size_t i = 0; i < store.size(); ++i) {
        auto m = moments.find("adam.m." + store.name(i));
        auto v = moments.find("adam.v." + store.name(i));
        if (m == moments.end() || v == moments.end())
          throw CheckpointError("checkpoint: missing moments for '" + store.name(i) + "'");
        optimizer->first_moments()[i] = m->second.second;
        optimizer->second_moments()[i] = v->second.second;
      }
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what() + where);
  }
  if (info) *info = meta;
  return model;
}

}  // namespace deeplas
