#include "mhdpinn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mhdpinn/errors.hpp"

namespace mhdpinn {

using json = nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& in) {
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const unsigned v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == in.size()) {
    const unsigned v = in[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    const unsigned v = (in[i] << 16) | (in[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<unsigned char> base64_decode(const std::string& in) {
  if (in.size() % 4 != 0) throw ConfigError("base64 payload length is not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(in.size() / 4 * 3);
  for (std::size_t i = 0; i < in.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = in[i + j];
      if (c == '=' && i + 4 == in.size() && j >= 2) {
        v[j] = 0;
        ++pad;
      } else {
        if (pad > 0) throw ConfigError("base64 padding in the middle of the payload");
        v[j] = decode_char(c);
        if (v[j] < 0) throw ConfigError("invalid base64 character");
      }
    }
    const unsigned w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<unsigned char>(w >> 16));
    if (pad < 2) out.push_back(static_cast<unsigned char>(w >> 8));
    if (pad < 1) out.push_back(static_cast<unsigned char>(w));
  }
  return out;
}

json params_json(const NetworkParams& p) {
  return {{"layer_sizes", p.layer_sizes},
          {"activation", to_string(p.activation)},
          {"layout", to_string(p.layout)},
          {"num_params", p.num_params()},
          {"params", encode_doubles(p.flatten())}};
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

NetworkParams params_from_json(const json& j, const std::string& where) {
  const auto sizes = field<std::vector<int>>(j, "layer_sizes", where);
  NetworkParams p;
  try {
    p = zero_params(sizes, parse_activation(field<std::string>(j, "activation", where)),
                    parse_layout(field<std::string>(j, "layout", where)));
  } catch (const ShapeError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  const auto flat = decode_doubles(field<std::string>(j, "params", where));
  if (flat.size() != p.num_params()) {
    throw ConfigError(where + ": " + std::to_string(flat.size()) + " parameters stored, shape " +
                      p.shape_string() + " needs " + std::to_string(p.num_params()));
  }
  p.assign(flat);
  return p;
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(u >> (8 * b)));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_doubles(const std::string& text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw ConfigError("parameter payload is not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    out[i] = std::bit_cast<double>(u);
  }
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json j = params_json(ckpt.params);
  j["format"] = "mhdpinn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["step"] = ckpt.step;
  if (ckpt.optim) {
    const OptimState& o = *ckpt.optim;
    j["optimizer"] = {{"kind", "adam"},
                      {"step", o.step},
                      {"lr", o.hyper.lr},
                      {"beta1", o.hyper.beta1},
                      {"beta2", o.hyper.beta2},
                      {"eps", o.hyper.eps},
                      {"m", encode_doubles(o.m)},
                      {"v", encode_doubles(o.v)}};
  }
  if (ckpt.best) {
    j["best"] = {{"loss", encode_doubles(std::span(&ckpt.best_loss, 1))},
                 {"step", ckpt.best_step},
                 {"params", encode_doubles(ckpt.best->flatten())}};
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    out << j.dump(1) << '\n';
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": not valid JSON (" + e.what() + ")");
  }
  if (!j.is_object() || j.value("format", "") != "mhdpinn-checkpoint") {
    throw ConfigError(path + ": not a checkpoint file");
  }
  const int version = field<int>(j, "version", path);
  if (version != kCheckpointVersion) {
    throw ConfigError(path + ": checkpoint version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.params = params_from_json(j, path);
  c.step = field<std::uint64_t>(j, "step", path);
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    const std::string where = path + " (optimizer)";
    if (field<std::string>(o, "kind", where) != "adam") {
      throw ConfigError(where + ": only adam state is stored");
    }
    OptimState s;
    s.step = field<std::uint64_t>(o, "step", where);
    s.hyper.lr = field<double>(o, "lr", where);
    s.hyper.beta1 = field<double>(o, "beta1", where);
    s.hyper.beta2 = field<double>(o, "beta2", where);
    s.hyper.eps = field<double>(o, "eps", where);
    s.m = decode_doubles(field<std::string>(o, "m", where));
    s.v = decode_doubles(field<std::string>(o, "v", where));
    if (s.m.size() != c.params.num_params() || s.v.size() != c.params.num_params()) {
      throw ConfigError(where + ": moment vectors do not match the parameter count");
    }
    c.optim = std::move(s);
  }
  if (j.contains("best")) {
    const json& b = j["best"];
    const std::string where = path + " (best)";
    const auto loss = decode_doubles(field<std::string>(b, "loss", where));
    if (loss.size() != 1) throw ConfigError(where + ": bad loss entry");
    c.best_loss = loss[0];
    c.best_step = field<std::uint64_t>(b, "step", where);
    NetworkParams bp = c.params;
    const auto flat = decode_doubles(field<std::string>(b, "params", where));
    if (flat.size() != bp.num_params()) throw ConfigError(where + ": parameter count mismatch");
    bp.assign(flat);
    c.best = std::move(bp);
  }
  return c;
}

}  // namespace mhdpinn
