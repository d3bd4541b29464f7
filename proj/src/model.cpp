// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankforge/model.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rankforge/error.hpp"

namespace rankforge {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kModelFormat = "rankforge-model";

Error validation_error(const LayerSpec& layer, const std::string& what) {
  return Error(ErrorKind::kValidation,
               "layer '" + layer.name + "': " + what);
}

std::int64_t get_positive(const json& j, const char* key, std::int64_t dflt,
                          const std::string& layer) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) {
    throw Error(ErrorKind::kParse,
                "layer '" + layer + "': '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::pair<std::int64_t, std::int64_t> get_size(const json& j, const char* key,
                                               const std::string& layer) {
  if (!j.contains(key)) return {1, 1};
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer()) {
    throw Error(ErrorKind::kParse, "layer '" + layer + "': '" + key +
                                       "' must be [height, width]");
  }
  return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

std::string blob_file_name(const std::string& layer_name) {
  std::string out;
  for (char c : layer_name) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                      c == '_' || c == '.';
    out += safe ? c : '_';
  }
  return out + ".bin";
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error(ErrorKind::kParse, "truncated weight blob header");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  return kind == LayerKind::kConvolutional ? "convolutional"
                                           : "fully_connected";
}

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::kSpatial ? "spatial" : "channel";
}

LayerKind parse_layer_kind(std::string_view s) {
  if (s == "convolutional" || s == "conv") return LayerKind::kConvolutional;
  if (s == "fully_connected" || s == "fc") return LayerKind::kFullyConnected;
  throw Error(ErrorKind::kParse, "unknown layer kind '" + std::string(s) + "'");
}

Scheme parse_scheme(std::string_view s) {
  if (s == "spatial") return Scheme::kSpatial;
  if (s == "channel") return Scheme::kChannel;
  throw Error(ErrorKind::kParse, "unknown scheme '" + std::string(s) + "'");
}

MatrixShape kernel_matrix_shape(const LayerSpec& layer) {
  const auto d = layer.window;
  if (layer.scheme == Scheme::kSpatial) {
    return {d * layer.in_channels, d * layer.out_channels};
  }
  return {d * d * layer.in_channels, layer.out_channels};
}

std::optional<std::size_t> NetworkModel::find_layer(std::string_view name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t NetworkModel::logical_layer_count() const {
  std::set<std::string> groups;
  for (const auto& l : layers) groups.insert(l.group.empty() ? l.name : l.group);
  return groups.size();
}

bool operator==(const NetworkModel& a, const NetworkModel& b) {
  if (a.layers != b.layers || a.metadata != b.metadata) return false;
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.has_weights(i) != b.has_weights(i)) return false;
    if (!a.has_weights(i)) continue;
    const auto& wa = *a.weights[i];
    const auto& wb = *b.weights[i];
    if (wa.rows() != wb.rows() || wa.cols() != wb.cols()) return false;
    if (std::memcmp(wa.data(), wb.data(), sizeof(float) * wa.size()) != 0) {
      return false;
    }
  }
  return true;
}

void validate_layer(const LayerSpec& layer) {
  if (layer.name.empty()) {
    throw Error(ErrorKind::kValidation, "layer with empty name");
  }
  if (layer.window < 1) throw validation_error(layer, "window must be >= 1");
  if (layer.in_channels < 1) {
    throw validation_error(layer, "in_channels must be >= 1");
  }
  if (layer.out_channels < 1) {
    throw validation_error(layer, "out_channels must be >= 1");
  }
  if (layer.out1_h < 1 || layer.out1_w < 1 || layer.out2_h < 1 ||
      layer.out2_w < 1) {
    throw validation_error(layer, "output sizes must be >= 1");
  }
  if (layer.kind == LayerKind::kFullyConnected) {
    if (layer.window != 1) {
      throw validation_error(layer, "fully connected layer needs window 1");
    }
    if (layer.out1_h != 1 || layer.out1_w != 1 || layer.out2_h != 1 ||
        layer.out2_w != 1) {
      throw validation_error(layer,
                             "fully connected layer needs 1x1 output sizes");
    }
  }
}

void validate_model(const NetworkModel& model) {
  if (model.layers.empty()) {
    throw Error(ErrorKind::kValidation, "model has no layers");
  }
  if (!model.weights.empty() && model.weights.size() != model.layers.size()) {
    throw Error(ErrorKind::kValidation,
                "weight list is not aligned with the layer list");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    validate_layer(layer);
    if (!names.insert(layer.name).second) {
      throw validation_error(layer, "duplicate layer name");
    }
    if (model.has_weights(i)) {
      const auto shape = kernel_matrix_shape(layer);
      const auto& w = *model.weights[i];
      if (w.rows() != shape.rows || w.cols() != shape.cols) {
        std::ostringstream msg;
        msg << "weight matrix is " << w.rows() << "x" << w.cols()
            << ", expected " << shape.rows << "x" << shape.cols;
        throw validation_error(layer, msg.str());
      }
    }
  }
}

NetworkModel load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("layers") ||
      !doc.at("layers").is_array()) {
    throw Error(ErrorKind::kParse,
                path.string() + ": expected an object with a 'layers' array");
  }
  if (doc.contains("format") && doc.at("format") != kModelFormat) {
    throw Error(ErrorKind::kParse, path.string() + ": not a model document");
  }

  NetworkModel model;
  if (doc.contains("metadata")) {
    for (const auto& [k, v] : doc.at("metadata").items()) {
      model.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  const auto base = path.parent_path();
  bool any_weights = false;
  for (const auto& jl : doc.at("layers")) {
    if (!jl.is_object() || !jl.contains("name") || !jl.at("name").is_string()) {
      throw Error(ErrorKind::kParse, path.string() + ": layer without a name");
    }
    LayerSpec layer;
    try {
      layer.name = jl.at("name").get<std::string>();
      layer.group = jl.value("group", layer.name);
      layer.kind = parse_layer_kind(jl.value("kind", "convolutional"));
      layer.scheme = parse_scheme(jl.value("scheme", "spatial"));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse,
                  "layer '" + layer.name + "': " + std::string(e.what()));
    }
    layer.window = get_positive(jl, "window", 1, layer.name);
    layer.in_channels = get_positive(jl, "in_channels", 0, layer.name);
    layer.out_channels = get_positive(jl, "out_channels", 0, layer.name);
    std::tie(layer.out1_h, layer.out1_w) = get_size(jl, "out1", layer.name);
    std::tie(layer.out2_h, layer.out2_w) = get_size(jl, "out2", layer.name);
    std::optional<WeightMatrix> weights;
    if (jl.contains("weights") && !jl.at("weights").is_null()) {
      if (!jl.at("weights").is_string()) {
        throw Error(ErrorKind::kParse,
                    "layer '" + layer.name + "': 'weights' must be a path");
      }
      weights = read_weight_blob(base / jl.at("weights").get<std::string>());
      any_weights = true;
    }
    model.layers.push_back(std::move(layer));
    model.weights.push_back(std::move(weights));
  }
  if (!any_weights) model.weights.clear();
  validate_model(model);
  return model;
}

void save_model(const NetworkModel& model, const fs::path& path) {
  validate_model(model);
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = 1;
  doc["metadata"] = json::object();
  for (const auto& [k, v] : model.metadata) doc["metadata"][k] = v;
  const std::string blob_dir = path.stem().string() + "_weights";
  json layers = json::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    json jl;
    jl["name"] = l.name;
    if (l.group != l.name && !l.group.empty()) jl["group"] = l.group;
    jl["kind"] = to_string(l.kind);
    jl["scheme"] = to_string(l.scheme);
    jl["window"] = l.window;
    jl["in_channels"] = l.in_channels;
    jl["out_channels"] = l.out_channels;
    jl["out1"] = {l.out1_h, l.out1_w};
    jl["out2"] = {l.out2_h, l.out2_w};
    if (model.has_weights(i)) {
      const auto rel = fs::path(blob_dir) / blob_file_name(l.name);
      std::error_code ec;
      fs::create_directories(path.parent_path() / blob_dir, ec);
      write_weight_blob(*model.weights[i], path.parent_path() / rel);
      jl["weights"] = rel.generic_string();
    }
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

WeightMatrix read_weight_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  const auto rows = get_u64(in);
  const auto cols = get_u64(in);
  if (rows > (1ull << 31) || cols > (1ull << 31)) {
    throw Error(ErrorKind::kParse, path.string() + ": implausible blob shape");
  }
  WeightMatrix m(static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(cols));
  std::vector<unsigned char> buf(rows * cols * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size()))) {
    throw Error(ErrorKind::kParse, path.string() + ": truncated weight blob");
  }
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c) {
      const unsigned char* p = &buf[(r * cols + c) * 4];
      const std::uint32_t bits = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
                                 std::uint32_t{p[2]} << 16 |
                                 std::uint32_t{p[3]} << 24;
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::bit_cast<float>(bits);
    }
  }
  return m;
}

void write_weight_blob(const WeightMatrix& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  std::vector<unsigned char> buf(static_cast<std::size_t>(m.size()) * 4);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint32_t>(m(r, c));
      for (int i = 0; i < 4; ++i) buf[k++] = static_cast<unsigned char>(bits >> (8 * i));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

bool RankSet::dominated_by(const RankSet& other) const {
  if (values.size() != other.values.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > other.values[i]) return false;
  }
  return true;
}

std::string format_ranks(const RankSet& r) {
  std::string out = "(";
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(r[i]);
  }
  return out + ")";
}

}  // namespace rankforge
