// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/classifier/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "shiftlab/common/digest.hpp"
#include "shiftlab/common/format.hpp"

namespace shiftlab::classifier {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'H', 'L', 'B', 'N', 'E', 'T', '2'};

std::string checkpoint_bytes(const Model& model) {
  const NetworkShape& s = model.network.shape();
  const auto params = model.network.parameters();
  std::string out(kMagic, sizeof kMagic);
  auto put_u32 = [&](uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put_u32(static_cast<uint32_t>(s.input_size));
  for (int c : s.channels) put_u32(static_cast<uint32_t>(c));
  put_u32(static_cast<uint32_t>(s.head_grid));
  put_u32(static_cast<uint32_t>(s.num_classes));
  const uint64_t count = params.size();
  out.append(reinterpret_cast<const char*>(&count), sizeof count);
  out.append(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(float));
  return out;
}

}  // namespace

std::string Model::id() const { return sha256_hex(checkpoint_bytes(*this)).substr(0, 16); }

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path.string(), checkpoint_bytes(model));
}

void save_sidecar(const Model& model, const std::filesystem::path& checkpoint, const std::filesystem::path& sidecar,
                  const nlohmann::ordered_json& metrics) {
  const NetworkShape& s = model.network.shape();
  nlohmann::ordered_json j;
  j["model_id"] = model.id();
  j["config_digest"] = model.config_digest;
  j["train_manifest_digest"] = model.train_manifest_digest;
  j["train_config"] = model.train_config;
  j["shape"] = {{"input_size", s.input_size}, {"channels", s.channels}, {"head_grid", s.head_grid},
                {"num_classes", s.num_classes}};
  j["metrics"] = metrics;
  j["checkpoint_sha256"] = sha256_file(checkpoint);
  write_file_atomic(sidecar.string(), j.dump(2) + "\n");
}

Model load_model(const std::filesystem::path& checkpoint, const std::filesystem::path& sidecar) {
  const std::string bytes = read_file(checkpoint.string());
  size_t pos = 0;
  auto take = [&](void* dst, size_t n) {
    if (pos + n > bytes.size()) throw std::runtime_error("truncated checkpoint " + checkpoint.string());
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };
  char magic[8];
  take(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a shiftlab checkpoint: " + checkpoint.string());
  }
  uint32_t v = 0;
  NetworkShape shape;
  take(&v, 4);
  shape.input_size = static_cast<int>(v);
  for (int& c : shape.channels) {
    take(&v, 4);
    c = static_cast<int>(v);
  }
  take(&v, 4);
  shape.head_grid = static_cast<int>(v);
  take(&v, 4);
  shape.num_classes = static_cast<int>(v);
  uint64_t count = 0;
  take(&count, sizeof count);
  Model m{Network(shape), {}, {}, {}};
  if (count != m.network.parameter_count()) throw std::runtime_error("checkpoint parameter count mismatch");
  take(m.network.parameters().data(), count * sizeof(float));
  if (pos != bytes.size()) throw std::runtime_error("trailing bytes in checkpoint " + checkpoint.string());
  if (!sidecar.empty() && std::filesystem::exists(sidecar)) {
    const auto j = nlohmann::ordered_json::parse(read_file(sidecar.string()));
    m.config_digest = j.value("config_digest", "");
    m.train_manifest_digest = j.value("train_manifest_digest", "");
    if (j.contains("train_config")) m.train_config = j.at("train_config");
  }
  return m;
}

}  // namespace shiftlab::classifier
