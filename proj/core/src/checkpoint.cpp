#include "firank/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "firank/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace firank {

void CheckpointWriter::write(const std::string& path) const {
  nlohmann::json manifest;
  manifest["magic"] = kCheckpointMagic;
  manifest["version"] = kCheckpointVersion;
  manifest["config"] = config_.is_null() ? nlohmann::json::object() : config_;
  nlohmann::json tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const CheckpointEntry& e : entries_) {
    tensors.push_back({{"name", e.name},
                       {"shape", e.shape},
                       {"dtype", dtype_name(e.dtype)},
                       {"offset", offset}});
    offset += e.bytes.size();
  }
  manifest["tensors"] = tensors;
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  const uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const CheckpointEntry& e : entries_) {
    out.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
  }
  if (!out) throw DataError("checkpoint: short write to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ull << 32)) {
    throw VersionError("checkpoint: malformed header in " + path);
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw VersionError("checkpoint: truncated manifest in " + path);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw VersionError("checkpoint: manifest is not valid JSON");
  }
  if (manifest.value("magic", "") != kCheckpointMagic) {
    throw VersionError("checkpoint: wrong magic");
  }
  if (manifest.value("version", -1) != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported version");
  }

  Checkpoint ck;
  ck.config_ = manifest.value("config", nlohmann::json::object());
  uint64_t expected = 0;
  try {
    for (const auto& tj : manifest.at("tensors")) {
      Entry e;
      e.name = tj.at("name").get<std::string>();
      e.shape = tj.at("shape").get<std::vector<int64_t>>();
      const std::string dt = tj.at("dtype").get<std::string>();
      if (dt == "f32") {
        e.dtype = Dtype::f32;
      } else if (dt == "f64") {
        e.dtype = Dtype::f64;
      } else {
        throw VersionError("checkpoint: unknown dtype " + dt);
      }
      e.offset = tj.at("offset").get<uint64_t>();
      if (e.offset != expected) throw VersionError("checkpoint: offsets out of order");
      int64_t n = 1;
      for (int64_t s : e.shape) n *= s;
      expected += static_cast<uint64_t>(n) * (e.dtype == Dtype::f32 ? 4 : 8);
      ck.entries_.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw VersionError(std::string("checkpoint: malformed manifest: ") + e.what());
  }

  ck.blob_.resize(expected);
  in.read(ck.blob_.data(), static_cast<std::streamsize>(expected));
  if (static_cast<uint64_t>(in.gcount()) != expected) {
    throw VersionError("checkpoint: blob shorter than manifest declares");
  }
  return ck;
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const Entry& e : entries_) out.push_back(e.name);
  return out;
}

bool Checkpoint::has(const std::string& name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

Dtype Checkpoint::dtype(const std::string& name) const { return find(name).dtype; }

const Checkpoint::Entry& Checkpoint::find(const std::string& name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return e;
  }
  throw DataError("checkpoint: no tensor named '" + name + "'");
}

}  // namespace firank
