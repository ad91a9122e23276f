#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "firank/tensor.hpp"

namespace firank {

// Checkpoint file layout:
//   [u64 little-endian manifest length][manifest JSON][binary blob]
// The manifest lists every tensor (name, shape, dtype, byte offset into the
// blob) in blob order plus a free-form "config" object; the blob is the
// tensors' row-major little-endian data concatenated in manifest order.
inline constexpr const char* kCheckpointMagic = "firank-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::vector<int64_t> shape;
  Dtype dtype = Dtype::f32;
  std::vector<char> bytes;
};

class CheckpointWriter {
 public:
  template <class Real>
  void add(const std::string& name, const Tensor<Real>& t) {
    CheckpointEntry e;
    e.name = name;
    e.shape = t.shape;
    e.dtype = dtype_of<Real>();
    e.bytes.resize(t.data.size() * sizeof(Real));
    std::memcpy(e.bytes.data(), t.data.data(), e.bytes.size());
    entries_.push_back(std::move(e));
  }

  void set_config(nlohmann::json config) { config_ = std::move(config); }

  void write(const std::string& path) const;

 private:
  std::vector<CheckpointEntry> entries_;
  nlohmann::json config_;
};

class Checkpoint {
 public:
  static Checkpoint load(const std::string& path);

  const nlohmann::json& config() const { return config_; }
  std::vector<std::string> names() const;
  bool has(const std::string& name) const;
  Dtype dtype(const std::string& name) const;

  template <class Real>
  Tensor<Real> get(const std::string& name) const {
    const Entry& e = find(name);
    if (e.dtype != dtype_of<Real>()) {
      throw VersionError("checkpoint: tensor '" + name + "' has dtype " +
                         dtype_name(e.dtype));
    }
    int64_t n = 1;
    for (int64_t s : e.shape) n *= s;
    std::vector<Real> data(static_cast<size_t>(n));
    std::memcpy(data.data(), blob_.data() + e.offset, data.size() * sizeof(Real));
    return Tensor<Real>(e.shape, std::move(data));
  }

 private:
  struct Entry {
    std::string name;
    std::vector<int64_t> shape;
    Dtype dtype;
    size_t offset;
  };

  const Entry& find(const std::string& name) const;

  std::vector<Entry> entries_;
  std::vector<char> blob_;
  nlohmann::json config_;
};

}  // namespace firank
