#include "sacmoe/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace sacmoe {

namespace {
constexpr char kMagic[9] = "SMCKPT01";  // 8 chars + NUL
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  out.reserve(arrays_.size());
  for (const auto& a : arrays_) out.push_back(a.name);
  return out;
}

int Checkpoint::find(const std::string& name) const {
  for (size_t i = 0; i < arrays_.size(); ++i)
    if (arrays_[i].name == name) return static_cast<int>(i);
  return -1;
}

void Checkpoint::put(const std::string& name, const char* dtype, const void* data,
                     std::int64_t rows, std::int64_t cols, int elem_size) {
  if (find(name) >= 0) throw ConfigError("checkpoint: duplicate array " + name);
  Array a;
  a.name = name;
  a.dtype = dtype;
  a.rows = rows;
  a.cols = cols;
  a.bytes.resize(static_cast<size_t>(rows * cols) * elem_size);
  if (!a.bytes.empty()) std::memcpy(a.bytes.data(), data, a.bytes.size());
  arrays_.push_back(std::move(a));
}

MatF Checkpoint::get_f32(const std::string& name) const {
  int i = find(name);
  if (i < 0) throw ConfigError("checkpoint: missing array " + name);
  const Array& a = arrays_[i];
  if (a.dtype != "f32") throw CheckpointVersionMismatch("checkpoint: dtype of " + name + " is " + a.dtype);
  MatF m(a.rows, a.cols);
  if (!a.bytes.empty()) std::memcpy(m.data(), a.bytes.data(), a.bytes.size());
  return m;
}

MatD Checkpoint::get_f64(const std::string& name) const {
  int i = find(name);
  if (i < 0) throw ConfigError("checkpoint: missing array " + name);
  const Array& a = arrays_[i];
  if (a.dtype != "f64") throw CheckpointVersionMismatch("checkpoint: dtype of " + name + " is " + a.dtype);
  MatD m(a.rows, a.cols);
  if (!a.bytes.empty()) std::memcpy(m.data(), a.bytes.data(), a.bytes.size());
  return m;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["meta"] = meta;
  auto arr = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& a : arrays_) {
    arr.push_back({{"name", a.name},
                   {"dtype", a.dtype},
                   {"rows", a.rows},
                   {"cols", a.cols},
                   {"offset", offset},
                   {"bytes", static_cast<std::int64_t>(a.bytes.size())}});
    offset += static_cast<std::int64_t>(a.bytes.size());
  }
  manifest["arrays"] = arr;
  const std::string mjson = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 8);
  std::uint64_t len = mjson.size();
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
  for (const auto& a : arrays_) os.write(a.bytes.data(), static_cast<std::streamsize>(a.bytes.size()));
  if (!os) throw ConfigError("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointVersionMismatch("checkpoint: bad magic in " + path);
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 8);
  std::string mjson(len, '\0');
  is.read(mjson.data(), static_cast<std::streamsize>(len));
  if (!is) throw CheckpointVersionMismatch("checkpoint: truncated manifest in " + path);
  nlohmann::json manifest = nlohmann::json::parse(mjson);
  if (manifest.at("version").get<int>() != kVersion)
    throw CheckpointVersionMismatch("checkpoint: version " + manifest.at("version").dump() +
                                    ", expected " + std::to_string(kVersion));
  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& j : manifest.at("arrays")) {
    Array a;
    a.name = j.at("name").get<std::string>();
    a.dtype = j.at("dtype").get<std::string>();
    a.rows = j.at("rows").get<std::int64_t>();
    a.cols = j.at("cols").get<std::int64_t>();
    a.bytes.resize(j.at("bytes").get<std::int64_t>());
    is.read(a.bytes.data(), static_cast<std::streamsize>(a.bytes.size()));
    if (!is) throw CheckpointVersionMismatch("checkpoint: truncated payload in " + path);
    ck.arrays_.push_back(std::move(a));
  }
  return ck;
}

}  // namespace sacmoe
