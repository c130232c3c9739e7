#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacmoe/errors.hpp"
#include "sacmoe/params.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts unsupported");

// On-disk format: magic+version line, u64 manifest length, manifest JSON
// (names, shapes, dtype, offsets, plus free-form meta), then the raw
// little-endian array payload. Round trips are bit-exact.
class Checkpoint {
 public:
  static constexpr int kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();

  void put_f32(const std::string& name, const MatF& m) { put(name, "f32", m.data(), m.rows(), m.cols(), 4); }
  void put_f64(const std::string& name, const MatD& m) { put(name, "f64", m.data(), m.rows(), m.cols(), 8); }

  bool has(const std::string& name) const { return find(name) >= 0; }
  std::vector<std::string> names() const;

  MatF get_f32(const std::string& name) const;
  MatD get_f64(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  struct Array {
    std::string name;
    std::string dtype;
    std::int64_t rows = 0, cols = 0;
    std::vector<char> bytes;
  };
  std::vector<Array> arrays_;

  int find(const std::string& name) const;
  void put(const std::string& name, const char* dtype, const void* data, std::int64_t rows,
           std::int64_t cols, int elem_size);
};

// ParamStore <-> checkpoint glue. Values and optimizer moments are stored so
// a resumed run continues exactly; the Adam step counter rides in meta.
template <typename T>
void store_to_checkpoint(Checkpoint& ck, const std::string& prefix, const ParamStore<T>& ps) {
  constexpr bool f32 = sizeof(T) == 4;
  for (int i = 0; i < ps.count(); ++i) {
    const auto& e = ps.entry(i);
    const std::string base = prefix + "/" + e.name;
    if constexpr (f32) {
      ck.put_f32(base, e.value);
      ck.put_f32(base + "#m", e.m);
      ck.put_f32(base + "#v", e.v);
    } else {
      ck.put_f64(base, e.value);
      ck.put_f64(base + "#m", e.m);
      ck.put_f64(base + "#v", e.v);
    }
  }
  ck.meta["adam_t"][prefix] = ps.step_count();
}

template <typename T>
void store_from_checkpoint(const Checkpoint& ck, const std::string& prefix, ParamStore<T>& ps) {
  constexpr bool f32 = sizeof(T) == 4;
  for (int i = 0; i < ps.count(); ++i) {
    auto& e = ps.entry(i);
    const std::string base = prefix + "/" + e.name;
    Mat<T> val, m, v;
    if constexpr (f32) {
      val = ck.get_f32(base);
      m = ck.get_f32(base + "#m");
      v = ck.get_f32(base + "#v");
    } else {
      val = ck.get_f64(base);
      m = ck.get_f64(base + "#m");
      v = ck.get_f64(base + "#v");
    }
    if (val.rows() != e.value.rows() || val.cols() != e.value.cols())
      throw ShapeMismatch("checkpoint shape mismatch for " + base);
    e.value = val;
    e.m = m;
    e.v = v;
  }
  if (ck.meta.contains("adam_t") && ck.meta["adam_t"].contains(prefix))
    ps.set_step_count(ck.meta["adam_t"][prefix].get<long>());
}

}  // namespace sacmoe
