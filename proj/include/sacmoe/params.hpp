#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "sacmoe/errors.hpp"
#include "sacmoe/rng.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

// Named parameter arrays plus per-parameter optimizer moments. Shapes are
// fixed at construction; every update verifies the values stay finite.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Mat<T> value;
    Mat<T> grad;
    Mat<T> m;  // Adam first moment
    Mat<T> v;  // Adam second moment
  };

  int add(const std::string& name, int rows, int cols) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.value = Mat<T>::Zero(rows, cols);
    e.grad = Mat<T>::Zero(rows, cols);
    e.m = Mat<T>::Zero(rows, cols);
    e.v = Mat<T>::Zero(rows, cols);
    entries_.push_back(std::move(e));
    index_[name] = static_cast<int>(entries_.size()) - 1;
    return index_[name];
  }

  // U(-bound, bound) init, the usual fan-in rule when bound = 1/sqrt(fan_in).
  int add_uniform(const std::string& name, int rows, int cols, T bound, Rng& rng) {
    int id = add(name, rows, cols);
    Mat<T>& v = entries_[id].value;
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = static_cast<T>(uniform(rng, -bound, bound));
    return id;
  }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  int require(const std::string& name) const {
    int id = find(name);
    if (id < 0) throw ConfigError("unknown parameter: " + name);
    return id;
  }

  int count() const { return static_cast<int>(entries_.size()); }
  Entry& entry(int id) { return entries_.at(id); }
  const Entry& entry(int id) const { return entries_.at(id); }
  Mat<T>& value(int id) { return entries_.at(id).value; }
  const Mat<T>& value(int id) const { return entries_.at(id).value; }
  Mat<T>& grad(int id) { return entries_.at(id).grad; }

  Mat<T>& value(const std::string& name) { return entries_.at(require(name)).value; }

  void zero_grad() {
    for (auto& e : entries_) e.grad.setZero();
  }

  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }

  // Adam with the standard decay constants. A zero gradient leaves the
  // parameters unchanged (bias-corrected moments stay zero).
  void adam_step(T lr, T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8)) {
    ++t_;
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(t_));
    for (auto& e : entries_) {
      e.m = beta1 * e.m + (T(1) - beta1) * e.grad;
      e.v = (beta2 * e.v.array() + (T(1) - beta2) * e.grad.array().square()).matrix();
      auto mhat = e.m.array() / bc1;
      auto vhat = e.v.array() / bc2;
      e.value.array() -= lr * mhat / (vhat.sqrt() + eps);
      if (!e.value.allFinite()) throw NonFiniteLoss("non-finite parameter after update: " + e.name);
    }
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
  long t_ = 0;
};

// target <- (1 - tau) * target + tau * online, entry by entry, matched by name.
template <typename T>
void soft_update(ParamStore<T>& target, const ParamStore<T>& online, T tau) {
  if (target.count() != online.count()) throw ShapeMismatch("soft_update: entry count mismatch");
  for (int i = 0; i < online.count(); ++i) {
    const auto& src = online.entry(i);
    int tid = target.require(src.name);
    auto& dst = target.entry(tid);
    if (dst.value.rows() != src.value.rows() || dst.value.cols() != src.value.cols())
      throw ShapeMismatch("soft_update: shape mismatch for " + src.name);
    dst.value = (T(1) - tau) * dst.value + tau * src.value;
  }
}

template <typename T>
void copy_params(ParamStore<T>& target, const ParamStore<T>& online) {
  soft_update(target, online, T(1));
}

// Parameter leaf: the tape node holds a copy of the current value and routes
// its gradient back into the store.
template <typename T>
typename Tape<T>::Ref Tape<T>::param(ParamStore<T>& store, int entry) {
  Mat<T> val = store.value(entry);
  ParamStore<T>* ps = &store;
  return push(std::move(val), [ps, entry](Tape&, const Mat<T>& g) { ps->grad(entry) += g; });
}

}  // namespace sacmoe
