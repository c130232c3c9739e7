#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sacmoe/params.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

enum class Act { Relu, Tanh, None };

// Dense network spec: widths = {in, hidden..., out}; hidden_act between
// layers, linear output.
struct MlpSpec {
  std::vector<int> widths;
  Act hidden_act = Act::Relu;
};

// Registers weights/biases named "<prefix>.w<i>" / "<prefix>.b<i>".
template <typename T>
void mlp_init(ParamStore<T>& ps, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  for (size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    int in = spec.widths[l], out = spec.widths[l + 1];
    T bound = T(1) / std::sqrt(static_cast<T>(in));
    ps.add_uniform(prefix + ".w" + std::to_string(l), in, out, bound, rng);
    ps.add_uniform(prefix + ".b" + std::to_string(l), 1, out, bound, rng);
  }
}

template <typename T>
typename Tape<T>::Ref apply_act(Tape<T>& tp, typename Tape<T>::Ref x, Act act) {
  switch (act) {
    case Act::Relu: return tp.relu(x);
    case Act::Tanh: return tp.tanh(x);
    default: return x;
  }
}

// x: B x in. Affine layers interleaved with the configured activation.
template <typename T>
typename Tape<T>::Ref mlp_forward(Tape<T>& tp, typename Tape<T>::Ref x, ParamStore<T>& ps,
                                  const std::string& prefix, const MlpSpec& spec) {
  if (tp.val(x).cols() != spec.widths.front())
    throw ShapeMismatch(prefix + ": input width " + std::to_string(tp.val(x).cols()) + " != " +
                        std::to_string(spec.widths.front()));
  auto h = x;
  size_t layers = spec.widths.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    auto w = tp.param(ps, ps.require(prefix + ".w" + std::to_string(l)));
    auto b = tp.param(ps, ps.require(prefix + ".b" + std::to_string(l)));
    h = tp.affine(h, w, b);
    if (l + 1 < layers) h = apply_act(tp, h, spec.hidden_act);
  }
  return h;
}

}  // namespace sacmoe
