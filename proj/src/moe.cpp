#include "sacmoe/moe.hpp"

namespace sacmoe {

RouterDecision route_from_logits(const VecD& logits, const VecD& noise, int k) {
  const int E = static_cast<int>(logits.size());
  if (noise.size() != E) throw ShapeMismatch("route: noise size vs logits");
  if (k < 1 || k > E) throw ConfigError("route: need 1 <= k <= experts");

  RouterDecision d;
  d.logits = logits;
  d.noise = noise;

  // softmax over the raw logits
  d.probs = VecD(E);
  const double m = logits.maxCoeff();
  double z = 0;
  for (int e = 0; e < E; ++e) {
    d.probs(e) = std::exp(logits(e) - m);
    z += d.probs(e);
  }
  d.probs /= z;

  // top-k by noisy score; stable sort keeps the lowest index first on ties
  VecD noisy = logits + noise;
  std::vector<int> order(E);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return noisy(a) > noisy(b); });
  d.selected.assign(order.begin(), order.begin() + k);
  d.threshold = noisy(d.selected[k - 1]);

  // renormalized noiseless probabilities over the selected set
  d.weights = VecD(k);
  double wsum = 0;
  for (int i = 0; i < k; ++i) wsum += d.probs(d.selected[i]);
  for (int i = 0; i < k; ++i) d.weights(i) = d.probs(d.selected[i]) / wsum;
  return d;
}

double load_cv_squared(const VecD& loads) {
  const double mean = loads.mean();
  if (mean == 0.0) {
    std::cerr << "[moe] warning: zero-mean loads, returning load loss 0\n";
    return 0.0;
  }
  const double var = (loads.array() - mean).square().mean();  // population variance
  return var / (mean * mean);
}

VecD expected_loads(const std::vector<RouterDecision>& batch, int experts) {
  VecD loads = VecD::Zero(experts);
  for (const RouterDecision& d : batch) {
    if (d.logits.size() != experts) throw ShapeMismatch("expected_loads: expert count");
    for (int e = 0; e < experts; ++e) {
      const double noisy = d.logits(e) + d.noise(e);
      // P(noisy_e + eps_new >= threshold), eps_new ~ N(0, 1/E^2)
      const double z = (noisy - d.threshold) * experts;
      loads(e) += 0.5 * (1.0 + std::erf(z * 0.7071067811865475244));
    }
  }
  return loads;
}

double load_loss(const std::vector<RouterDecision>& batch, int experts) {
  return load_cv_squared(expected_loads(batch, experts));
}

}  // namespace sacmoe
