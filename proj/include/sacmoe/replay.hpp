#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "sacmoe/errors.hpp"
#include "sacmoe/rng.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

struct Batch {
  MatF obs, act, next_obs;
  VecF rew;
  VecF done;  // bootstrap mask: 1 only on true terminations, not truncations
  std::vector<int> ctx;
};

// Uniform FIFO replay buffer (float storage).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
      : cap_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
    obs_.resize(cap_ * obs_dim_);
    act_.resize(cap_ * act_dim_);
    next_obs_.resize(cap_ * obs_dim_);
    rew_.resize(cap_);
    done_.resize(cap_);
    ctx_.resize(cap_);
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return cap_; }

  void push(const VecF& obs, const VecF& act, float rew, const VecF& next_obs, bool done, int ctx) {
    if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || act.size() != act_dim_)
      throw ShapeMismatch("replay push: dims");
    const std::size_t i = head_;
    std::copy(obs.data(), obs.data() + obs_dim_, obs_.begin() + i * obs_dim_);
    std::copy(act.data(), act.data() + act_dim_, act_.begin() + i * act_dim_);
    std::copy(next_obs.data(), next_obs.data() + obs_dim_, next_obs_.begin() + i * obs_dim_);
    rew_[i] = rew;
    done_[i] = done ? 1.f : 0.f;
    ctx_[i] = ctx;
    head_ = (head_ + 1) % cap_;
    if (size_ < cap_) ++size_;
  }

  // Uniform sample without replacement within the batch.
  Batch sample(int n, Rng& rng) const {
    if (n <= 0 || static_cast<std::size_t>(n) > size_) throw ConfigError("replay sample: bad batch size");
    std::unordered_set<std::size_t> seen;
    std::vector<std::size_t> idx;
    idx.reserve(n);
    while (static_cast<int>(idx.size()) < n) {
      std::size_t i = static_cast<std::size_t>(uniform01(rng) * size_) % size_;
      if (seen.insert(i).second) idx.push_back(i);
    }
    Batch b;
    b.obs.resize(n, obs_dim_);
    b.act.resize(n, act_dim_);
    b.next_obs.resize(n, obs_dim_);
    b.rew.resize(n);
    b.done.resize(n);
    b.ctx.resize(n);
    for (int r = 0; r < n; ++r) {
      const std::size_t i = idx[r];
      for (int j = 0; j < obs_dim_; ++j) {
        b.obs(r, j) = obs_[i * obs_dim_ + j];
        b.next_obs(r, j) = next_obs_[i * obs_dim_ + j];
      }
      for (int j = 0; j < act_dim_; ++j) b.act(r, j) = act_[i * act_dim_ + j];
      b.rew(r) = rew_[i];
      b.done(r) = done_[i];
      b.ctx[r] = ctx_[i];
    }
    return b;
  }

  // raw access for snapshotting
  std::size_t head() const { return head_; }
  const std::vector<float>& raw_obs() const { return obs_; }
  const std::vector<float>& raw_act() const { return act_; }
  const std::vector<float>& raw_next_obs() const { return next_obs_; }
  const std::vector<float>& raw_rew() const { return rew_; }
  const std::vector<float>& raw_done() const { return done_; }
  const std::vector<int>& raw_ctx() const { return ctx_; }
  void restore(std::size_t size, std::size_t head, std::vector<float> obs, std::vector<float> act,
               std::vector<float> next_obs, std::vector<float> rew, std::vector<float> done,
               std::vector<int> ctx) {
    if (obs.size() != cap_ * obs_dim_ || act.size() != cap_ * act_dim_ || rew.size() != cap_)
      throw ShapeMismatch("replay restore: dims");
    size_ = size;
    head_ = head;
    obs_ = std::move(obs);
    act_ = std::move(act);
    next_obs_ = std::move(next_obs);
    rew_ = std::move(rew);
    done_ = std::move(done);
    ctx_ = std::move(ctx);
  }

 private:
  std::size_t cap_;
  int obs_dim_, act_dim_;
  std::size_t size_ = 0, head_ = 0;
  std::vector<float> obs_, act_, next_obs_, rew_, done_;
  std::vector<int> ctx_;
};

}  // namespace sacmoe
