#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "alpn/adam.hpp"
#include "alpn/catalog.hpp"
#include "alpn/env.hpp"
#include "alpn/errors.hpp"
#include "alpn/nn.hpp"
#include "alpn/rng.hpp"
#include "alpn/tensor.hpp"

namespace alpn {

// ---------------------------------------------------------------------------
// Hyperparameters and variants
// ---------------------------------------------------------------------------

enum class AgentVariant { kA2C, kPPO, kEPPO };

inline const char* variant_name(AgentVariant v) {
  switch (v) {
    case AgentVariant::kA2C: return "a2c";
    case AgentVariant::kPPO: return "ppo";
    case AgentVariant::kEPPO: return "eppo";
  }
  return "?";
}

inline AgentVariant variant_from_name(const std::string& name) {
  if (name == "a2c") return AgentVariant::kA2C;
  if (name == "ppo") return AgentVariant::kPPO;
  if (name == "eppo") return AgentVariant::kEPPO;
  throw ConfigError("agent.variant must be one of a2c|ppo|eppo, got '" + name +
                    "'");
}

struct AgentHyper {
  double gamma = 0.5;
  double clip_eps = 0.2;
  double alpha = 0.01;    // entropy temperature
  double vf_coef = 0.5;   // value-loss coefficient
  double lr = 2e-3;
  int update_epochs = 4;
  int minibatch_size = 256;
  int episodes_per_update = 8;
  int buffer_capacity = 64;  // episodes
  bool normalize_advantages = true;
  int hidden = 64;

  void validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("agent.gamma must be in [0, 1]");
    if (clip_eps <= 0.0) throw ConfigError("agent.clip_eps must be > 0");
    if (alpha < 0.0) throw ConfigError("agent.alpha must be >= 0");
    if (vf_coef < 0.0) throw ConfigError("agent.vf_coef must be >= 0");
    if (lr <= 0.0) throw ConfigError("agent.lr must be > 0");
    if (update_epochs < 1) throw ConfigError("agent.update_epochs must be >= 1");
    if (minibatch_size < 1) throw ConfigError("agent.minibatch_size must be >= 1");
    if (episodes_per_update < 1) {
      throw ConfigError("agent.episodes_per_update must be >= 1");
    }
    if (buffer_capacity < 1) throw ConfigError("agent.buffer_capacity must be >= 1");
    if (hidden < 1) throw ConfigError("agent.hidden must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Actor-critic network
// ---------------------------------------------------------------------------

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

// Shared trunk (state -> hidden -> hidden, tanh), a softmax policy head over
// the exercise set and a scalar value head.
class ActorCriticNet {
 public:
  ActorCriticNet() = default;

  ActorCriticNet(int state_dim, int hidden, RngStream& rng)
      : state_dim_(state_dim), hidden_(hidden) {
    w1_ = ParamTensor("agent.trunk1.w", hidden, state_dim);
    b1_ = ParamTensor("agent.trunk1.b", hidden, 1);
    w2_ = ParamTensor("agent.trunk2.w", hidden, hidden);
    b2_ = ParamTensor("agent.trunk2.b", hidden, 1);
    wp_ = ParamTensor("agent.policy.w", state_dim, hidden);
    bp_ = ParamTensor("agent.policy.b", state_dim, 1);
    wv_ = ParamTensor("agent.value.w", 1, hidden);
    bv_ = ParamTensor("agent.value.b", 1, 1);
    w1_.xavier_init(rng);
    w2_.xavier_init(rng);
    wp_.xavier_init(rng);
    wv_.xavier_init(rng);
  }

  int action_count() const { return state_dim_; }
  int hidden_width() const { return hidden_; }

  std::vector<ParamTensor*> params() {
    return {&w1_, &b1_, &w2_, &b2_, &wp_, &bp_, &wv_, &bv_};
  }
  std::vector<const ParamTensor*> params() const {
    auto mut = const_cast<ActorCriticNet*>(this)->params();
    return std::vector<const ParamTensor*>(mut.begin(), mut.end());
  }

  struct Forward {
    DenseCache c1, c2, cp, cv;
    Vector logits;
    Vector probs;
    double value = 0.0;
  };

  Forward forward(const Vector& state) const {
    Forward f;
    const Vector h1 =
        dense_forward(state, w1_, b1_, Activation::kTanh, &f.c1);
    const Vector h2 = dense_forward(h1, w2_, b2_, Activation::kTanh, &f.c2);
    f.logits = dense_forward(h2, wp_, bp_, Activation::kIdentity, &f.cp);
    f.probs = softmax(f.logits);
    f.value = dense_forward(h2, wv_, bv_, Activation::kIdentity, &f.cv)[0];
    return f;
  }

  // Accumulates gradients given dL/dlogits and dL/dvalue for the forward
  // pass captured in `f`.
  void backward(const Forward& f, const Vector& dlogits, double dvalue) {
    Vector dh2 =
        dense_backward(dlogits, f.cp, wp_, bp_, Activation::kIdentity);
    dh2 += dense_backward(Vector(Vector::Constant(1, dvalue)), f.cv, wv_, bv_,
                          Activation::kIdentity);
    const Vector dh1 = dense_backward(dh2, f.c2, w2_, b2_, Activation::kTanh);
    dense_backward(dh1, f.c1, w1_, b1_, Activation::kTanh);
  }

  // Samples an action; the log-probability, policy entropy and value estimate
  // all come from the same forward pass.
  ActResult act(const KnowledgeState& state, RngStream& rng) const {
    const Forward f = forward(state.probs());
    ActResult r;
    r.action = rng.categorical(f.probs);
    r.log_prob = std::log(f.probs[r.action]);
    r.entropy = entropy(f.probs);
    r.value = f.value;
    return r;
  }

  ActResult act_greedy(const KnowledgeState& state) const {
    const Forward f = forward(state.probs());
    ActResult r;
    Eigen::Index a = 0;
    f.probs.maxCoeff(&a);
    r.action = static_cast<int>(a);
    r.log_prob = std::log(f.probs[r.action]);
    r.entropy = entropy(f.probs);
    r.value = f.value;
    return r;
  }

 private:
  int state_dim_ = 0;
  int hidden_ = 0;
  ParamTensor w1_, b1_, w2_, b2_, wp_, bp_, wv_, bv_;
};

// ---------------------------------------------------------------------------
// Transitions and replay buffer
// ---------------------------------------------------------------------------

struct TransitionRecord {
  KnowledgeState state;
  int action = 0;
  double reward = 0.0;
  KnowledgeState next_state;
  bool done = false;
  // Recorded from the collecting policy at rollout time.
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
  // Filled once the episode is complete.
  double mc_return = 0.0;
  double advantage = 0.0;
};

using EpisodeTransitions = std::vector<TransitionRecord>;

// Ordered episode storage with FIFO eviction; episodes never interleave.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity_episodes)
      : capacity_(capacity_episodes) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be >= 1");
  }

  void push(EpisodeTransitions episode) {
    episodes_.push_back(std::move(episode));
    while (episodes_.size() > capacity_) episodes_.pop_front();
  }

  std::size_t episode_count() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  const EpisodeTransitions& episode(std::size_t i) const { return episodes_[i]; }

  // The `k` most recently stored episodes, oldest first.
  std::vector<const EpisodeTransitions*> latest(std::size_t k) const {
    k = std::min(k, episodes_.size());
    std::vector<const EpisodeTransitions*> out;
    out.reserve(k);
    for (std::size_t i = episodes_.size() - k; i < episodes_.size(); ++i) {
      out.push_back(&episodes_[i]);
    }
    return out;
  }

 private:
  std::deque<EpisodeTransitions> episodes_;
  std::size_t capacity_;
};

// ---------------------------------------------------------------------------
// Advantage estimation and surrogate pieces
// ---------------------------------------------------------------------------

// Monte Carlo discounted returns by backward recursion; no bootstrapping, a
// truncated episode keeps its observed partial sum.
inline std::vector<double> discounted_returns(const EpisodeTransitions& episode,
                                              double gamma) {
  std::vector<double> g(episode.size());
  double acc = 0.0;
  for (std::size_t i = episode.size(); i-- > 0;) {
    acc = episode[i].reward + gamma * acc;
    g[i] = acc;
  }
  return g;
}

// A_t = sum_{t' >= t} gamma^(t'-t) r_t' - V(s_t) with the collection-time
// value estimate.
inline std::vector<double> discounted_advantages(
    const EpisodeTransitions& episode, double gamma) {
  if (episode.empty()) {
    throw ConfigError("discounted_advantages: empty episode");
  }
  std::vector<double> adv = discounted_returns(episode, gamma);
  for (std::size_t i = 0; i < episode.size(); ++i) adv[i] -= episode[i].value;
  return adv;
}

inline double prob_ratio(double log_prob_new, double log_prob_old) {
  return std::exp(log_prob_new - log_prob_old);
}

inline double clipped_surrogate(double ratio, double advantage,
                                double clip_eps) {
  if (clip_eps <= 0.0) throw ConfigError("clip_eps must be > 0");
  const double clipped =
      std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage;
  return std::min(ratio * advantage, clipped);
}

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

struct ObjectiveParts {
  double objective = 0.0;  // the maximized quantity (batch mean)
  double clip_term = 0.0;
  double value_term = 0.0;  // (V_target - V)^2 batch mean, before vf_coef
  double entropy_term = 0.0;
};

namespace detail {

// Shared PPO/EPPO objective. With buffered_entropy the stored collection-time
// entropy enters the objective as a constant (no gradient); otherwise the
// entropy of the current policy is used and differentiated. Gradients of the
// objective (ascent direction) are accumulated into the network.
inline ObjectiveParts clipped_objective(
    const std::vector<const TransitionRecord*>& minibatch, ActorCriticNet& net,
    const AgentHyper& h, bool buffered_entropy) {
  if (minibatch.empty()) throw UsageError("objective: empty minibatch");
  ObjectiveParts parts;
  const double inv = 1.0 / static_cast<double>(minibatch.size());
  for (const TransitionRecord* r : minibatch) {
    const ActorCriticNet::Forward f = net.forward(r->state.probs());
    const double lp_new = std::log(f.probs[r->action]);
    const double ratio = prob_ratio(lp_new, r->log_prob);
    const double unclipped = ratio * r->advantage;
    const double clipped =
        std::clamp(ratio, 1.0 - h.clip_eps, 1.0 + h.clip_eps) * r->advantage;
    const double surr = std::min(unclipped, clipped);

    Vector dlogits = Vector::Zero(f.probs.size());
    if (unclipped <= clipped) {
      // min() selects the unclipped branch; d(ratio*A)/dlogits.
      dlogits = (ratio * r->advantage) * (-f.probs);
      dlogits[r->action] += ratio * r->advantage;
    }
    // else: the clipped branch is active and saturated, zero policy gradient.

    const double verr = r->mc_return - f.value;
    const double dvalue = 2.0 * h.vf_coef * verr;

    double h_term;
    if (buffered_entropy) {
      h_term = r->entropy;  // stored scalar from the collecting policy
    } else {
      h_term = entropy(f.probs);
      dlogits += h.alpha * entropy_backward_logits(f.probs, h_term);
    }

    parts.objective += surr - h.vf_coef * verr * verr + h.alpha * h_term;
    parts.clip_term += surr;
    parts.value_term += verr * verr;
    parts.entropy_term += h_term;
    net.backward(f, inv * dlogits, inv * dvalue);
  }
  parts.objective *= inv;
  parts.clip_term *= inv;
  parts.value_term *= inv;
  parts.entropy_term *= inv;
  return parts;
}

}  // namespace detail

// EPPO: the entropy bonus is the value stored in the buffer at collection
// time; it raises the reported objective but carries no gradient.
inline ObjectiveParts eppo_objective(
    const std::vector<const TransitionRecord*>& minibatch, ActorCriticNet& net,
    const AgentHyper& h) {
  return detail::clipped_objective(minibatch, net, h, /*buffered_entropy=*/true);
}

// PPO: the entropy bonus is recomputed from the current policy each epoch and
// is differentiated.
inline ObjectiveParts ppo_objective(
    const std::vector<const TransitionRecord*>& minibatch, ActorCriticNet& net,
    const AgentHyper& h) {
  return detail::clipped_objective(minibatch, net, h,
                                   /*buffered_entropy=*/false);
}

// A2C: single-epoch on-policy update, mean[log pi(a|s) A - vf (G - V)^2 +
// alpha H]; no ratio, no clipping, no data reuse.
inline ObjectiveParts a2c_objective(
    const std::vector<const TransitionRecord*>& batch, ActorCriticNet& net,
    const AgentHyper& h) {
  if (batch.empty()) throw UsageError("a2c: empty batch");
  ObjectiveParts parts;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const TransitionRecord* r : batch) {
    const ActorCriticNet::Forward f = net.forward(r->state.probs());
    const double lp = std::log(f.probs[r->action]);
    Vector dlogits = r->advantage * (-f.probs);
    dlogits[r->action] += r->advantage;
    const double h_live = entropy(f.probs);
    dlogits += h.alpha * entropy_backward_logits(f.probs, h_live);
    const double verr = r->mc_return - f.value;
    parts.objective +=
        lp * r->advantage - h.vf_coef * verr * verr + h.alpha * h_live;
    parts.clip_term += lp * r->advantage;
    parts.value_term += verr * verr;
    parts.entropy_term += h_live;
    net.backward(f, inv * dlogits, inv * (2.0 * h.vf_coef * verr));
  }
  parts.objective *= inv;
  parts.clip_term *= inv;
  parts.value_term *= inv;
  parts.entropy_term *= inv;
  return parts;
}

inline void ascend(AdamOptimizer& adam,
                   const std::vector<ParamTensor*>& params) {
  // Adam descends; flip the ascent gradients once per step.
  for (ParamTensor* p : params) p->grad = -p->grad;
  adam.step();
}

inline void a2c_update(const std::vector<const EpisodeTransitions*>& episodes,
                       ActorCriticNet& net, AdamOptimizer& adam,
                       const AgentHyper& h) {
  std::vector<const TransitionRecord*> batch;
  for (const EpisodeTransitions* ep : episodes) {
    for (const TransitionRecord& r : *ep) batch.push_back(&r);
  }
  if (batch.empty()) return;
  a2c_objective(batch, net, h);
  ascend(adam, net.params());
}

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

struct StepTrace {
  int t = 0;
  int action = 0;
  int correctness = 0;
  double reward = 0.0;
  double apr = 0.0;
  double lg = 0.0;
  double d = 0.0;
  double lambda = 0.0;
  int n_action = 0;
  bool penalty_applied = false;
};

struct RolloutResult {
  EpisodeTransitions transitions;
  double initial_apr = 0.0;
  double final_apr = 0.0;
  double cumulative_reward = 0.0;
  int length = 0;
  bool truncated = false;
  std::vector<int> actions;
  std::vector<StepTrace> trace;               // when requested
  std::vector<KnowledgeState> states;         // when requested: s_0..s_T
};

struct RolloutOptions {
  bool record_trace = false;
  bool record_states = false;
  bool greedy = false;
};

inline RolloutResult run_episode(const Environment& env,
                                 const ActorCriticNet& net, RngStream rng,
                                 const RolloutOptions& opt = {}) {
  RolloutResult out;
  Episode ep = env.reset(rng);
  out.initial_apr = ep.initial_apr();
  if (opt.record_states) out.states.push_back(ep.state());
  while (!ep.done()) {
    const ActResult act =
        opt.greedy ? net.act_greedy(ep.state()) : net.act(ep.state(), rng);
    TransitionRecord rec;
    rec.state = ep.state();
    rec.action = act.action;
    rec.log_prob = act.log_prob;
    rec.entropy = act.entropy;
    rec.value = act.value;
    const EnvStep step = ep.step(act.action, rng);
    rec.reward = step.reward;
    rec.next_state = step.next_state;
    rec.done = step.done;
    out.cumulative_reward += step.reward;
    out.actions.push_back(act.action);
    if (opt.record_states) out.states.push_back(step.next_state);
    if (opt.record_trace) {
      out.trace.push_back(StepTrace{ep.steps(), act.action, step.correctness,
                                    step.reward, step.info.apr_now,
                                    step.info.lg, step.info.d,
                                    step.info.lambda, step.info.n_action,
                                    step.info.penalty_applied});
    }
    out.transitions.push_back(std::move(rec));
    if (step.done) out.truncated = step.info.truncated;
  }
  out.length = ep.steps();
  out.final_apr = ep.apr_now();
  return out;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpisodeRecord {
  int episode = 0;
  std::uint64_t seed = 0;
  AgentVariant variant = AgentVariant::kEPPO;
  double initial_apr = 0.0;
  double final_apr = 0.0;
  int path_length = 0;
  double cumulative_reward = 0.0;
  bool truncated = false;
  std::vector<int> actions;
  std::vector<StepTrace> trace;
};

// Runs the episodic loop: roll out a window of episodes with the frozen
// policy, store transitions and collection-time entropies, estimate
// Monte Carlo advantages, then update. Per-episode randomness derives from
// (seed, episode_index) so episode-level parallelism cannot change results.
class Trainer {
 public:
  Trainer(const Environment* env, AgentVariant variant, AgentHyper hyper,
          std::uint64_t seed)
      : env_(env), variant_(variant), hyper_(hyper), seed_(seed) {
    hyper_.validate();
    RngStream init_rng(seed, streams::kNetInit);
    // The net lives behind a stable address: the optimizer keeps pointers
    // into its parameter tensors, and Trainer itself must stay movable.
    net_ = std::make_unique<ActorCriticNet>(env->action_count(), hyper_.hidden,
                                            init_rng);
    adam_ = std::make_unique<AdamOptimizer>(net_->params(),
                                            AdamHyper{hyper_.lr});
    buffer_ = std::make_unique<ReplayBuffer>(
        static_cast<std::size_t>(hyper_.buffer_capacity));
  }

  const Environment& env() const { return *env_; }
  AgentVariant variant() const { return variant_; }
  const AgentHyper& hyper() const { return hyper_; }
  std::uint64_t seed() const { return seed_; }
  int episodes_done() const { return episodes_done_; }
  std::int64_t update_count() const { return update_count_; }
  ActorCriticNet& net() { return *net_; }
  const ActorCriticNet& net() const { return *net_; }
  AdamOptimizer& adam() { return *adam_; }
  ReplayBuffer& buffer() { return *buffer_; }
  std::vector<EpisodeRecord>& history() { return history_; }
  const std::vector<EpisodeRecord>& history() const { return history_; }

  // For resuming: fast-forward the episode counter without replaying.
  void restore_progress(int episodes_done, std::int64_t update_count) {
    episodes_done_ = episodes_done;
    update_count_ = update_count;
  }

  // Advances training until `target` episodes have been collected in total.
  // `on_window` fires after every completed update window.
  void run_until(int target, int rollout_threads = 1,
                 bool record_traces = false,
                 const std::function<void(Trainer&)>& on_window = {}) {
    while (episodes_done_ < target) {
      const int window =
          std::min(hyper_.episodes_per_update, target - episodes_done_);
      std::vector<RolloutResult> results = collect(window, rollout_threads,
                                                   record_traces);
      std::vector<const EpisodeTransitions*> batch_episodes;
      for (int i = 0; i < window; ++i) {
        RolloutResult& r = results[i];
        EpisodeRecord rec;
        rec.episode = episodes_done_ + i;
        rec.seed = seed_;
        rec.variant = variant_;
        rec.initial_apr = r.initial_apr;
        rec.final_apr = r.final_apr;
        rec.path_length = r.length;
        rec.cumulative_reward = r.cumulative_reward;
        rec.truncated = r.truncated;
        rec.actions = std::move(r.actions);
        rec.trace = std::move(r.trace);
        history_.push_back(std::move(rec));
        fill_targets(r.transitions);
        buffer_->push(std::move(r.transitions));
      }
      batch_episodes = buffer_->latest(static_cast<std::size_t>(window));
      episodes_done_ += window;
      update(batch_episodes);
      ++update_count_;
      if (on_window) on_window(*this);
    }
  }

 private:
  std::vector<RolloutResult> collect(int window, int threads,
                                     bool record_traces) {
    std::vector<RolloutResult> results(window);
    RolloutOptions opt;
    opt.record_trace = record_traces;
    auto run_one = [&](int i) {
      RngStream rng(seed_,
                    static_cast<std::uint64_t>(episodes_done_ + i));
      results[i] = run_episode(*env_, *net_, std::move(rng), opt);
    };
    if (threads <= 1 || window <= 1) {
      for (int i = 0; i < window; ++i) run_one(i);
      return results;
    }
    std::atomic<int> next{0};
    const int workers = std::min(threads, window);
    std::vector<std::future<void>> futs;
    futs.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      futs.push_back(std::async(std::launch::async, [&]() {
        for (int i = next.fetch_add(1); i < window; i = next.fetch_add(1)) {
          run_one(i);
        }
      }));
    }
    for (auto& f : futs) f.get();
    return results;
  }

  void fill_targets(EpisodeTransitions& episode) {
    if (episode.empty()) return;
    const std::vector<double> g = discounted_returns(episode, hyper_.gamma);
    for (std::size_t i = 0; i < episode.size(); ++i) {
      episode[i].mc_return = g[i];
      episode[i].advantage = g[i] - episode[i].value;
    }
  }

  void update(const std::vector<const EpisodeTransitions*>& episodes) {
    std::vector<const TransitionRecord*> batch;
    for (const EpisodeTransitions* ep : episodes) {
      for (const TransitionRecord& r : *ep) batch.push_back(&r);
    }
    if (batch.empty()) return;

    if (hyper_.normalize_advantages) {
      double mean = 0.0;
      for (const TransitionRecord* r : batch) mean += r->advantage;
      mean /= static_cast<double>(batch.size());
      double var = 0.0;
      for (const TransitionRecord* r : batch) {
        const double c = r->advantage - mean;
        var += c * c;
      }
      var /= static_cast<double>(batch.size());
      const double denom = std::sqrt(var) + 1e-8;
      for (const TransitionRecord* r : batch) {
        const_cast<TransitionRecord*>(r)->advantage =
            (r->advantage - mean) / denom;
      }
    }

    if (variant_ == AgentVariant::kA2C) {
      a2c_objective(batch, *net_, hyper_);
      ascend(*adam_, net_->params());
      return;
    }

    const bool buffered = variant_ == AgentVariant::kEPPO;
    for (int epoch = 0; epoch < hyper_.update_epochs; ++epoch) {
      RngStream shuffle_rng(
          seed_, streams::kUpdate +
                     static_cast<std::uint64_t>(update_count_) *
                         static_cast<std::uint64_t>(hyper_.update_epochs) +
                     static_cast<std::uint64_t>(epoch));
      std::vector<const TransitionRecord*> order = batch;
      shuffle_rng.shuffle(order);
      const std::size_t mb = static_cast<std::size_t>(hyper_.minibatch_size);
      for (std::size_t begin = 0; begin < order.size(); begin += mb) {
        const std::size_t end = std::min(order.size(), begin + mb);
        std::vector<const TransitionRecord*> minibatch(
            order.begin() + begin, order.begin() + end);
        detail::clipped_objective(minibatch, *net_, hyper_, buffered);
        ascend(*adam_, net_->params());
      }
    }
  }

  const Environment* env_;
  AgentVariant variant_;
  AgentHyper hyper_;
  std::uint64_t seed_;
  std::unique_ptr<ActorCriticNet> net_;
  std::unique_ptr<AdamOptimizer> adam_;
  std::unique_ptr<ReplayBuffer> buffer_;
  std::vector<EpisodeRecord> history_;
  int episodes_done_ = 0;
  std::int64_t update_count_ = 0;
};

}  // namespace alpn
