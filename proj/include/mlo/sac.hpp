#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <vector>

#include "mlo/mdp.hpp"
#include "mlo/nn.hpp"
#include "mlo/policy.hpp"
#include "mlo/rng.hpp"

namespace mlo {

struct TrainerConfig {
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double gamma = 0.99;
    double tau = 5e-3;          // polyak factor rho = 1 - tau
    int batch_size = 512;
    int update_period = 50;     // environment steps between learning sessions
    int updates_per_session = 10;
    double clip_norm = 1.0;
    bool avg_operator = true;   // false -> min over the twin critics
    bool entropy_tuning = true;
    double target_entropy_scale = 0.49;  // of log|A_head|
    double alpha_init = 0.2;
    size_t replay_capacity = 100000;
    bool plain_sgd = false;

    // network widths (64/64/W=10 by default; shrink for desk-scale runs)
    int hidden = 64;
    int dense = 64;
    int window = 10;
};

// FIFO ring with uniform sampling. Appends may come from parallel
// simulations; sampling happens on the single trainer thread.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}

    void append(const Transition& t);
    size_t size() const;
    std::vector<Transition> sample(int batch, RngStream& rng) const;

private:
    size_t capacity_;
    size_t next_ = 0;
    std::vector<Transition> data_;
    mutable std::mutex mu_;
};

struct ActionChoice {
    Head head = Head::H1;
    int index = 0;
    std::vector<double> fractions;
};

// Multi-headed recurrent discrete soft actor-critic. One actor and two
// critics, each with its own trunk of identical shape, plus Polyak-averaged
// target critics and per-head temperatures.
class SacAgent {
public:
    SacAgent(const TrainerConfig& cfg, uint64_t seed);

    // Policy distributions for both heads. [0] has 11 entries, [1] 66.
    std::vector<std::vector<double>> forward_actor(const std::vector<double>& window) const;

    ActionChoice act(const std::vector<double>& window, int n_f, bool explore, RngStream& rng) const;

    // Environment-step entry point: bumps the step counter and runs a
    // learning session every update_period steps (no-op when the buffer
    // holds fewer than batch_size transitions). Returns true if trained.
    bool on_env_step(ReplayBuffer& buffer, RngStream& rng);

    // One full update iteration: critics, actor, temperature, Polyak.
    void update(const std::vector<Transition>& batch);

    // --- loss internals, exposed for gradient verification ---
    std::vector<double> critic_targets(const std::vector<Transition>& batch) const;
    double critic_loss_grad(const std::vector<Transition>& batch, const std::vector<double>& y,
                            std::vector<double>* g1, std::vector<double>* g2) const;
    double actor_loss_grad(const std::vector<Transition>& batch, std::vector<double>* g) const;
    // dJ/d(log alpha) per head and entropy-gap diagnostics.
    std::array<double, 2> temperature_grad(const std::vector<Transition>& batch) const;

    double alpha(Head h) const { return std::exp(log_alpha_[static_cast<int>(h)]); }
    long env_steps() const { return env_steps_; }
    double last_grad_norm() const { return last_grad_norm_; }

    void save(std::ostream& os) const;
    void load(std::istream& is);

    const TrainerConfig& config() const { return cfg_; }

    nn::Net actor, critic1, critic2, target1, target2;

private:
    std::vector<double> to_window(const std::vector<float>& v) const {
        return std::vector<double>(v.begin(), v.end());
    }

    TrainerConfig cfg_;
    std::array<double, 2> log_alpha_;
    std::array<double, 2> target_entropy_;
    nn::Adam opt_actor_, opt_c1_, opt_c2_, opt_alpha_;
    long env_steps_ = 0;
    double last_grad_norm_ = 0.0;
    std::vector<std::vector<double>> actions2_, actions3_;
};

}  // namespace mlo
