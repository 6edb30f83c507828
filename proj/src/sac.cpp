#include "mlo/sac.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mlo {

void ReplayBuffer::append(const Transition& t) {
    std::lock_guard<std::mutex> lock(mu_);
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[next_] = t;  // FIFO eviction
        next_ = (next_ + 1) % capacity_;
    }
}

size_t ReplayBuffer::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return data_.size();
}

std::vector<Transition> ReplayBuffer::sample(int batch, RngStream& rng) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (data_.size() < static_cast<size_t>(batch)) {
        throw std::runtime_error("replay buffer smaller than batch");
    }
    std::vector<Transition> out;
    out.reserve(batch);
    for (int i = 0; i < batch; ++i) {
        out.push_back(data_[rng.uniform_int(0, static_cast<int>(data_.size()) - 1)]);
    }
    return out;
}

namespace {
nn::Shape shape_for(const TrainerConfig& cfg) {
    nn::Shape s;
    s.input = kFrameDim;
    s.window = cfg.window;
    s.hidden = cfg.hidden;
    s.dense = cfg.dense;
    s.heads = {static_cast<int>(action_space_size(2, 10)),
               static_cast<int>(action_space_size(3, 10))};
    return s;
}
}  // namespace

SacAgent::SacAgent(const TrainerConfig& cfg, uint64_t seed) : cfg_(cfg) {
    const auto shape = shape_for(cfg);
    actor = nn::Net::xavier(shape, seed);
    critic1 = nn::Net::xavier(shape, seed + 1);
    critic2 = nn::Net::xavier(shape, seed + 2);
    target1 = critic1;
    target2 = critic2;
    log_alpha_ = {std::log(cfg.alpha_init), std::log(cfg.alpha_init)};
    for (int h = 0; h < 2; ++h) {
        target_entropy_[h] = cfg.target_entropy_scale * std::log(shape.heads[h]);
    }
    opt_actor_.lr = cfg.actor_lr;
    opt_c1_.lr = cfg.critic_lr;
    opt_c2_.lr = cfg.critic_lr;
    opt_alpha_.lr = cfg.critic_lr;
    opt_actor_.plain_sgd = opt_c1_.plain_sgd = opt_c2_.plain_sgd = opt_alpha_.plain_sgd =
        cfg.plain_sgd;
    actions2_ = enumerate_actions(2, 10);
    actions3_ = enumerate_actions(3, 10);
}

std::vector<std::vector<double>> SacAgent::forward_actor(const std::vector<double>& window) const {
    std::vector<std::vector<double>> logits;
    actor.forward(window, nullptr, &logits);
    std::vector<std::vector<double>> dists(2);
    nn::softmax(logits[0], &dists[0]);
    nn::softmax(logits[1], &dists[1]);
    return dists;
}

ActionChoice SacAgent::act(const std::vector<double>& window, int n_f, bool explore,
                           RngStream& rng) const {
    const auto sel = select_head(n_f);
    if (sel.bypass) throw std::invalid_argument("act: n_f=1 must be bypassed before the agent");
    const auto dists = forward_actor(window);
    const auto& p = dists[static_cast<int>(sel.head)];

    ActionChoice choice;
    choice.head = sel.head;
    if (explore) {
        double u = rng.uniform();
        int idx = static_cast<int>(p.size()) - 1;
        double acc = 0.0;
        for (size_t i = 0; i < p.size(); ++i) {
            acc += p[i];
            if (u < acc) {
                idx = static_cast<int>(i);
                break;
            }
        }
        choice.index = idx;
    } else {
        choice.index = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    choice.fractions =
        sel.head == Head::H1 ? actions2_[choice.index] : actions3_[choice.index];
    return choice;
}

std::vector<double> SacAgent::critic_targets(const std::vector<Transition>& batch) const {
    std::vector<double> y(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto& t = batch[i];
        const int h = static_cast<int>(t.head);
        const auto s2 = to_window(t.s2);

        std::vector<std::vector<double>> logits, q1, q2;
        actor.forward(s2, nullptr, &logits);
        target1.forward(s2, nullptr, &q1);
        target2.forward(s2, nullptr, &q2);
        std::vector<double> p, logp;
        nn::softmax(logits[h], &p);
        nn::log_softmax(logits[h], &logp);

        const double a = alpha(t.head);
        double v = 0.0;
        for (size_t k = 0; k < p.size(); ++k) {
            const double q = cfg_.avg_operator ? 0.5 * (q1[h][k] + q2[h][k])
                                               : std::min(q1[h][k], q2[h][k]);
            v += p[k] * (q - a * logp[k]);
        }
        y[i] = t.r + cfg_.gamma * v;
    }
    return y;
}

double SacAgent::critic_loss_grad(const std::vector<Transition>& batch,
                                  const std::vector<double>& y, std::vector<double>* g1,
                                  std::vector<double>* g2) const {
    const double inv_b = 1.0 / batch.size();
    if (g1) g1->assign(critic1.w.size(), 0.0);
    if (g2) g2->assign(critic2.w.size(), 0.0);
    double loss = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto& t = batch[i];
        const int h = static_cast<int>(t.head);
        const auto s = to_window(t.s);

        nn::Net::Cache c1, c2;
        std::vector<std::vector<double>> q1, q2;
        critic1.forward(s, &c1, &q1);
        critic2.forward(s, &c2, &q2);
        const double e1 = q1[h][t.action] - y[i];
        const double e2 = q2[h][t.action] - y[i];
        loss += (e1 * e1 + e2 * e2) * inv_b;

        if (g1) {
            std::vector<std::vector<double>> d(2);
            d[h].assign(q1[h].size(), 0.0);
            d[h][t.action] = 2.0 * e1 * inv_b;
            critic1.backward(s, c1, d, g1);
        }
        if (g2) {
            std::vector<std::vector<double>> d(2);
            d[h].assign(q2[h].size(), 0.0);
            d[h][t.action] = 2.0 * e2 * inv_b;
            critic2.backward(s, c2, d, g2);
        }
    }
    return loss;
}

double SacAgent::actor_loss_grad(const std::vector<Transition>& batch,
                                 std::vector<double>* g) const {
    const double inv_b = 1.0 / batch.size();
    if (g) g->assign(actor.w.size(), 0.0);
    double loss = 0.0;
    for (const auto& t : batch) {
        const auto s = to_window(t.s);
        nn::Net::Cache cache;
        std::vector<std::vector<double>> logits, q1, q2;
        actor.forward(s, &cache, &logits);
        critic1.forward(s, nullptr, &q1);
        critic2.forward(s, nullptr, &q2);

        std::vector<std::vector<double>> dlogits(2);
        for (int h = 0; h < 2; ++h) {
            std::vector<double> p, logp;
            nn::softmax(logits[h], &p);
            nn::log_softmax(logits[h], &logp);
            const double a = std::exp(log_alpha_[h]);

            // L_h = sum_a pi(a) * (alpha log pi(a) - op_k Q_k(s,a));
            // d/dlogits_j = pi_j * (u_j - sum_a pi_a u_a).
            std::vector<double> u(p.size());
            double mean_u = 0.0;
            for (size_t k = 0; k < p.size(); ++k) {
                const double q = cfg_.avg_operator ? 0.5 * (q1[h][k] + q2[h][k])
                                                   : std::min(q1[h][k], q2[h][k]);
                u[k] = a * logp[k] - q;
                mean_u += p[k] * u[k];
            }
            loss += mean_u * inv_b;
            if (g) {
                dlogits[h].resize(p.size());
                for (size_t k = 0; k < p.size(); ++k) {
                    dlogits[h][k] = p[k] * (u[k] - mean_u) * inv_b;
                }
            }
        }
        if (g) actor.backward(s, cache, dlogits, g);
    }
    return loss;
}

std::array<double, 2> SacAgent::temperature_grad(const std::vector<Transition>& batch) const {
    // J(alpha) = E[-alpha * (log pi(a|s) + H_target)] over a ~ pi, so
    // dJ/dlog alpha = -alpha * (H_target - H(pi)) averaged over states.
    std::array<double, 2> gap_sum{0.0, 0.0};
    for (const auto& t : batch) {
        const auto s = to_window(t.s);
        std::vector<std::vector<double>> logits;
        actor.forward(s, nullptr, &logits);
        for (int h = 0; h < 2; ++h) {
            std::vector<double> p, logp;
            nn::softmax(logits[h], &p);
            nn::log_softmax(logits[h], &logp);
            double entropy = 0.0;
            for (size_t k = 0; k < p.size(); ++k) {
                entropy -= p[k] * std::max(logp[k], std::log(1e-8));
            }
            gap_sum[h] += target_entropy_[h] - entropy;
        }
    }
    std::array<double, 2> grad{};
    for (int h = 0; h < 2; ++h) {
        grad[h] = -std::exp(log_alpha_[h]) * gap_sum[h] / batch.size();
    }
    return grad;
}

void SacAgent::update(const std::vector<Transition>& batch) {
    const auto y = critic_targets(batch);

    std::vector<double> g1, g2;
    critic_loss_grad(batch, y, &g1, &g2);
    nn::clip_global_norm(g1, cfg_.clip_norm);
    nn::clip_global_norm(g2, cfg_.clip_norm);
    opt_c1_.step(critic1.w, g1);
    opt_c2_.step(critic2.w, g2);

    std::vector<double> ga;
    actor_loss_grad(batch, &ga);
    last_grad_norm_ = nn::clip_global_norm(ga, cfg_.clip_norm);
    if (last_grad_norm_ > cfg_.clip_norm) last_grad_norm_ = cfg_.clip_norm;
    opt_actor_.step(actor.w, ga);

    if (cfg_.entropy_tuning) {
        const auto galpha = temperature_grad(batch);
        std::vector<double> la(log_alpha_.begin(), log_alpha_.end());
        std::vector<double> gv(galpha.begin(), galpha.end());
        opt_alpha_.step(la, gv);
        log_alpha_ = {la[0], la[1]};
    }

    const double rho = 1.0 - cfg_.tau;
    nn::polyak_update(target1.w, critic1.w, rho);
    nn::polyak_update(target2.w, critic2.w, rho);
}

bool SacAgent::on_env_step(ReplayBuffer& buffer, RngStream& rng) {
    env_steps_++;
    if (env_steps_ % cfg_.update_period != 0) return false;
    if (buffer.size() < static_cast<size_t>(cfg_.batch_size)) return false;
    for (int n = 0; n < cfg_.updates_per_session; ++n) {
        update(buffer.sample(cfg_.batch_size, rng));
    }
    return true;
}

namespace {
template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
void put_vec(std::ostream& os, const std::vector<double>& v) {
    put<uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}
void get_vec(std::istream& is, std::vector<double>& v) {
    v.resize(get<uint64_t>(is));
    is.read(reinterpret_cast<char*>(v.data()), v.size() * sizeof(double));
}
void put_adam(std::ostream& os, const nn::Adam& a) {
    put<long>(os, a.t);
    put_vec(os, a.m);
    put_vec(os, a.v);
}
void get_adam(std::istream& is, nn::Adam& a) {
    a.t = get<long>(is);
    get_vec(is, a.m);
    get_vec(is, a.v);
}

uint64_t config_hash(const TrainerConfig& c) {
    const double fields[] = {c.actor_lr, c.critic_lr, c.gamma, c.tau,
                             static_cast<double>(c.batch_size),
                             static_cast<double>(c.update_period),
                             static_cast<double>(c.updates_per_session), c.clip_norm,
                             c.avg_operator ? 1.0 : 0.0, c.entropy_tuning ? 1.0 : 0.0,
                             c.target_entropy_scale, c.alpha_init,
                             static_cast<double>(c.replay_capacity),
                             c.plain_sgd ? 1.0 : 0.0, static_cast<double>(c.hidden),
                             static_cast<double>(c.dense), static_cast<double>(c.window)};
    return fnv1a(fields, sizeof(fields));
}
}  // namespace

void SacAgent::save(std::ostream& os) const {
    put<uint32_t>(os, 0x4D534331u);  // "MSC1"
    // config hash guards against loading into a mismatched shape
    put<uint64_t>(os, config_hash(cfg_));
    put_vec(os, actor.w);
    put_vec(os, critic1.w);
    put_vec(os, critic2.w);
    put_vec(os, target1.w);
    put_vec(os, target2.w);
    put<double>(os, log_alpha_[0]);
    put<double>(os, log_alpha_[1]);
    put_adam(os, opt_actor_);
    put_adam(os, opt_c1_);
    put_adam(os, opt_c2_);
    put_adam(os, opt_alpha_);
    put<long>(os, env_steps_);
}

void SacAgent::load(std::istream& is) {
    if (get<uint32_t>(is) != 0x4D534331u) throw std::runtime_error("bad checkpoint magic");
    if (get<uint64_t>(is) != config_hash(cfg_)) {
        throw std::runtime_error("checkpoint config mismatch");
    }
    get_vec(is, actor.w);
    get_vec(is, critic1.w);
    get_vec(is, critic2.w);
    get_vec(is, target1.w);
    get_vec(is, target2.w);
    log_alpha_[0] = get<double>(is);
    log_alpha_[1] = get<double>(is);
    get_adam(is, opt_actor_);
    get_adam(is, opt_c1_);
    get_adam(is, opt_c2_);
    get_adam(is, opt_alpha_);
    env_steps_ = get<long>(is);
    if (!is) throw std::runtime_error("truncated checkpoint");
}

}  // namespace mlo
