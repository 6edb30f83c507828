#include "mlo/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlo/rng.hpp"

namespace mlo::nn {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}

Net::Net(const Shape& s) : shape(s) {
    compute_offsets();
}

void Net::compute_offsets() {
    const int I = shape.input, H = shape.hidden, D = shape.dense;
    size_t off = 0;
    off_wx_ = off; off += static_cast<size_t>(4 * H) * I;
    off_wh_ = off; off += static_cast<size_t>(4 * H) * H;
    off_b_ = off; off += 4 * H;
    off_w1_ = off; off += static_cast<size_t>(D) * H;
    off_b1_ = off; off += D;
    off_w2_ = off; off += static_cast<size_t>(D) * D;
    off_b2_ = off; off += D;
    off_hw_.clear();
    off_hb_.clear();
    for (int k : shape.heads) {
        off_hw_.push_back(off); off += static_cast<size_t>(k) * D;
        off_hb_.push_back(off); off += k;
    }
    w.assign(off, 0.0);
}

Net Net::xavier(const Shape& s, uint64_t seed) {
    Net net(s);
    RngStream rng(seed);
    auto fill = [&](size_t off, int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (int i = 0; i < rows * cols; ++i) net.w[off + i] = rng.uniform(-limit, limit);
    };
    const int I = s.input, H = s.hidden, D = s.dense;
    fill(net.off_wx_, 4 * H, I);
    fill(net.off_wh_, 4 * H, H);
    fill(net.off_w1_, D, H);
    fill(net.off_w2_, D, D);
    for (size_t h = 0; h < s.heads.size(); ++h) fill(net.off_hw_[h], s.heads[h], D);
    return net;
}

void Net::forward(const std::vector<double>& win, Cache* cache,
                  std::vector<std::vector<double>>* head_out) const {
    const int I = shape.input, H = shape.hidden, D = shape.dense, W = shape.window;
    if (static_cast<int>(win.size()) != W * I) {
        throw std::invalid_argument("net forward: window size mismatch");
    }
    for (double x : win) {
        if (!std::isfinite(x)) throw std::invalid_argument("net forward: non-finite input");
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    c.gate_i.assign(W * H, 0.0);
    c.gate_f.assign(W * H, 0.0);
    c.gate_g.assign(W * H, 0.0);
    c.gate_o.assign(W * H, 0.0);
    c.c.assign(W * H, 0.0);
    c.tanh_c.assign(W * H, 0.0);
    c.h.assign(W * H, 0.0);

    const double* wx = w.data() + off_wx_;
    const double* wh = w.data() + off_wh_;
    const double* b = w.data() + off_b_;

    std::vector<double> z(4 * H);
    for (int t = 0; t < W; ++t) {
        const double* x = win.data() + t * I;
        const double* hp = t > 0 ? c.h.data() + (t - 1) * H : nullptr;
        for (int j = 0; j < 4 * H; ++j) {
            double acc = b[j];
            const double* row = wx + static_cast<size_t>(j) * I;
            for (int i = 0; i < I; ++i) acc += row[i] * x[i];
            if (hp) {
                const double* rowh = wh + static_cast<size_t>(j) * H;
                for (int i = 0; i < H; ++i) acc += rowh[i] * hp[i];
            }
            z[j] = acc;
        }
        for (int j = 0; j < H; ++j) {
            const double gi = sigmoid(z[j]);
            const double gf = sigmoid(z[H + j]);
            const double gg = std::tanh(z[2 * H + j]);
            const double go = sigmoid(z[3 * H + j]);
            const double cp = t > 0 ? c.c[(t - 1) * H + j] : 0.0;
            const double cc = gf * cp + gi * gg;
            const double tc = std::tanh(cc);
            c.gate_i[t * H + j] = gi;
            c.gate_f[t * H + j] = gf;
            c.gate_g[t * H + j] = gg;
            c.gate_o[t * H + j] = go;
            c.c[t * H + j] = cc;
            c.tanh_c[t * H + j] = tc;
            c.h[t * H + j] = go * tc;
        }
    }

    const double* h_last = c.h.data() + static_cast<size_t>(W - 1) * H;
    c.d1.assign(D, 0.0);
    const double* w1 = w.data() + off_w1_;
    const double* b1 = w.data() + off_b1_;
    for (int j = 0; j < D; ++j) {
        double acc = b1[j];
        const double* row = w1 + static_cast<size_t>(j) * H;
        for (int i = 0; i < H; ++i) acc += row[i] * h_last[i];
        c.d1[j] = acc > 0.0 ? acc : 0.0;
    }
    c.d2.assign(D, 0.0);
    const double* w2 = w.data() + off_w2_;
    const double* b2 = w.data() + off_b2_;
    for (int j = 0; j < D; ++j) {
        double acc = b2[j];
        const double* row = w2 + static_cast<size_t>(j) * D;
        for (int i = 0; i < D; ++i) acc += row[i] * c.d1[i];
        c.d2[j] = acc > 0.0 ? acc : 0.0;
    }

    if (head_out) {
        head_out->resize(shape.heads.size());
        for (size_t hidx = 0; hidx < shape.heads.size(); ++hidx) {
            const int K = shape.heads[hidx];
            auto& out = (*head_out)[hidx];
            out.assign(K, 0.0);
            const double* hw = w.data() + off_hw_[hidx];
            const double* hb = w.data() + off_hb_[hidx];
            for (int k = 0; k < K; ++k) {
                double acc = hb[k];
                const double* row = hw + static_cast<size_t>(k) * D;
                for (int i = 0; i < D; ++i) acc += row[i] * c.d2[i];
                out[k] = acc;
            }
        }
    }
}

void Net::backward(const std::vector<double>& win, const Cache& c,
                   const std::vector<std::vector<double>>& dhead,
                   std::vector<double>* grad) const {
    const int I = shape.input, H = shape.hidden, D = shape.dense, W = shape.window;
    if (grad->size() != w.size()) throw std::invalid_argument("net backward: grad size mismatch");
    double* g = grad->data();

    // heads -> d2
    std::vector<double> dd2(D, 0.0);
    for (size_t hidx = 0; hidx < shape.heads.size(); ++hidx) {
        const int K = shape.heads[hidx];
        if (dhead[hidx].empty()) continue;
        const double* hw = w.data() + off_hw_[hidx];
        double* ghw = g + off_hw_[hidx];
        double* ghb = g + off_hb_[hidx];
        for (int k = 0; k < K; ++k) {
            const double dk = dhead[hidx][k];
            if (dk == 0.0) continue;
            ghb[k] += dk;
            const double* row = hw + static_cast<size_t>(k) * D;
            double* grow = ghw + static_cast<size_t>(k) * D;
            for (int i = 0; i < D; ++i) {
                grow[i] += dk * c.d2[i];
                dd2[i] += dk * row[i];
            }
        }
    }

    // d2 -> d1 (ReLU)
    const double* w2 = w.data() + off_w2_;
    std::vector<double> dd1(D, 0.0);
    {
        double* gw2 = g + off_w2_;
        double* gb2 = g + off_b2_;
        for (int j = 0; j < D; ++j) {
            const double dj = c.d2[j] > 0.0 ? dd2[j] : 0.0;
            if (dj == 0.0) continue;
            gb2[j] += dj;
            const double* row = w2 + static_cast<size_t>(j) * D;
            double* grow = gw2 + static_cast<size_t>(j) * D;
            for (int i = 0; i < D; ++i) {
                grow[i] += dj * c.d1[i];
                dd1[i] += dj * row[i];
            }
        }
    }

    // d1 -> h_last
    const double* w1 = w.data() + off_w1_;
    const double* h_last = c.h.data() + static_cast<size_t>(W - 1) * H;
    std::vector<double> dh(H, 0.0);
    {
        double* gw1 = g + off_w1_;
        double* gb1 = g + off_b1_;
        for (int j = 0; j < D; ++j) {
            const double dj = c.d1[j] > 0.0 ? dd1[j] : 0.0;
            if (dj == 0.0) continue;
            gb1[j] += dj;
            const double* row = w1 + static_cast<size_t>(j) * H;
            double* grow = gw1 + static_cast<size_t>(j) * H;
            for (int i = 0; i < H; ++i) {
                grow[i] += dj * h_last[i];
                dh[i] += dj * row[i];
            }
        }
    }

    // BPTT
    const double* wx = w.data() + off_wx_;
    const double* wh = w.data() + off_wh_;
    double* gwx = g + off_wx_;
    double* gwh = g + off_wh_;
    double* gb = g + off_b_;
    std::vector<double> dc(H, 0.0), dz(4 * H), dh_prev(H);
    for (int t = W - 1; t >= 0; --t) {
        const double* x = win.data() + t * I;
        const double* hp = t > 0 ? c.h.data() + (t - 1) * H : nullptr;
        for (int j = 0; j < H; ++j) {
            const double gi = c.gate_i[t * H + j];
            const double gf = c.gate_f[t * H + j];
            const double gg = c.gate_g[t * H + j];
            const double go = c.gate_o[t * H + j];
            const double tc = c.tanh_c[t * H + j];
            const double cp = t > 0 ? c.c[(t - 1) * H + j] : 0.0;

            const double do_ = dh[j] * tc;
            const double dcell = dc[j] + dh[j] * go * (1.0 - tc * tc);
            const double di = dcell * gg;
            const double df = dcell * cp;
            const double dg = dcell * gi;
            dc[j] = dcell * gf;  // carries to t-1

            dz[j] = di * gi * (1.0 - gi);
            dz[H + j] = df * gf * (1.0 - gf);
            dz[2 * H + j] = dg * (1.0 - gg * gg);
            dz[3 * H + j] = do_ * go * (1.0 - go);
        }
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (int j = 0; j < 4 * H; ++j) {
            const double dj = dz[j];
            if (dj == 0.0) continue;
            gb[j] += dj;
            double* growx = gwx + static_cast<size_t>(j) * I;
            for (int i = 0; i < I; ++i) growx[i] += dj * x[i];
            if (hp) {
                const double* rowh = wh + static_cast<size_t>(j) * H;
                double* growh = gwh + static_cast<size_t>(j) * H;
                for (int i = 0; i < H; ++i) {
                    growh[i] += dj * hp[i];
                    dh_prev[i] += dj * rowh[i];
                }
            }
        }
        dh = dh_prev;
    }
}

void polyak_update(std::vector<double>& target, const std::vector<double>& main, double rho) {
    if (target.size() != main.size()) throw std::invalid_argument("polyak: shape mismatch");
    for (size_t i = 0; i < target.size(); ++i) {
        target[i] = rho * target[i] + (1.0 - rho) * main[i];
    }
}

double clip_global_norm(std::vector<double>& g, double max_norm) {
    double sq = 0.0;
    for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (double& x : g) x *= s;
    }
    return norm;
}

void Adam::step(std::vector<double>& w, const std::vector<double>& g) {
    if (w.size() != g.size()) throw std::invalid_argument("adam: shape mismatch");
    if (plain_sgd) {
        for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        return;
    }
    if (m.size() != w.size()) {
        m.assign(w.size(), 0.0);
        v.assign(w.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (size_t i = 0; i < w.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

void softmax(const std::vector<double>& logits, std::vector<double>* probs) {
    probs->resize(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        (*probs)[i] = std::exp(logits[i] - mx);
        sum += (*probs)[i];
    }
    for (double& p : *probs) p /= sum;
}

void log_softmax(const std::vector<double>& logits, std::vector<double>* logp) {
    logp->resize(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const double lse = mx + std::log(sum);
    for (size_t i = 0; i < logits.size(); ++i) (*logp)[i] = logits[i] - lse;
}

}  // namespace mlo::nn
