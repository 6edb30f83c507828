#pragma once

#include <cstdint>
#include <vector>

namespace mlo::nn {

// Recurrent trunk (single LSTM cell over the observation window, last hidden
// state only) followed by two ReLU dense layers and one linear output layer
// per head. Parameters live in one flat vector so Polyak averaging, clipping,
// Adam and checkpointing operate uniformly.
struct Shape {
    int input = 5;
    int window = 10;
    int hidden = 64;
    int dense = 64;
    std::vector<int> heads{11, 66};
};

class Net {
public:
    Net() = default;
    explicit Net(const Shape& shape);
    static Net xavier(const Shape& shape, uint64_t seed);

    struct Cache {
        // per time step, post-activation
        std::vector<double> gate_i, gate_f, gate_g, gate_o;  // window*hidden each
        std::vector<double> c, tanh_c, h;                    // window*hidden each
        std::vector<double> d1, d2;                          // dense activations (post-ReLU)
    };

    // win: row-major window*input. head_out gets one raw linear output
    // vector per head (logits for the actor, action values for a critic).
    void forward(const std::vector<double>& win, Cache* cache,
                 std::vector<std::vector<double>>* head_out) const;

    // dhead: dL/d(head outputs). Accumulates dL/dw into grad (same layout
    // as w; must be pre-sized and may carry prior contributions).
    void backward(const std::vector<double>& win, const Cache& cache,
                  const std::vector<std::vector<double>>& dhead, std::vector<double>* grad) const;

    size_t param_count() const { return w.size(); }

    Shape shape;
    std::vector<double> w;

private:
    // flat layout offsets
    size_t off_wx_, off_wh_, off_b_, off_w1_, off_b1_, off_w2_, off_b2_;
    std::vector<size_t> off_hw_, off_hb_;
    void compute_offsets();
};

// theta_hat <- rho * theta_hat + (1 - rho) * theta, elementwise.
void polyak_update(std::vector<double>& target, const std::vector<double>& main, double rho);

// Scales g in place so its L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(std::vector<double>& g, double max_norm);

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    bool plain_sgd = false;  // ablation switch
    std::vector<double> m, v;
    long t = 0;

    void step(std::vector<double>& w, const std::vector<double>& g);
};

void softmax(const std::vector<double>& logits, std::vector<double>* probs);
void log_softmax(const std::vector<double>& logits, std::vector<double>* logp);

}  // namespace mlo::nn
