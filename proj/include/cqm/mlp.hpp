#pragma once

#include <cstddef>
#include <vector>

#include "cqm/rng.hpp"
#include "cqm/vecmath.hpp"

namespace cqm {

// Two-layer perceptron, out = W2 * tanh(W1 * x + b1) + b2, with hand-derived
// backpropagation. Plain SGD; no framework dependency.
class Mlp {
public:
    Mlp() = default;
    Mlp(int in, int hidden, int out, Rng& rng);

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }

    struct Trace {
        Vec input;
        Vec hidden; // tanh activations
        Vec output;
    };

    Vec forward(const Vec& x) const;
    Vec forward(const Vec& x, Trace& trace) const;

    struct Grads {
        Vec w1, b1, w2, b2;
        void init_like(const Mlp& m);
        void clear();
        void scale_by(double s);
    };

    // Accumulates parameter gradients for dL/d(output); optionally returns
    // dL/d(input) for chaining.
    void backward(const Trace& trace, const Vec& dl_dout, Grads& grads, Vec* dl_dinput = nullptr) const;

    void sgd_step(const Grads& grads, double lr);

    // Soft update toward src: params <- tau * params + (1 - tau) * src.
    void interpolate_from(const Mlp& src, double tau);

    // Flat parameter access for finite-difference checks and checkpoints.
    std::size_t parameter_count() const;
    double get_parameter(std::size_t i) const;
    void set_parameter(std::size_t i, double v);
    Vec parameters() const;
    void set_parameters(const Vec& p);

private:
    int in_ = 0, hidden_ = 0, out_ = 0;
    Vec w1_, b1_, w2_, b2_; // W[row * cols + col]
};

} // namespace cqm
