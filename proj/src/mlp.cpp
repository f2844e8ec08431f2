#include "cqm/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cqm {

Mlp::Mlp(int in, int hidden, int out, Rng& rng) : in_(in), hidden_(hidden), out_(out) {
    auto init = [&rng](Vec& w, std::size_t n, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        w.resize(n);
        for (double& v : w) v = rng.uniform(-bound, bound);
    };
    init(w1_, static_cast<std::size_t>(hidden_) * in_, in_);
    init(b1_, static_cast<std::size_t>(hidden_), in_);
    init(w2_, static_cast<std::size_t>(out_) * hidden_, hidden_);
    init(b2_, static_cast<std::size_t>(out_), hidden_);
}

Vec Mlp::forward(const Vec& x, Trace& trace) const {
    trace.input = x;
    trace.hidden.assign(static_cast<std::size_t>(hidden_), 0.0);
    for (int h = 0; h < hidden_; ++h) {
        double s = b1_[h];
        const double* row = &w1_[static_cast<std::size_t>(h) * in_];
        for (int i = 0; i < in_; ++i) s += row[i] * x[i];
        trace.hidden[h] = std::tanh(s);
    }
    trace.output.assign(static_cast<std::size_t>(out_), 0.0);
    for (int o = 0; o < out_; ++o) {
        double s = b2_[o];
        const double* row = &w2_[static_cast<std::size_t>(o) * hidden_];
        for (int h = 0; h < hidden_; ++h) s += row[h] * trace.hidden[h];
        trace.output[o] = s;
    }
    return trace.output;
}

Vec Mlp::forward(const Vec& x) const {
    Trace t;
    return forward(x, t);
}

void Mlp::Grads::init_like(const Mlp& m) {
    w1.assign(m.w1_.size(), 0.0);
    b1.assign(m.b1_.size(), 0.0);
    w2.assign(m.w2_.size(), 0.0);
    b2.assign(m.b2_.size(), 0.0);
}

void Mlp::Grads::clear() {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    std::fill(b2.begin(), b2.end(), 0.0);
}

void Mlp::Grads::scale_by(double s) {
    for (double& v : w1) v *= s;
    for (double& v : b1) v *= s;
    for (double& v : w2) v *= s;
    for (double& v : b2) v *= s;
}

void Mlp::backward(const Trace& trace, const Vec& dl_dout, Grads& grads, Vec* dl_dinput) const {
    // Output layer.
    Vec dl_dh(static_cast<std::size_t>(hidden_), 0.0);
    for (int o = 0; o < out_; ++o) {
        const double g = dl_dout[o];
        grads.b2[o] += g;
        double* wrow = &grads.w2[static_cast<std::size_t>(o) * hidden_];
        const double* row = &w2_[static_cast<std::size_t>(o) * hidden_];
        for (int h = 0; h < hidden_; ++h) {
            wrow[h] += g * trace.hidden[h];
            dl_dh[h] += g * row[h];
        }
    }
    // Through tanh into the first layer.
    if (dl_dinput) dl_dinput->assign(static_cast<std::size_t>(in_), 0.0);
    for (int h = 0; h < hidden_; ++h) {
        const double th = trace.hidden[h];
        const double g = dl_dh[h] * (1.0 - th * th);
        grads.b1[h] += g;
        double* wrow = &grads.w1[static_cast<std::size_t>(h) * in_];
        const double* row = &w1_[static_cast<std::size_t>(h) * in_];
        for (int i = 0; i < in_; ++i) {
            wrow[i] += g * trace.input[i];
            if (dl_dinput) (*dl_dinput)[i] += g * row[i];
        }
    }
}

void Mlp::sgd_step(const Grads& grads, double lr) {
    add_scaled(w1_, grads.w1, -lr);
    add_scaled(b1_, grads.b1, -lr);
    add_scaled(w2_, grads.w2, -lr);
    add_scaled(b2_, grads.b2, -lr);
}

void Mlp::interpolate_from(const Mlp& src, double tau) {
    auto blend = [tau](Vec& dst, const Vec& s) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = tau * dst[i] + (1.0 - tau) * s[i];
    };
    blend(w1_, src.w1_);
    blend(b1_, src.b1_);
    blend(w2_, src.w2_);
    blend(b2_, src.b2_);
}

std::size_t Mlp::parameter_count() const { return w1_.size() + b1_.size() + w2_.size() + b2_.size(); }

double Mlp::get_parameter(std::size_t i) const {
    if (i < w1_.size()) return w1_[i];
    i -= w1_.size();
    if (i < b1_.size()) return b1_[i];
    i -= b1_.size();
    if (i < w2_.size()) return w2_[i];
    i -= w2_.size();
    return b2_[i];
}

void Mlp::set_parameter(std::size_t i, double v) {
    if (i < w1_.size()) {
        w1_[i] = v;
        return;
    }
    i -= w1_.size();
    if (i < b1_.size()) {
        b1_[i] = v;
        return;
    }
    i -= b1_.size();
    if (i < w2_.size()) {
        w2_[i] = v;
        return;
    }
    i -= w2_.size();
    b2_[i] = v;
}

Vec Mlp::parameters() const {
    Vec p;
    p.reserve(parameter_count());
    p.insert(p.end(), w1_.begin(), w1_.end());
    p.insert(p.end(), b1_.begin(), b1_.end());
    p.insert(p.end(), w2_.begin(), w2_.end());
    p.insert(p.end(), b2_.begin(), b2_.end());
    return p;
}

void Mlp::set_parameters(const Vec& p) {
    if (p.size() != parameter_count()) throw std::runtime_error("mlp error: parameter size mismatch");
    std::size_t k = 0;
    for (double& v : w1_) v = p[k++];
    for (double& v : b1_) v = p[k++];
    for (double& v : w2_) v = p[k++];
    for (double& v : b2_) v = p[k++];
}

} // namespace cqm
