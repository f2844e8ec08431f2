#include "cqm/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cqm {

QFunction::QFunction(QConfig cfg, const FeatureCodec& codec, Rng& rng) : cfg_(cfg), codec_(codec) {
    n_cells_ = codec_.n_cells();
    if (cfg_.backend == QBackend::Tabular) {
        // Pessimistic floor initialization: unvisited (cell, goal) pairs read
        // as unreachable until experience raises them.
        const std::size_t n = static_cast<std::size_t>(n_cells_) * n_cells_ * kNumActions;
        table_.assign(n, q_floor());
        target_table_ = table_;
    } else {
        mlp_ = Mlp(2 * codec_.dim(), cfg_.mlp_hidden, kNumActions, rng);
        target_mlp_ = mlp_;
    }
}

std::size_t QFunction::tab_index(const Observation& obs, const Observation& goal, int action) const {
    const std::size_t oc = static_cast<std::size_t>(codec_.cell_of_position(obs.x, obs.y));
    const std::size_t gc = static_cast<std::size_t>(codec_.cell_of_position(goal.x, goal.y));
    return (oc * n_cells_ + gc) * kNumActions + static_cast<std::size_t>(action);
}

std::vector<double> QFunction::mlp_values(const Mlp& net, const Observation& obs, const Observation& goal) const {
    Vec input;
    input.reserve(obs.feature.size() + goal.feature.size());
    input.insert(input.end(), obs.feature.begin(), obs.feature.end());
    input.insert(input.end(), goal.feature.begin(), goal.feature.end());
    Vec out = net.forward(input);
    const double floor = q_floor();
    for (double& v : out) v = std::clamp(v, floor, 0.0);
    return out;
}

std::vector<double> QFunction::values(const Observation& obs, const Observation& goal) const {
    if (cfg_.backend == QBackend::Tabular) {
        const std::size_t base = tab_index(obs, goal, 0);
        return std::vector<double>(table_.begin() + base, table_.begin() + base + kNumActions);
    }
    return mlp_values(mlp_, obs, goal);
}

double QFunction::value(const Observation& obs, int action, const Observation& goal) const {
    if (cfg_.backend == QBackend::Tabular) return table_[tab_index(obs, goal, action)];
    return mlp_values(mlp_, obs, goal)[action];
}

int QFunction::greedy_action(const Observation& obs, const Observation& goal) const {
    const std::vector<double> v = values(obs, goal);
    int best = 0;
    for (int a = 1; a < kNumActions; ++a) {
        if (v[a] > v[best]) best = a;
    }
    return best;
}

double QFunction::max_value(const Observation& obs, const Observation& goal) const {
    const std::vector<double> v = values(obs, goal);
    double m = v[0];
    for (int a = 1; a < kNumActions; ++a) m = std::max(m, v[a]);
    return m;
}

double QFunction::train(const std::vector<Transition>& batch) {
    if (batch.empty()) return 0.0;
    const double floor = q_floor();
    double abs_td = 0.0;

    if (cfg_.backend == QBackend::Tabular) {
        for (const Transition& t : batch) {
            const std::size_t base = tab_index(t.next_obs, t.goal, 0);
            double next_max = target_table_[base];
            for (int a = 1; a < kNumActions; ++a) next_max = std::max(next_max, target_table_[base + a]);
            double target = t.reward + cfg_.gamma * (t.done ? 0.0 : next_max);
            target = std::clamp(target, floor, 0.0);
            double& q = table_[tab_index(t.obs, t.goal, t.action)];
            const double delta = target - q;
            q += cfg_.learning_rate * delta;
            abs_td += std::abs(delta);
        }
    } else {
        Mlp::Grads grads;
        grads.init_like(mlp_);
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        for (const Transition& t : batch) {
            double next_max;
            {
                const std::vector<double> nv = mlp_values(target_mlp_, t.next_obs, t.goal);
                next_max = *std::max_element(nv.begin(), nv.end());
            }
            double target = t.reward + cfg_.gamma * (t.done ? 0.0 : next_max);
            target = std::clamp(target, floor, 0.0);

            Vec input;
            input.reserve(t.obs.feature.size() + t.goal.feature.size());
            input.insert(input.end(), t.obs.feature.begin(), t.obs.feature.end());
            input.insert(input.end(), t.goal.feature.begin(), t.goal.feature.end());
            Mlp::Trace trace;
            const Vec out = mlp_.forward(input, trace);
            const double delta = std::clamp(out[t.action], floor, 0.0) - target;
            abs_td += std::abs(delta);

            Vec dl_dout(out.size(), 0.0);
            dl_dout[t.action] = 2.0 * delta * inv_b;
            mlp_.backward(trace, dl_dout, grads, nullptr);
        }
        mlp_.sgd_step(grads, cfg_.mlp_learning_rate);
    }

    abs_td /= static_cast<double>(batch.size());
    if (!std::isfinite(abs_td)) throw std::runtime_error("qlearn error: non-finite TD update");

    ++train_calls_;
    if (train_calls_ % cfg_.target_update_freq == 0) {
        const double tau = cfg_.target_interp;
        if (cfg_.backend == QBackend::Tabular) {
            for (std::size_t i = 0; i < table_.size(); ++i) {
                target_table_[i] = tau * target_table_[i] + (1.0 - tau) * table_[i];
            }
        } else {
            target_mlp_.interpolate_from(mlp_, tau);
        }
    }
    return abs_td;
}

void QFunction::restore_tabular(std::vector<double> online, std::vector<double> target, int train_calls) {
    table_ = std::move(online);
    target_table_ = std::move(target);
    train_calls_ = train_calls;
}

void QFunction::restore_mlp(const Vec& online, const Vec& target, int train_calls) {
    mlp_.set_parameters(online);
    target_mlp_.set_parameters(target);
    train_calls_ = train_calls;
}

int DualCritics::act(const Observation& obs, const Observation& goal, double eps_explore, Rng& rng) const {
    if (rng.uniform() < eps_explore) return rng.uniform_int(kNumActions);
    return policy_q.greedy_action(obs, goal);
}

} // namespace cqm
