#pragma once

#include <cstddef>
#include <vector>

#include "cqm/maze.hpp"
#include "cqm/mlp.hpp"
#include "cqm/replay.hpp"
#include "cqm/rng.hpp"

namespace cqm {

enum class QBackend { Tabular, Mlp };

struct QConfig {
    QBackend backend = QBackend::Tabular;
    double gamma = 0.99;
    double learning_rate = 0.5; // tabular step size
    double target_interp = 0.995;
    int target_update_freq = 10; // train calls between soft updates
    int mlp_hidden = 64;
    double mlp_learning_rate = 1e-3;
};

// Goal-conditioned action-value function under 0/-1 rewards. Values live in
// [-1/(1-gamma), 0]; the floor marks "never reaches", which the graph module
// maps to an unreachable temporal distance. The tabular backend indexes by
// (observation cell, goal cell) and is used only for lookup; no other module
// sees these cells.
class QFunction {
public:
    QFunction(QConfig cfg, const FeatureCodec& codec, Rng& rng);

    const QConfig& config() const { return cfg_; }
    double q_floor() const { return -1.0 / (1.0 - cfg_.gamma); }

    std::vector<double> values(const Observation& obs, const Observation& goal) const;
    double value(const Observation& obs, int action, const Observation& goal) const;
    // Highest action value; ties resolve to the lowest action index.
    int greedy_action(const Observation& obs, const Observation& goal) const;
    double max_value(const Observation& obs, const Observation& goal) const;

    // One Q-learning sweep over the batch against the target copy; returns
    // the mean absolute TD error. Throws on non-finite updates.
    double train(const std::vector<Transition>& batch);

    // Checkpoint access.
    const std::vector<double>& table() const { return table_; }
    const std::vector<double>& target_table() const { return target_table_; }
    int train_calls() const { return train_calls_; }
    void restore_tabular(std::vector<double> online, std::vector<double> target, int train_calls);
    Mlp& online_mlp() { return mlp_; }
    Mlp& target_mlp() { return target_mlp_; }
    const Mlp& online_mlp() const { return mlp_; }
    const Mlp& target_mlp() const { return target_mlp_; }
    void restore_mlp(const Vec& online, const Vec& target, int train_calls);

private:
    std::size_t tab_index(const Observation& obs, const Observation& goal, int action) const;
    std::vector<double> mlp_values(const Mlp& net, const Observation& obs, const Observation& goal) const;

    QConfig cfg_;
    FeatureCodec codec_;
    int n_cells_ = 0;
    std::vector<double> table_, target_table_; // tabular backend
    Mlp mlp_, target_mlp_;                     // mlp backend
    int train_calls_ = 0;
};

// Policy critic (HER ratio for control) plus a graph critic trained at full
// hindsight ratio, used only for temporal-distance estimation.
struct DualCritics {
    QFunction policy_q;
    QFunction graph_q;

    DualCritics(const QConfig& cfg, const FeatureCodec& codec, Rng& rng)
        : policy_q(cfg, codec, rng), graph_q(cfg, codec, rng) {}

    // Epsilon-greedy over the policy critic.
    int act(const Observation& obs, const Observation& goal, double eps_explore, Rng& rng) const;
};

} // namespace cqm
