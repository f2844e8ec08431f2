#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cqm {

// Flat key=value run configuration. The serialized canonical form (sorted
// keys, one per line) identifies a run; its hash is embedded in checkpoints.
struct RunConfig {
    // environment
    std::string maze_path;
    std::string maze_text; // populated from maze_path, or directly (checkpoints)
    std::string obs_mode = "state"; // state | highdim
    int horizon = 150;
    double success_threshold = 0.5;
    double action_step = 1.0;
    double cell_size = 1.0;
    int patch_window = 8;

    // run shape
    std::uint64_t seed = 1;
    int episodes = 2000;
    int warmup_rollouts = 20;
    int graph_cycle = 5;            // M
    int train_steps_per_cycle = 40; // P
    int eval_interval = 1;

    // buffers
    int batch_size = 64;
    int vq_batch_size = 64;
    std::size_t rl_buffer_capacity = 200000;
    std::size_t vq_buffer_capacity = 10000;
    double her_ratio_policy = 0.8;
    double her_ratio_graph = 1.0;
    int her_future_window = 0; // 0: full horizon

    // quantizer
    int num_codes = 48;
    int latent_dim = 8; // mlp encoder output; identity mode uses the obs dim
    std::string encoder = "identity"; // identity | mlp
    int vq_hidden = 32;
    double vq_learning_rate = 0.01;
    double ema_decay = 0.99;
    double commit_coef = 0.25;

    // agent
    std::string q_backend = "tabular"; // tabular | mlp
    double gamma = 0.99;
    double q_learning_rate = 0.5;
    double target_interp = 0.995;
    int target_update_freq = 10;
    int q_mlp_hidden = 64;
    double q_mlp_learning_rate = 1e-3;
    double eps_start = 1.0;
    double eps_end = 0.1;
    double eps_anneal_frac = 0.2;

    // graph & curriculum
    double cutoff = 10.0;
    int max_graph_node = 300;
    int top_k = 0; // 0: auto
    double ucert_eps = 1e-3;
    double noise_radius = 1.0;
    double beta = -20.0;
    double kappa = 1.0;
    double alpha0 = 0.05;
    double rho_floor = 1e-12;
    int kl_mc_samples = 512;
    int min_fit_samples = 50;
    int final_examples = 50;
    int achieved_window = 2000;
    int achieved_stride = 10;

    // ablations
    bool no_curriculum = false;
    bool no_graph = false;
    bool no_planning = false;
    bool no_goal_convergence = false;
    bool landmarks_from_buffer = false;

    // outputs
    std::string out_dir;
    int graph_export_interval = 0; // generations between edge-list exports, 0 = off
    bool checkpoint_buffers = true;

    void validate() const;
    // Canonical identity text: every dynamics-relevant key sorted by name.
    // out_dir and export cadence are excluded; episodes is included, and a
    // shorter run of the same config is produced with a stop-after override.
    std::string canonical_text() const;
    std::uint64_t config_hash() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
// Keys whose values differ between the two configs' canonical forms.
std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

std::uint64_t fnv1a64(const std::string& s);

} // namespace cqm
