#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cqm/config.hpp"
#include "cqm/curriculum.hpp"
#include "cqm/graph.hpp"
#include "cqm/maze.hpp"
#include "cqm/planner.hpp"
#include "cqm/qlearn.hpp"
#include "cqm/quantizer.hpp"
#include "cqm/replay.hpp"
#include "cqm/rng.hpp"

namespace cqm {

struct MetricsRow {
    int episode = 0;
    int eval_success = 0;
    double eval_final_dist = 0.0;
    int train_success = 0;
    double train_final_dist = 0.0;
    double alpha = 0.0;
    double dkl = 0.0;
    int goal_is_final = 0;
    double goal_x = 0.0, goal_y = 0.0;
    double goal_to_final_dist = 0.0;
    int topk_size = 0;
    int graph_vertices = 0;
    int graph_edges = 0;
    int active_codes = 0;
};

struct EvalResult {
    int episodes = 0;
    double success_rate = 0.0;
    double mean_final_dist = 0.0;
};

struct RunSummary {
    double final_success_rate = 0.0; // over the trailing eval window
    double final_mean_dist = 0.0;
    int episodes_to_first_success = -1; // first eval success, -1 if never
    double goal_dist_thirds[3] = {0, 0, 0};
    double alpha_thirds[3] = {0, 0, 0};
};

inline constexpr int kTrailingEvalWindow = 50;

// Runs the full training loop: warmup rollouts seed the buffers and the
// codebook, then each episode samples a goal over the landmark graph, plans
// waypoints, rolls out, and trains; every graph-cycle the mixture ratio,
// graph, and dead codes refresh. Ablation flags bypass exactly their stage.
class Trainer {
public:
    explicit Trainer(RunConfig cfg);

    // Runs until stop_after episodes (or the configured count when < 0).
    void run(int stop_after = -1);

    // Greedy episodes against final goals on a derived random stream.
    EvalResult evaluate(int n_episodes, std::uint64_t salt = 0);

    const RunConfig& config() const { return cfg_; }
    const MazeEnv& env() const { return env_; }
    int episode() const { return episode_; }
    const std::vector<MetricsRow>& metrics() const { return metrics_; }
    const LandmarkGraph& graph() const { return graph_; }
    const Quantizer& quantizer() const { return quantizer_; }
    double alpha() const { return mixture_.alpha(); }
    int first_success_episode() const { return first_success_episode_; }

    RunSummary summary() const;
    std::string metrics_csv() const;
    std::string graph_edge_list() const;
    // metrics.csv, summary.json, checkpoint.bin under cfg.out_dir.
    void write_outputs() const;

    void save_checkpoint(const std::string& path) const;
    static std::unique_ptr<Trainer> load_checkpoint(const std::string& path);
    // Verifies the stored config matches; the error names differing keys.
    static std::unique_ptr<Trainer> load_checkpoint(const std::string& path, const RunConfig& expected);

private:
    struct EpisodeOutcome {
        std::vector<Transition> traj;
        bool success = false;
        double final_goal_dist = 0.0;
    };

    static std::unique_ptr<Trainer> load_checkpoint_impl(const std::string& path, const RunConfig* expected);

    void warmup();
    void rebuild_graph();
    void refresh_init_distances();
    void cycle_update();
    void training_phase();
    double epsilon_at(int ep) const;
    CurriculumGoal select_goal(int* topk_size, double* alpha_used);
    EpisodeOutcome rollout(const CurriculumGoal& goal, double eps, Rng& rng, bool record);
    Plan plan_for(const CurriculumGoal& goal, const Observation& start);
    void push_achieved(double x, double y);
    double nearest_final_distance(double x, double y) const;
    std::vector<Vec> final_positions() const;
    LandmarkDistanceFn distance_fn() const;
    void maybe_export_graph() const;

    RunConfig cfg_;
    MazeEnv env_;
    Rng rng_;
    RLBuffer rl_buffer_;
    VQBuffer vq_buffer_;
    Quantizer quantizer_;
    DualCritics critics_;
    LandmarkGraph graph_;
    VisitCounts counts_;
    GoalMixture mixture_;

    std::vector<Observation> final_examples_;
    std::vector<Vec> achieved_;
    std::size_t achieved_head_ = 0;
    std::vector<double> dist_from_init_;
    int init_landmark_ = -1;
    int active_codes_ = 0;

    bool warmed_up_ = false;
    int episode_ = 0;
    int next_episode_id_ = 0;
    int first_success_episode_ = -1;
    std::vector<MetricsRow> metrics_;
    double wall_clock_seconds_ = 0.0;
};

} // namespace cqm
