#include "cqm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cqm {

namespace {

EnvConfig env_config_from(const RunConfig& cfg) {
    EnvConfig e;
    e.horizon = cfg.horizon;
    e.success_threshold = cfg.success_threshold;
    e.action_step = cfg.action_step;
    e.mode = cfg.obs_mode == "state" ? ObsMode::State : ObsMode::HighDim;
    e.patch_window = cfg.patch_window;
    return e;
}

QuantizerConfig quantizer_config_from(const RunConfig& cfg) {
    QuantizerConfig q;
    q.num_codes = cfg.num_codes;
    q.latent_dim = cfg.latent_dim;
    q.identity = cfg.encoder == "identity";
    q.hidden = cfg.vq_hidden;
    q.learning_rate = cfg.vq_learning_rate;
    q.ema_decay = cfg.ema_decay;
    q.commit_coef = cfg.commit_coef;
    q.max_unused_rollouts = cfg.graph_cycle;
    return q;
}

QConfig q_config_from(const RunConfig& cfg) {
    QConfig q;
    q.backend = cfg.q_backend == "tabular" ? QBackend::Tabular : QBackend::Mlp;
    q.gamma = cfg.gamma;
    q.learning_rate = cfg.q_learning_rate;
    q.target_interp = cfg.target_interp;
    q.target_update_freq = cfg.target_update_freq;
    q.mlp_hidden = cfg.q_mlp_hidden;
    q.mlp_learning_rate = cfg.q_mlp_learning_rate;
    return q;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

constexpr std::uint64_t kEvalTag = 0xE7A1;
constexpr std::uint64_t kInitTag = 0x1217;

Quantizer make_quantizer(const RunConfig& cfg, int obs_dim) {
    Rng init_rng(derive_seed(cfg.seed, kInitTag, 1));
    return Quantizer(quantizer_config_from(cfg), obs_dim, init_rng);
}

DualCritics make_critics(const RunConfig& cfg, const FeatureCodec& codec) {
    Rng init_rng(derive_seed(cfg.seed, kInitTag, 2));
    return DualCritics(q_config_from(cfg), codec, init_rng);
}

} // namespace

Trainer::Trainer(RunConfig cfg)
    : cfg_([&cfg] {
          cfg.validate();
          return cfg;
      }()),
      env_(load_maze_text(cfg_.maze_text, cfg_.cell_size), env_config_from(cfg_)), rng_(cfg_.seed),
      rl_buffer_(cfg_.rl_buffer_capacity), vq_buffer_(cfg_.vq_buffer_capacity),
      quantizer_(make_quantizer(cfg_, env_.codec().dim())), critics_(make_critics(cfg_, env_.codec())),
      mixture_([&] {
          MixtureConfig m;
          m.beta = cfg_.beta;
          m.kappa = cfg_.kappa;
          m.alpha0 = cfg_.alpha0;
          m.rho_floor = cfg_.rho_floor;
          m.n_mc = cfg_.kl_mc_samples;
          m.min_fit_samples = cfg_.min_fit_samples;
          return m;
      }()) {}

double Trainer::epsilon_at(int ep) const {
    const double anneal_eps = cfg_.eps_anneal_frac * static_cast<double>(cfg_.episodes);
    if (anneal_eps <= 0.0) return cfg_.eps_end;
    const double t = std::min(1.0, static_cast<double>(ep) / anneal_eps);
    return cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * t;
}

LandmarkDistanceFn Trainer::distance_fn() const { return q_temporal_distance(critics_.graph_q, env_); }

void Trainer::push_achieved(double x, double y) {
    const std::size_t cap = static_cast<std::size_t>(cfg_.achieved_window);
    if (achieved_.size() < cap) {
        achieved_.push_back(Vec{x, y});
    } else {
        achieved_[achieved_head_] = Vec{x, y};
        achieved_head_ = (achieved_head_ + 1) % cap;
    }
}

std::vector<Vec> Trainer::final_positions() const {
    std::vector<Vec> out;
    out.reserve(final_examples_.size());
    for (const Observation& o : final_examples_) out.push_back(Vec{o.x, o.y});
    return out;
}

double Trainer::nearest_final_distance(double x, double y) const {
    double best = kUnreachable;
    for (const Observation& o : final_examples_) {
        const double dx = x - o.x;
        const double dy = y - o.y;
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    return best;
}

void Trainer::warmup() {
    for (int i = 0; i < cfg_.final_examples; ++i) final_examples_.push_back(env_.sample_final_goal(rng_));

    for (int w = 0; w < cfg_.warmup_rollouts; ++w) {
        const Observation goal = env_.sample_final_goal(rng_);
        Observation obs = env_.reset(rng_);
        std::vector<Transition> traj;
        const int ep_id = next_episode_id_++;
        for (int t = 0; t < cfg_.horizon; ++t) {
            const int a = rng_.uniform_int(kNumActions);
            StepResult sr = env_.step(obs, a, goal);
            traj.push_back({obs, sr.obs, goal, a, sr.reward, sr.success, ep_id, t});
            obs = sr.obs;
            if (t % cfg_.achieved_stride == 0) push_achieved(obs.x, obs.y);
            if (sr.success) break;
        }
        store_episode(traj, rl_buffer_, vq_buffer_);
        quantizer_.note_rollout();
    }

    quantizer_.init_codebook_from(vq_buffer_.sample_features(static_cast<std::size_t>(cfg_.num_codes), rng_));
    training_phase();
    rebuild_graph();
    warmed_up_ = true;
}

void Trainer::rebuild_graph() {
    std::vector<Landmark> landmarks;
    if (cfg_.landmarks_from_buffer) {
        const bool raw = cfg_.obs_mode == "highdim";
        landmarks = landmarks_from_buffer(quantizer_, vq_buffer_, raw, rng_);
    } else {
        landmarks = filter_assigned_landmarks(decode_landmarks(quantizer_), quantizer_, vq_buffer_);
    }
    const LandmarkDistanceFn dist = distance_fn();
    if (static_cast<int>(landmarks.size()) > cfg_.max_graph_node) {
        landmarks = sparsify(landmarks, cfg_.max_graph_node, dist);
    }
    const int generation = graph_.generation() + 1;
    if (cfg_.no_graph) {
        // Vertices without relations; curriculum distances fall back to raw
        // temporal-distance predictions and plans go straight at the goal.
        graph_ = build_graph(std::move(landmarks), [](const Landmark&, const Landmark&) { return kUnreachable; },
                             cfg_.cutoff, generation);
    } else {
        graph_ = build_graph(std::move(landmarks), dist, cfg_.cutoff, generation);
    }
    counts_.reset(graph_.generation(), graph_.base_vertex_count());
    refresh_init_distances();
    active_codes_ = quantizer_.active_code_count(vq_buffer_.features());
    maybe_export_graph();
}

void Trainer::refresh_init_distances() {
    init_landmark_ = graph_.nearest_vertex_latent(quantizer_.encode(env_.mean_reset_observation().feature));
    dist_from_init_.assign(graph_.base_vertex_count(), kUnreachable);
    if (init_landmark_ < 0) return;
    if (cfg_.no_graph) {
        const LandmarkDistanceFn dist = distance_fn();
        const Landmark& init = graph_.vertex(init_landmark_);
        for (std::size_t v = 0; v < graph_.base_vertex_count(); ++v) {
            dist_from_init_[v] = dist(init, graph_.vertex(static_cast<int>(v)));
        }
    } else {
        dist_from_init_ = graph_.geodesics_from(init_landmark_);
    }
}

void Trainer::cycle_update() {
    {
        std::vector<Vec> achieved = achieved_;
        mixture_.update_alpha(achieved, final_positions(), rng_);
    }
    rebuild_graph();
    quantizer_.resample_dead_codes(vq_buffer_.features(), rng_);
}

void Trainer::training_phase() {
    for (int i = 0; i < cfg_.train_steps_per_cycle; ++i) {
        const int window = cfg_.her_future_window > 0 ? cfg_.her_future_window : cfg_.horizon;
        critics_.policy_q.train(rl_buffer_.sample_batch(static_cast<std::size_t>(cfg_.batch_size),
                                                        cfg_.her_ratio_policy, window, cfg_.success_threshold, rng_));
        critics_.graph_q.train(rl_buffer_.sample_batch(static_cast<std::size_t>(cfg_.batch_size),
                                                       cfg_.her_ratio_graph, window, cfg_.success_threshold, rng_));
        quantizer_.train_step(vq_buffer_.sample_features(static_cast<std::size_t>(cfg_.vq_batch_size), rng_));
    }
}

CurriculumGoal Trainer::select_goal(int* topk_size, double* alpha_used) {
    *topk_size = 0;
    const Observation final_example = env_.sample_final_goal(rng_);

    auto final_goal = [&final_example] {
        CurriculumGoal g;
        g.kind = CurriculumGoal::Kind::Final;
        g.point = final_example.feature;
        g.noise.assign(final_example.feature.size(), 0.0);
        return g;
    };

    if (cfg_.no_curriculum) {
        *alpha_used = 1.0;
        return final_goal();
    }

    bool any_reachable = false;
    for (double d : dist_from_init_) {
        if (d < kUnreachable) {
            any_reachable = true;
            break;
        }
    }
    const double alpha = cfg_.no_goal_convergence ? 0.0 : mixture_.alpha();
    *alpha_used = alpha;
    if (init_landmark_ < 0 || !any_reachable) {
        // Degenerate early graph; nothing to sample a frontier from.
        return final_goal();
    }

    FrontierConfig fc;
    fc.top_k = cfg_.top_k;
    fc.ucert_eps = cfg_.ucert_eps;
    fc.noise_radius = cfg_.noise_radius;
    FrontierSample fs = sample_frontier_goal(graph_, counts_, dist_from_init_, fc, env_.codec(), rng_);
    *topk_size = fs.topk_size;
    return choose_goal(alpha, fs.goal, final_example, rng_);
}

Plan Trainer::plan_for(const CurriculumGoal& goal, const Observation& start) {
    if (cfg_.no_planning || cfg_.no_graph) return direct_plan(goal, env_);
    return make_plan(graph_, start, goal, quantizer_, distance_fn(), env_);
}

Trainer::EpisodeOutcome Trainer::rollout(const CurriculumGoal& goal, double eps, Rng& rng, bool record) {
    EpisodeOutcome out;
    Observation obs = env_.reset(rng);
    const Observation goal_obs = env_.from_feature(goal.point);
    Plan plan = plan_for(goal, obs);

    const int ep_id = next_episode_id_++;
    int steps_on_wp = 0;
    int prev_cursor = plan.cursor;
    for (int t = 0; t < cfg_.horizon; ++t) {
        const Observation& target = advance(plan, obs, steps_on_wp, env_);
        if (plan.cursor != prev_cursor) {
            steps_on_wp = 0;
            prev_cursor = plan.cursor;
        }
        const int a = critics_.act(obs, target, eps, rng);
        StepResult sr = env_.step(obs, a, goal_obs);
        out.traj.push_back({obs, sr.obs, goal_obs, a, sr.reward, sr.success, ep_id, t});
        obs = sr.obs;
        ++steps_on_wp;
        if (record && t % cfg_.achieved_stride == 0) push_achieved(obs.x, obs.y);
        if (sr.success) {
            out.success = true;
            break;
        }
    }
    out.final_goal_dist = env_.goal_distance(obs, goal_obs);
    return out;
}

void Trainer::run(int stop_after) {
    const auto started = std::chrono::steady_clock::now();
    const int limit = stop_after < 0 ? cfg_.episodes : std::min(stop_after, cfg_.episodes);
    if (!warmed_up_) warmup();

    while (episode_ < limit) {
        ++episode_;

        MetricsRow row;
        row.episode = episode_;
        CurriculumGoal goal = select_goal(&row.topk_size, &row.alpha);
        row.dkl = mixture_.last_dkl();
        row.goal_is_final = goal.kind == CurriculumGoal::Kind::Final ? 1 : 0;
        {
            const Observation g = env_.from_feature(goal.point);
            row.goal_x = g.x;
            row.goal_y = g.y;
            row.goal_to_final_dist = nearest_final_distance(g.x, g.y);
        }

        EpisodeOutcome outcome = rollout(goal, epsilon_at(episode_), rng_, /*record=*/true);
        store_episode(outcome.traj, rl_buffer_, vq_buffer_);
        {
            std::vector<Vec> features;
            features.reserve(outcome.traj.size() + 1);
            for (const Transition& t : outcome.traj) features.push_back(t.obs.feature);
            features.push_back(outcome.traj.back().next_obs.feature);
            record_visits(features, graph_, quantizer_, counts_);
        }
        quantizer_.note_rollout();
        row.train_success = outcome.success ? 1 : 0;
        const Observation& end_obs = outcome.traj.back().next_obs;
        row.train_final_dist = nearest_final_distance(end_obs.x, end_obs.y);

        if (episode_ % cfg_.graph_cycle == 0) cycle_update();
        training_phase();

        if (episode_ % cfg_.eval_interval == 0) {
            Rng eval_rng(derive_seed(cfg_.seed, kEvalTag, static_cast<std::uint64_t>(episode_)));
            const Observation eval_goal_example = env_.sample_final_goal(eval_rng);
            CurriculumGoal eval_goal;
            eval_goal.kind = CurriculumGoal::Kind::Final;
            eval_goal.point = eval_goal_example.feature;
            eval_goal.noise.assign(eval_goal_example.feature.size(), 0.0);
            EpisodeOutcome ev = rollout(eval_goal, 0.0, eval_rng, /*record=*/false);
            row.eval_success = ev.success ? 1 : 0;
            row.eval_final_dist = ev.final_goal_dist;
            if (ev.success && first_success_episode_ < 0) first_success_episode_ = episode_;

            row.graph_vertices = static_cast<int>(graph_.base_vertex_count());
            row.graph_edges = static_cast<int>(graph_.edge_count());
            row.active_codes = active_codes_;
            metrics_.push_back(row);
        }
    }

    wall_clock_seconds_ +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

EvalResult Trainer::evaluate(int n_episodes, std::uint64_t salt) {
    EvalResult res;
    res.episodes = n_episodes;
    for (int i = 0; i < n_episodes; ++i) {
        Rng eval_rng(derive_seed(cfg_.seed, kEvalTag ^ salt, 0x10000ULL + static_cast<std::uint64_t>(i)));
        const Observation example = env_.sample_final_goal(eval_rng);
        CurriculumGoal goal;
        goal.kind = CurriculumGoal::Kind::Final;
        goal.point = example.feature;
        goal.noise.assign(example.feature.size(), 0.0);
        EpisodeOutcome out = rollout(goal, 0.0, eval_rng, /*record=*/false);
        res.success_rate += out.success ? 1.0 : 0.0;
        res.mean_final_dist += out.final_goal_dist;
    }
    if (n_episodes > 0) {
        res.success_rate /= n_episodes;
        res.mean_final_dist /= n_episodes;
    }
    return res;
}

RunSummary Trainer::summary() const {
    RunSummary s;
    const std::size_t n = metrics_.size();
    const std::size_t tail = std::min<std::size_t>(n, kTrailingEvalWindow);
    for (std::size_t i = n - tail; i < n; ++i) {
        s.final_success_rate += metrics_[i].eval_success;
        s.final_mean_dist += metrics_[i].eval_final_dist;
    }
    if (tail > 0) {
        s.final_success_rate /= static_cast<double>(tail);
        s.final_mean_dist /= static_cast<double>(tail);
    }
    s.episodes_to_first_success = first_success_episode_;
    if (n >= 3) {
        const std::size_t third = n / 3;
        for (int k = 0; k < 3; ++k) {
            const std::size_t begin = k * third;
            const std::size_t end = k == 2 ? n : begin + third;
            double gd = 0.0, al = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                gd += metrics_[i].goal_to_final_dist;
                al += metrics_[i].alpha;
            }
            const double cnt = static_cast<double>(end - begin);
            s.goal_dist_thirds[k] = gd / cnt;
            s.alpha_thirds[k] = al / cnt;
        }
    }
    return s;
}

std::string Trainer::metrics_csv() const {
    std::ostringstream os;
    os << "episode,eval_success,eval_final_dist,train_success,train_final_dist,alpha,d_kl,goal_is_final,goal_x,"
          "goal_y,goal_to_final_dist,topk_size,graph_vertices,graph_edges,active_codes\n";
    for (const MetricsRow& r : metrics_) {
        os << r.episode << ',' << r.eval_success << ',' << fmt_g(r.eval_final_dist) << ',' << r.train_success << ','
           << fmt_g(r.train_final_dist) << ',' << fmt_g(r.alpha) << ',' << fmt_g(r.dkl) << ',' << r.goal_is_final
           << ',' << fmt_g(r.goal_x) << ',' << fmt_g(r.goal_y) << ',' << fmt_g(r.goal_to_final_dist) << ','
           << r.topk_size << ',' << r.graph_vertices << ',' << r.graph_edges << ',' << r.active_codes << '\n';
    }
    return os.str();
}

std::string Trainer::graph_edge_list() const {
    std::ostringstream os;
    os << "# v <id> <source_code> <point...>\n# e <from> <to> <weight>\n";
    for (const Landmark& lm : graph_.vertices()) {
        os << "v " << lm.id << ' ' << lm.source_code;
        for (double x : lm.point) os << ' ' << fmt_g(x);
        os << '\n';
    }
    for (std::size_t v = 0; v < graph_.adjacency().size(); ++v) {
        for (const GraphEdge& e : graph_.adjacency()[v]) {
            os << "e " << v << ' ' << e.to << ' ' << fmt_g(e.weight) << '\n';
        }
    }
    return os.str();
}

void Trainer::maybe_export_graph() const {
    if (cfg_.graph_export_interval <= 0 || cfg_.out_dir.empty()) return;
    if (graph_.generation() % cfg_.graph_export_interval != 0) return;
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(cfg_.out_dir) / "graphs";
    fs::create_directories(dir);
    char name[32];
    std::snprintf(name, sizeof(name), "gen%05d.txt", graph_.generation());
    std::ofstream out(dir / name);
    out << graph_edge_list();
}

void Trainer::write_outputs() const {
    if (cfg_.out_dir.empty()) throw std::runtime_error("harness error: out_dir not configured");
    namespace fs = std::filesystem;
    fs::create_directories(cfg_.out_dir);
    {
        std::ofstream out(fs::path(cfg_.out_dir) / "metrics.csv", std::ios::binary);
        out << metrics_csv();
    }
    {
        const RunSummary s = summary();
        nlohmann::ordered_json j;
        j["seed"] = cfg_.seed;
        j["episodes_run"] = episode_;
        j["config_hash"] = cfg_.config_hash();
        j["final_success_rate"] = s.final_success_rate;
        j["final_mean_dist"] = s.final_mean_dist;
        j["episodes_to_first_success"] = s.episodes_to_first_success;
        j["goal_dist_thirds"] = {s.goal_dist_thirds[0], s.goal_dist_thirds[1], s.goal_dist_thirds[2]};
        j["alpha_thirds"] = {s.alpha_thirds[0], s.alpha_thirds[1], s.alpha_thirds[2]};
        j["graph_vertices"] = graph_.base_vertex_count();
        j["graph_edges"] = graph_.edge_count();
        j["wall_clock_seconds"] = wall_clock_seconds_;
        std::ofstream out(fs::path(cfg_.out_dir) / "summary.json");
        out << j.dump(2) << '\n';
    }
    save_checkpoint((fs::path(cfg_.out_dir) / "checkpoint.bin").string());
}

} // namespace cqm
