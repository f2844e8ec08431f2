#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cqm/harness.hpp"
#include "cqm/serialize.hpp"

// Checkpoint layout: magic, version, config hash, canonical config text,
// then fixed-order state sections. Everything is written deterministically
// so save -> load -> save reproduces the file byte for byte.

namespace cqm {

namespace {

constexpr char kMagic[8] = {'C', 'Q', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint64_t kVersion = 1;

void write_observation(std::ostream& os, const Observation& o) {
    io::write_f64(os, o.x);
    io::write_f64(os, o.y);
    io::write_f64(os, o.vx);
    io::write_f64(os, o.vy);
    io::write_vecd(os, o.feature);
}

Observation read_observation(std::istream& is) {
    Observation o;
    o.x = io::read_f64(is);
    o.y = io::read_f64(is);
    o.vx = io::read_f64(is);
    o.vy = io::read_f64(is);
    o.feature = io::read_vecd(is);
    return o;
}

void write_transition(std::ostream& os, const Transition& t) {
    write_observation(os, t.obs);
    write_observation(os, t.next_obs);
    write_observation(os, t.goal);
    io::write_i64(os, t.action);
    io::write_f64(os, t.reward);
    io::write_i64(os, t.done ? 1 : 0);
    io::write_i64(os, t.episode_id);
    io::write_i64(os, t.step_index);
}

Transition read_transition(std::istream& is) {
    Transition t;
    t.obs = read_observation(is);
    t.next_obs = read_observation(is);
    t.goal = read_observation(is);
    t.action = static_cast<int>(io::read_i64(is));
    t.reward = io::read_f64(is);
    t.done = io::read_i64(is) != 0;
    t.episode_id = static_cast<int>(io::read_i64(is));
    t.step_index = static_cast<int>(io::read_i64(is));
    return t;
}

void write_vec_list(std::ostream& os, const std::vector<Vec>& v) {
    io::write_u64(os, v.size());
    for (const Vec& x : v) io::write_vecd(os, x);
}

std::vector<Vec> read_vec_list(std::istream& is) {
    std::vector<Vec> v(io::read_u64(is));
    for (Vec& x : v) x = io::read_vecd(is);
    return v;
}

void write_landmark(std::ostream& os, const Landmark& lm) {
    io::write_i64(os, lm.id);
    io::write_i64(os, lm.source_code);
    io::write_vecd(os, lm.point);
    io::write_vecd(os, lm.latent);
}

Landmark read_landmark(std::istream& is) {
    Landmark lm;
    lm.id = static_cast<int>(io::read_i64(is));
    lm.source_code = static_cast<int>(io::read_i64(is));
    lm.point = io::read_vecd(is);
    lm.latent = io::read_vecd(is);
    return lm;
}

void write_metrics_row(std::ostream& os, const MetricsRow& r) {
    io::write_i64(os, r.episode);
    io::write_i64(os, r.eval_success);
    io::write_f64(os, r.eval_final_dist);
    io::write_i64(os, r.train_success);
    io::write_f64(os, r.train_final_dist);
    io::write_f64(os, r.alpha);
    io::write_f64(os, r.dkl);
    io::write_i64(os, r.goal_is_final);
    io::write_f64(os, r.goal_x);
    io::write_f64(os, r.goal_y);
    io::write_f64(os, r.goal_to_final_dist);
    io::write_i64(os, r.topk_size);
    io::write_i64(os, r.graph_vertices);
    io::write_i64(os, r.graph_edges);
    io::write_i64(os, r.active_codes);
}

MetricsRow read_metrics_row(std::istream& is) {
    MetricsRow r;
    r.episode = static_cast<int>(io::read_i64(is));
    r.eval_success = static_cast<int>(io::read_i64(is));
    r.eval_final_dist = io::read_f64(is);
    r.train_success = static_cast<int>(io::read_i64(is));
    r.train_final_dist = io::read_f64(is);
    r.alpha = io::read_f64(is);
    r.dkl = io::read_f64(is);
    r.goal_is_final = static_cast<int>(io::read_i64(is));
    r.goal_x = io::read_f64(is);
    r.goal_y = io::read_f64(is);
    r.goal_to_final_dist = io::read_f64(is);
    r.topk_size = static_cast<int>(io::read_i64(is));
    r.graph_vertices = static_cast<int>(io::read_i64(is));
    r.graph_edges = static_cast<int>(io::read_i64(is));
    r.active_codes = static_cast<int>(io::read_i64(is));
    return r;
}

void write_qfunction(std::ostream& os, const QFunction& q, bool tabular) {
    io::write_i64(os, q.train_calls());
    if (tabular) {
        io::write_vecd(os, q.table());
        io::write_vecd(os, q.target_table());
    } else {
        io::write_vecd(os, q.online_mlp().parameters());
        io::write_vecd(os, q.target_mlp().parameters());
    }
}

void read_qfunction(std::istream& is, QFunction& q, bool tabular) {
    const int calls = static_cast<int>(io::read_i64(is));
    if (tabular) {
        Vec online = io::read_vecd(is);
        Vec target = io::read_vecd(is);
        q.restore_tabular(std::move(online), std::move(target), calls);
    } else {
        const Vec online = io::read_vecd(is);
        const Vec target = io::read_vecd(is);
        q.restore_mlp(online, target, calls);
    }
}

} // namespace

void Trainer::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint error: cannot write " + path);

    os.write(kMagic, sizeof(kMagic));
    io::write_u64(os, kVersion);
    const std::string config_text = cfg_.canonical_text();
    io::write_u64(os, fnv1a64(config_text));
    io::write_string(os, config_text);

    io::write_string(os, rng_.state_string());

    // progress
    io::write_i64(os, episode_);
    io::write_i64(os, next_episode_id_);
    io::write_i64(os, warmed_up_ ? 1 : 0);
    io::write_i64(os, first_success_episode_);
    io::write_i64(os, active_codes_);
    io::write_f64(os, wall_clock_seconds_);

    // quantizer
    write_vec_list(os, quantizer_.codes());
    io::write_vecd(os, quantizer_.ema_counts());
    write_vec_list(os, quantizer_.ema_sums());
    io::write_u64(os, quantizer_.usage_ages().size());
    for (int a : quantizer_.usage_ages()) io::write_i64(os, a);
    if (!quantizer_.config().identity) {
        io::write_vecd(os, quantizer_.encoder_mlp().parameters());
        io::write_vecd(os, quantizer_.decoder_mlp().parameters());
    }

    const bool tabular = cfg_.q_backend == "tabular";
    write_qfunction(os, critics_.policy_q, tabular);
    write_qfunction(os, critics_.graph_q, tabular);

    // graph
    io::write_i64(os, graph_.generation());
    io::write_f64(os, graph_.cutoff());
    io::write_u64(os, graph_.base_vertex_count());
    for (std::size_t v = 0; v < graph_.base_vertex_count(); ++v) write_landmark(os, graph_.vertex(static_cast<int>(v)));
    for (std::size_t v = 0; v < graph_.base_vertex_count(); ++v) {
        const auto& edges = graph_.adjacency()[v];
        io::write_u64(os, edges.size());
        for (const GraphEdge& e : edges) {
            io::write_i64(os, e.to);
            io::write_f64(os, e.weight);
        }
    }

    // curriculum
    io::write_i64(os, counts_.generation());
    io::write_vecd(os, counts_.counts());
    io::write_f64(os, mixture_.alpha());
    io::write_f64(os, mixture_.last_dkl());
    write_vec_list(os, achieved_);
    io::write_u64(os, achieved_head_);
    io::write_u64(os, final_examples_.size());
    for (const Observation& o : final_examples_) write_observation(os, o);

    // metrics
    io::write_u64(os, metrics_.size());
    for (const MetricsRow& r : metrics_) write_metrics_row(os, r);

    // buffers
    io::write_i64(os, cfg_.checkpoint_buffers ? 1 : 0);
    if (cfg_.checkpoint_buffers) {
        io::write_u64(os, rl_buffer_.episodes().size());
        for (const auto& ep : rl_buffer_.episodes()) {
            io::write_u64(os, ep.size());
            for (const Transition& t : ep) write_transition(os, t);
        }
        io::write_u64(os, vq_buffer_.raw().size());
        for (const Observation& o : vq_buffer_.raw()) write_observation(os, o);
        io::write_u64(os, vq_buffer_.head());
    }
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::string& path) {
    return load_checkpoint_impl(path, nullptr);
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::string& path, const RunConfig& expected) {
    return load_checkpoint_impl(path, &expected);
}

std::unique_ptr<Trainer> Trainer::load_checkpoint_impl(const std::string& path, const RunConfig* expected) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint error: cannot open " + path);

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint error: bad magic in " + path);
    }
    const std::uint64_t version = io::read_u64(is);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint error: version " + std::to_string(version) + " unsupported");
    }
    const std::uint64_t stored_hash = io::read_u64(is);
    const std::string config_text = io::read_string(is);
    if (stored_hash != fnv1a64(config_text)) {
        throw std::runtime_error("checkpoint error: config hash mismatch (corrupt file)");
    }

    RunConfig cfg = parse_config_text(config_text);
    if (expected) {
        const std::vector<std::string> diff = config_diff(*expected, cfg);
        if (!diff.empty()) {
            std::string msg = "checkpoint error: config mismatch on keys:";
            for (const std::string& k : diff) msg += " " + k;
            throw std::runtime_error(msg);
        }
        cfg.out_dir = expected->out_dir;
        cfg.graph_export_interval = expected->graph_export_interval;
    }

    auto trainer = std::make_unique<Trainer>(cfg);
    Trainer& t = *trainer;

    t.rng_.set_state_string(io::read_string(is));

    t.episode_ = static_cast<int>(io::read_i64(is));
    t.next_episode_id_ = static_cast<int>(io::read_i64(is));
    t.warmed_up_ = io::read_i64(is) != 0;
    t.first_success_episode_ = static_cast<int>(io::read_i64(is));
    t.active_codes_ = static_cast<int>(io::read_i64(is));
    t.wall_clock_seconds_ = io::read_f64(is);

    {
        std::vector<Vec> codes = read_vec_list(is);
        Vec ema_count = io::read_vecd(is);
        std::vector<Vec> ema_sum = read_vec_list(is);
        std::vector<int> ages(io::read_u64(is));
        for (int& a : ages) a = static_cast<int>(io::read_i64(is));
        t.quantizer_.restore(std::move(codes), std::move(ema_count), std::move(ema_sum), std::move(ages));
        if (!t.quantizer_.config().identity) {
            t.quantizer_.encoder_mlp().set_parameters(io::read_vecd(is));
            t.quantizer_.decoder_mlp().set_parameters(io::read_vecd(is));
        }
    }

    const bool tabular = cfg.q_backend == "tabular";
    read_qfunction(is, t.critics_.policy_q, tabular);
    read_qfunction(is, t.critics_.graph_q, tabular);

    {
        const int generation = static_cast<int>(io::read_i64(is));
        const double cutoff = io::read_f64(is);
        std::vector<Landmark> vertices(io::read_u64(is));
        for (Landmark& lm : vertices) lm = read_landmark(is);
        std::vector<std::vector<GraphEdge>> adj(vertices.size());
        for (auto& edges : adj) {
            edges.resize(io::read_u64(is));
            for (GraphEdge& e : edges) {
                e.to = static_cast<int>(io::read_i64(is));
                e.weight = io::read_f64(is);
            }
        }
        t.graph_.restore(std::move(vertices), std::move(adj), cutoff, generation);
    }

    {
        const int generation = static_cast<int>(io::read_i64(is));
        Vec counts = io::read_vecd(is);
        t.counts_.restore(generation, std::move(counts));
        const double alpha = io::read_f64(is);
        const double dkl = io::read_f64(is);
        t.mixture_.restore(alpha, dkl);
        t.achieved_ = read_vec_list(is);
        t.achieved_head_ = io::read_u64(is);
        t.final_examples_.resize(io::read_u64(is));
        for (Observation& o : t.final_examples_) o = read_observation(is);
    }

    t.metrics_.resize(io::read_u64(is));
    for (MetricsRow& r : t.metrics_) r = read_metrics_row(is);

    if (io::read_i64(is) != 0) {
        std::deque<std::vector<Transition>> episodes(io::read_u64(is));
        for (auto& ep : episodes) {
            ep.resize(io::read_u64(is));
            for (Transition& tr : ep) tr = read_transition(is);
        }
        t.rl_buffer_.restore(std::move(episodes));
        std::vector<Observation> vq(io::read_u64(is));
        for (Observation& o : vq) o = read_observation(is);
        const std::size_t head = io::read_u64(is);
        t.vq_buffer_.restore(std::move(vq), head);
    }

    if (t.warmed_up_) t.refresh_init_distances();
    return trainer;
}

} // namespace cqm
