#include "cqm/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cqm/maze.hpp"

namespace cqm {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KeyWriter {
    std::map<std::string, std::string> kv;
    void put(const std::string& k, const std::string& v) { kv[k] = v; }
    void put(const std::string& k, double v) { kv[k] = format_double(v); }
    void put(const std::string& k, int v) { kv[k] = std::to_string(v); }
    void put(const std::string& k, std::uint64_t v) { kv[k] = std::to_string(v); }
    void put(const std::string& k, bool v) { kv[k] = v ? "true" : "false"; }
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::runtime_error("config error: boolean expected for " + key + ", got '" + v + "'");
}

// Escapes the embedded maze text onto one line.
std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '\n') out += "\\n";
        else if (c == '\\') out += "\\\\";
        else out += c;
    }
    return out;
}

std::string unescape_text(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            ++i;
            out += s[i] == 'n' ? '\n' : s[i];
        } else {
            out += s[i];
        }
    }
    return out;
}

} // namespace

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw std::runtime_error("config error: " + msg);
    };
    require(!maze_text.empty() || !maze_path.empty(), "maze path or text required");
    require(obs_mode == "state" || obs_mode == "highdim", "obs_mode must be state or highdim");
    require(encoder == "identity" || encoder == "mlp", "encoder must be identity or mlp");
    require(q_backend == "tabular" || q_backend == "mlp", "q_backend must be tabular or mlp");
    require(obs_mode == "state" || encoder == "mlp", "highdim mode requires the mlp encoder");
    require(horizon >= 1, "horizon must be >= 1");
    require(success_threshold > 0, "success_threshold must be positive");
    require(episodes >= 0, "episodes must be >= 0");
    require(warmup_rollouts >= 1, "warmup_rollouts must be >= 1");
    require(graph_cycle >= 1, "graph_cycle must be >= 1");
    require(train_steps_per_cycle >= 1, "train_steps_per_cycle must be >= 1");
    require(eval_interval >= 1, "eval_interval must be >= 1");
    require(batch_size >= 1 && vq_batch_size >= 1, "batch sizes must be >= 1");
    require(num_codes >= 2, "num_codes must be >= 2");
    require(rl_buffer_capacity >= static_cast<std::size_t>(horizon), "rl_buffer_capacity must hold one episode");
    require(vq_buffer_capacity >= 1, "vq_buffer_capacity must be >= 1");
    require(her_ratio_policy >= 0 && her_ratio_policy <= 1, "her_ratio_policy in [0,1]");
    require(her_ratio_graph >= 0 && her_ratio_graph <= 1, "her_ratio_graph in [0,1]");
    require(gamma > 0 && gamma < 1, "gamma in (0,1)");
    require(cutoff > 0, "cutoff must be positive");
    require(max_graph_node >= 1, "max_graph_node must be >= 1");
    require(alpha0 > 0 && alpha0 <= 1, "alpha0 in (0,1]");
    require(final_examples >= 1, "final_examples must be >= 1");
    require(kl_mc_samples >= 1, "kl_mc_samples must be >= 1");
    require(min_fit_samples >= 2, "min_fit_samples must be >= 2");
    require(achieved_window >= min_fit_samples, "achieved_window must cover min_fit_samples");
    require(achieved_stride >= 1, "achieved_stride must be >= 1");
}

std::string RunConfig::canonical_text() const {
    KeyWriter w;
    w.put("achieved_stride", achieved_stride);
    w.put("achieved_window", achieved_window);
    w.put("action_step", action_step);
    w.put("alpha0", alpha0);
    w.put("batch_size", batch_size);
    w.put("beta", beta);
    w.put("cell_size", cell_size);
    w.put("checkpoint_buffers", checkpoint_buffers);
    w.put("commit_coef", commit_coef);
    w.put("cutoff", cutoff);
    w.put("ema_decay", ema_decay);
    w.put("encoder", encoder);
    w.put("episodes", episodes);
    w.put("eps_anneal_frac", eps_anneal_frac);
    w.put("eps_end", eps_end);
    w.put("eps_start", eps_start);
    w.put("eval_interval", eval_interval);
    w.put("final_examples", final_examples);
    w.put("gamma", gamma);
    w.put("graph_cycle", graph_cycle);
    w.put("her_future_window", her_future_window);
    w.put("her_ratio_graph", her_ratio_graph);
    w.put("her_ratio_policy", her_ratio_policy);
    w.put("horizon", horizon);
    w.put("kappa", kappa);
    w.put("kl_mc_samples", kl_mc_samples);
    w.put("landmarks_from_buffer", landmarks_from_buffer);
    w.put("latent_dim", latent_dim);
    w.put("max_graph_node", max_graph_node);
    w.put("maze_text", escape_text(maze_text));
    w.put("min_fit_samples", min_fit_samples);
    w.put("no_curriculum", no_curriculum);
    w.put("no_goal_convergence", no_goal_convergence);
    w.put("no_graph", no_graph);
    w.put("no_planning", no_planning);
    w.put("noise_radius", noise_radius);
    w.put("num_codes", num_codes);
    w.put("obs_mode", obs_mode);
    w.put("patch_window", patch_window);
    w.put("q_backend", q_backend);
    w.put("q_learning_rate", q_learning_rate);
    w.put("q_mlp_hidden", q_mlp_hidden);
    w.put("q_mlp_learning_rate", q_mlp_learning_rate);
    w.put("rho_floor", rho_floor);
    w.put("rl_buffer_capacity", rl_buffer_capacity);
    w.put("seed", seed);
    w.put("success_threshold", success_threshold);
    w.put("target_interp", target_interp);
    w.put("target_update_freq", target_update_freq);
    w.put("top_k", top_k);
    w.put("train_steps_per_cycle", train_steps_per_cycle);
    w.put("ucert_eps", ucert_eps);
    w.put("vq_batch_size", vq_batch_size);
    w.put("vq_buffer_capacity", vq_buffer_capacity);
    w.put("vq_hidden", vq_hidden);
    w.put("vq_learning_rate", vq_learning_rate);
    w.put("warmup_rollouts", warmup_rollouts);

    std::ostringstream os;
    for (const auto& [k, v] : w.kv) os << k << "=" << v << "\n";
    return os.str();
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t RunConfig::config_hash() const { return fnv1a64(canonical_text()); }

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config error: line " + std::to_string(lineno) + " is not key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "maze") cfg.maze_path = val;
        else if (key == "maze_text") cfg.maze_text = unescape_text(val);
        else if (key == "obs_mode") cfg.obs_mode = val;
        else if (key == "horizon") cfg.horizon = std::stoi(val);
        else if (key == "success_threshold") cfg.success_threshold = std::stod(val);
        else if (key == "action_step") cfg.action_step = std::stod(val);
        else if (key == "cell_size") cfg.cell_size = std::stod(val);
        else if (key == "patch_window") cfg.patch_window = std::stoi(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "episodes") cfg.episodes = std::stoi(val);
        else if (key == "warmup_rollouts") cfg.warmup_rollouts = std::stoi(val);
        else if (key == "graph_cycle") cfg.graph_cycle = std::stoi(val);
        else if (key == "train_steps_per_cycle") cfg.train_steps_per_cycle = std::stoi(val);
        else if (key == "eval_interval") cfg.eval_interval = std::stoi(val);
        else if (key == "batch_size") cfg.batch_size = std::stoi(val);
        else if (key == "vq_batch_size") cfg.vq_batch_size = std::stoi(val);
        else if (key == "rl_buffer_capacity") cfg.rl_buffer_capacity = std::stoull(val);
        else if (key == "vq_buffer_capacity") cfg.vq_buffer_capacity = std::stoull(val);
        else if (key == "her_ratio_policy") cfg.her_ratio_policy = std::stod(val);
        else if (key == "her_ratio_graph") cfg.her_ratio_graph = std::stod(val);
        else if (key == "her_future_window") cfg.her_future_window = std::stoi(val);
        else if (key == "num_codes") cfg.num_codes = std::stoi(val);
        else if (key == "latent_dim") cfg.latent_dim = std::stoi(val);
        else if (key == "encoder") cfg.encoder = val;
        else if (key == "vq_hidden") cfg.vq_hidden = std::stoi(val);
        else if (key == "vq_learning_rate") cfg.vq_learning_rate = std::stod(val);
        else if (key == "ema_decay") cfg.ema_decay = std::stod(val);
        else if (key == "commit_coef") cfg.commit_coef = std::stod(val);
        else if (key == "q_backend") cfg.q_backend = val;
        else if (key == "gamma") cfg.gamma = std::stod(val);
        else if (key == "q_learning_rate") cfg.q_learning_rate = std::stod(val);
        else if (key == "target_interp") cfg.target_interp = std::stod(val);
        else if (key == "target_update_freq") cfg.target_update_freq = std::stoi(val);
        else if (key == "q_mlp_hidden") cfg.q_mlp_hidden = std::stoi(val);
        else if (key == "q_mlp_learning_rate") cfg.q_mlp_learning_rate = std::stod(val);
        else if (key == "eps_start") cfg.eps_start = std::stod(val);
        else if (key == "eps_end") cfg.eps_end = std::stod(val);
        else if (key == "eps_anneal_frac") cfg.eps_anneal_frac = std::stod(val);
        else if (key == "cutoff") cfg.cutoff = std::stod(val);
        else if (key == "max_graph_node") cfg.max_graph_node = std::stoi(val);
        else if (key == "top_k") cfg.top_k = std::stoi(val);
        else if (key == "ucert_eps") cfg.ucert_eps = std::stod(val);
        else if (key == "noise_radius") cfg.noise_radius = std::stod(val);
        else if (key == "beta") cfg.beta = std::stod(val);
        else if (key == "kappa") cfg.kappa = std::stod(val);
        else if (key == "alpha0") cfg.alpha0 = std::stod(val);
        else if (key == "rho_floor") cfg.rho_floor = std::stod(val);
        else if (key == "kl_mc_samples") cfg.kl_mc_samples = std::stoi(val);
        else if (key == "min_fit_samples") cfg.min_fit_samples = std::stoi(val);
        else if (key == "final_examples") cfg.final_examples = std::stoi(val);
        else if (key == "achieved_window") cfg.achieved_window = std::stoi(val);
        else if (key == "achieved_stride") cfg.achieved_stride = std::stoi(val);
        else if (key == "no_curriculum") cfg.no_curriculum = parse_bool(val, key);
        else if (key == "no_graph") cfg.no_graph = parse_bool(val, key);
        else if (key == "no_planning") cfg.no_planning = parse_bool(val, key);
        else if (key == "no_goal_convergence") cfg.no_goal_convergence = parse_bool(val, key);
        else if (key == "landmarks_from_buffer") cfg.landmarks_from_buffer = parse_bool(val, key);
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "graph_export_interval") cfg.graph_export_interval = std::stoi(val);
        else if (key == "checkpoint_buffers") cfg.checkpoint_buffers = parse_bool(val, key);
        else throw std::runtime_error("config error: unknown key '" + key + "'");
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config error: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig cfg = parse_config_text(buf.str());
    if (cfg.maze_text.empty() && !cfg.maze_path.empty()) {
        std::ifstream mz(cfg.maze_path);
        if (!mz) throw std::runtime_error("config error: cannot open maze file " + cfg.maze_path);
        std::ostringstream mbuf;
        mbuf << mz.rdbuf();
        cfg.maze_text = mbuf.str();
    }
    return cfg;
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
    auto to_map = [](const RunConfig& c) {
        std::map<std::string, std::string> m;
        std::istringstream is(c.canonical_text());
        std::string line;
        while (std::getline(is, line)) {
            const std::size_t eq = line.find('=');
            if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return m;
    };
    const auto ma = to_map(a);
    const auto mb = to_map(b);
    std::vector<std::string> diff;
    for (const auto& [k, v] : ma) {
        const auto it = mb.find(k);
        if (it == mb.end() || it->second != v) diff.push_back(k);
    }
    return diff;
}

} // namespace cqm
