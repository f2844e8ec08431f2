// Acceptance suite: one line of output per criterion, nonzero exit when any
// fails. Individual criteria run via --criterion N.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cqm/curriculum.hpp"
#include "cqm/graph.hpp"
#include "cqm/harness.hpp"
#include "cqm/mlp.hpp"
#include "cqm/quantizer.hpp"
#include "cqm/replay.hpp"
#include "oracles.hpp"

using namespace cqm;

namespace {

std::string maps_dir() {
#ifdef CQM_MAPS_DIR
    return CQM_MAPS_DIR;
#else
    return "maps";
#endif
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> fn;
};

// ---------------------------------------------------------------------------
// 1. temporal-distance roundtrip
bool criterion_temporal_roundtrip(std::string& detail) {
    const double gamma = 0.99;
    double worst = 0.0;
    for (int n = 1; n <= 200; ++n) {
        const double q = oracle::q_for_steps(n, gamma);
        const double recovered = temporal_distance_from_q(q, gamma);
        worst = std::max(worst, std::abs(recovered - n));
    }
    detail = "max |recovered - n| = " + std::to_string(worst);
    return worst < 1e-9;
}

// ---------------------------------------------------------------------------
// 2. Dijkstra vs exhaustive path enumeration
bool criterion_shortest_path(std::string& detail) {
    Rng rng(20240601);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(7));
        std::vector<Landmark> lms(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) lms[static_cast<std::size_t>(i)].id = i;
        std::vector<std::vector<double>> w(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n), kUnreachable));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j && rng.uniform() < 0.45) w[i][j] = rng.uniform(0.05, 4.0);
            }
        }
        const LandmarkGraph g = build_graph(
            lms, [&w](const Landmark& a, const Landmark& b) { return w[a.id][b.id]; }, 4.0, trial);
        std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
        for (std::size_t v = 0; v < g.adjacency().size(); ++v) {
            for (const GraphEdge& e : g.adjacency()[v]) adj[v].push_back({e.to, e.weight});
        }
        for (int from = 0; from < n; ++from) {
            const std::vector<double> dist = g.geodesics_from(from);
            for (int to = 0; to < n; ++to) {
                const double expect = from == to ? 0.0 : oracle::all_paths_shortest(adj, from, to);
                if (dist[static_cast<std::size_t>(to)] != expect &&
                    !(expect == kUnreachable && dist[static_cast<std::size_t>(to)] == kUnreachable)) {
                    detail = "mismatch on trial " + std::to_string(trial);
                    return false;
                }
                ++checked;
            }
        }
    }
    detail = std::to_string(checked) + " source-target pairs exact over 1000 graphs";
    return true;
}

// ---------------------------------------------------------------------------
// 3. quantizer: nearest-code oracle + gaussian clustering
bool criterion_quantizer(std::string& detail) {
    {
        QuantizerConfig qc;
        qc.num_codes = 128;
        qc.identity = true;
        Rng qrng(31);
        Quantizer q(qc, 6, qrng);
        Rng rng(32);
        std::vector<Vec> codes;
        for (int j = 0; j < 128; ++j) {
            Vec c(6);
            for (double& v : c) v = rng.uniform(-4, 4);
            codes.push_back(std::move(c));
        }
        q.init_codebook_from(codes);
        for (int i = 0; i < 10000; ++i) {
            Vec query(6);
            for (double& v : query) v = rng.uniform(-4, 4);
            if (q.nearest_code(query) != oracle::nearest_code_scan(query, q.codes())) {
                detail = "nearest-code mismatch on query " + std::to_string(i);
                return false;
            }
        }
    }

    const double sigma = 0.08;
    std::vector<Vec> means;
    for (int g = 0; g < 8; ++g) {
        const double angle = 2.0 * M_PI * g / 8.0;
        means.push_back({3.0 * std::cos(angle), 3.0 * std::sin(angle)});
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 101);
        auto draw = [&] {
            const Vec& m = means[rng.uniform_index(means.size())];
            return Vec{m[0] + sigma * rng.normal(), m[1] + sigma * rng.normal()};
        };
        QuantizerConfig qc;
        qc.num_codes = 16;
        qc.identity = true;
        Rng qrng(seed);
        Quantizer q(qc, 2, qrng);
        std::vector<Vec> init;
        for (int j = 0; j < qc.num_codes; ++j) init.push_back(draw());
        q.init_codebook_from(init);
        for (int step = 0; step < 2000; ++step) {
            std::vector<Vec> batch;
            for (int i = 0; i < 64; ++i) batch.push_back(draw());
            q.train_step(batch);
            if (step % 50 == 49) {
                q.note_rollout();
                q.resample_dead_codes(batch, rng);
            }
        }
        for (const Vec& m : means) {
            double best = kUnreachable;
            for (int j = 0; j < qc.num_codes; ++j) best = std::min(best, distance(q.code(j), m));
            if (best > 3.0 * sigma) {
                detail = "seed " + std::to_string(seed) + ": nearest code " + std::to_string(best) + " > 3 sigma";
                return false;
            }
        }
    }
    detail = "10^4 nearest-code queries exact; 8 cluster means covered for 5 seeds";
    return true;
}

// ---------------------------------------------------------------------------
// 4. straight-through gradient check against central differences
bool criterion_gradients(std::string& detail) {
    Rng rng(44);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        const int obs_dim = 3 + static_cast<int>(rng.uniform_index(3));
        const int latent = 2 + static_cast<int>(rng.uniform_index(3));
        QuantizerConfig qc;
        qc.num_codes = 4;
        qc.identity = false;
        qc.latent_dim = latent;
        qc.hidden = 4 + static_cast<int>(rng.uniform_index(4));
        qc.learning_rate = 0.0; // gradients only; no parameter motion
        Rng qrng(instance + 1000);
        Quantizer q(qc, obs_dim, qrng);
        std::vector<Vec> seed_codes;
        for (int j = 0; j < 4; ++j) {
            Vec o(static_cast<std::size_t>(obs_dim));
            for (double& v : o) v = rng.uniform(-1, 1);
            seed_codes.push_back(std::move(o));
        }
        q.init_codebook_from(seed_codes);

        std::vector<Vec> batch(2 + rng.uniform_index(3));
        for (Vec& o : batch) {
            o.resize(static_cast<std::size_t>(obs_dim));
            for (double& v : o) v = rng.uniform(-1, 1);
        }

        // freeze assignments and straight-through offsets at the base point
        std::vector<int> frozen_codes(batch.size());
        std::vector<Vec> frozen_offsets(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const Vec z_e = q.encode(batch[i]);
            const auto [c, z_q] = q.quantize(z_e);
            frozen_codes[i] = c;
            frozen_offsets[i].resize(z_e.size());
            for (std::size_t d = 0; d < z_e.size(); ++d) frozen_offsets[i][d] = z_q[d] - z_e[d];
        }

        // analytic gradients via the production training path (lr = 0 keeps
        // parameters fixed, so run a manual backward pass instead)
        Mlp& enc = q.encoder_mlp();
        Mlp& dec = q.decoder_mlp();
        Mlp::Grads enc_grads, dec_grads;
        enc_grads.init_like(enc);
        dec_grads.init_like(dec);
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Mlp::Trace et;
            const Vec z_e = enc.forward(batch[i], et);
            Vec z_in = z_e;
            for (std::size_t d = 0; d < z_in.size(); ++d) z_in[d] += frozen_offsets[i][d];
            Mlp::Trace dt;
            const Vec recon = dec.forward(z_in, dt);
            Vec dl_drecon(recon.size());
            for (std::size_t d = 0; d < recon.size(); ++d) dl_drecon[d] = 2.0 * (recon[d] - batch[i][d]) * inv_b;
            Vec dl_dzq;
            dec.backward(dt, dl_drecon, dec_grads, &dl_dzq);
            const Vec& code = q.code(frozen_codes[i]);
            for (std::size_t d = 0; d < dl_dzq.size(); ++d) {
                dl_dzq[d] += 2.0 * q.config().commit_coef * (z_e[d] - code[d]) * inv_b;
            }
            enc.backward(et, dl_dzq, enc_grads, nullptr);
        }

        auto loss = [&] { return q.surrogate_loss(batch, frozen_codes, frozen_offsets); };
        auto check = [&](Mlp& net, const Mlp::Grads& grads) {
            Vec analytic;
            analytic.insert(analytic.end(), grads.w1.begin(), grads.w1.end());
            analytic.insert(analytic.end(), grads.b1.begin(), grads.b1.end());
            analytic.insert(analytic.end(), grads.w2.begin(), grads.w2.end());
            analytic.insert(analytic.end(), grads.b2.begin(), grads.b2.end());
            double num = 0.0, na = 0.0, nf = 0.0;
            const double h = 1e-6;
            for (std::size_t p = 0; p < net.parameter_count(); ++p) {
                const double orig = net.get_parameter(p);
                net.set_parameter(p, orig + h);
                const double up = loss();
                net.set_parameter(p, orig - h);
                const double down = loss();
                net.set_parameter(p, orig);
                const double fd = (up - down) / (2.0 * h);
                num += (analytic[p] - fd) * (analytic[p] - fd);
                na += analytic[p] * analytic[p];
                nf += fd * fd;
            }
            return std::sqrt(num) / std::max({std::sqrt(na), std::sqrt(nf), 1e-12});
        };
        worst = std::max(worst, check(enc, enc_grads));
        worst = std::max(worst, check(dec, dec_grads));
        if (worst > 1e-4) {
            detail = "relative error " + std::to_string(worst) + " at instance " + std::to_string(instance);
            return false;
        }
    }
    detail = "worst relative error " + std::to_string(worst) + " over 100 instances";
    return true;
}

// ---------------------------------------------------------------------------
// 5. mixture ratio math + kde self-divergence
bool criterion_mixture(std::string& detail) {
    struct Case {
        double beta, kappa, dkl, expect;
    };
    const std::vector<Case> table{
        {-20.0, 1.0, 0.0, 1.0},         {-20.0, 1.0, 25.0, 0.2},  {-20.0, 1.0, 21.0, 1.0},
        {-3.0, 2e-3, 1000.0, 1.0},      {-3.0, 2e-3, 5000.0, 1.0 / 7.0},
        {-20.0, 1.0, 1e9, 1.0 / (1e9 - 20.0)},
    };
    for (const Case& c : table) {
        const double got = alpha_from_dkl(c.beta, c.kappa, c.dkl);
        if (std::abs(got - c.expect) > 1e-12) {
            detail = "alpha mismatch at dkl=" + std::to_string(c.dkl);
            return false;
        }
    }
    double prev = 2.0;
    for (double dkl = 0.0; dkl <= 500.0; dkl += 0.25) {
        const double a = alpha_from_dkl(-20.0, 1.0, dkl);
        if (a > prev + 1e-15 || a <= 0.0 || a > 1.0) {
            detail = "monotonicity or range violation";
            return false;
        }
        prev = a;
    }

    Rng rng(55);
    std::vector<Vec> pts;
    for (int i = 0; i < 500; ++i) pts.push_back({rng.normal(), 2.0 * rng.normal()});
    const Kde p = Kde::fit(pts);
    const Kde p2 = Kde::fit(pts);
    const double self_kl = monte_carlo_kl(p, p2, 512, 1e-12, rng);
    detail = "alpha table exact; |self KL| = " + std::to_string(std::abs(self_kl));
    return std::abs(self_kl) <= 0.05;
}

// ---------------------------------------------------------------------------
// 6. sampling distributions: frontier rule + hindsight ratio
bool criterion_sampling(std::string& detail) {
    auto lm_at = [](int id, double x, double y) {
        Landmark lm;
        lm.id = id;
        lm.point = {x, y, 0.0, 0.0};
        lm.latent = lm.point;
        return lm;
    };
    const LandmarkDistanceFn dist = [](const Landmark& a, const Landmark& b) {
        const double dx = a.point[0] - b.point[0];
        const double dy = a.point[1] - b.point[1];
        return std::sqrt(dx * dx + dy * dy);
    };
    const MazeMap map = load_maze_text("S........G\n..........\n..........\n..........\n..........\n");
    const FeatureCodec codec(map, ObsMode::State);

    // two-landmark fixture with counts (9, 0)
    {
        LandmarkGraph g = build_graph({lm_at(0, 5.0, 2.0), lm_at(1, 1.0, 2.0), lm_at(2, 9.0, 2.0)}, dist, 6.0, 1);
        VisitCounts counts;
        counts.reset(1, 3);
        for (int i = 0; i < 9; ++i) counts.bump(1);
        FrontierConfig fc;
        fc.top_k = 2;
        fc.noise_radius = 0.0;
        const std::vector<double> from_init = g.geodesics_from(0);

        const double eta1 = 1.0 / (1.0 + fc.ucert_eps);
        const double eta2 = 1.0 / fc.ucert_eps;
        Rng orng(661);
        const std::vector<double> expect = oracle::frontier_rule_frequencies({eta1, eta2}, 400000, orng);

        Rng rng(662);
        double picked2 = 0.0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            picked2 += sample_frontier_goal(g, counts, from_init, fc, codec, rng).goal.landmark_id == 2;
        }
        picked2 /= trials;
        if (std::abs(picked2 - expect[1]) > 0.02) {
            detail = "2-landmark frequency off: " + std::to_string(picked2) + " vs " + std::to_string(expect[1]);
            return false;
        }
    }

    // five-landmark fixture with mixed counts
    {
        std::vector<Landmark> lms{lm_at(0, 5.0, 0.5)};
        for (int i = 1; i <= 5; ++i) lms.push_back(lm_at(i, 4.0 + 0.5 * i, 4.0));
        LandmarkGraph g = build_graph(std::move(lms), dist, 10.0, 1);
        VisitCounts counts;
        counts.reset(1, 6);
        const int visit_pattern[6] = {0, 4, 0, 2, 1, 9};
        for (int id = 0; id < 6; ++id) {
            for (int k = 0; k < visit_pattern[id]; ++k) counts.bump(id);
        }
        FrontierConfig fc;
        fc.top_k = 5;
        fc.noise_radius = 0.0;
        const std::vector<double> from_init = g.geodesics_from(0);

        // rank candidates as the implementation does: distance desc, id asc
        std::vector<int> order{1, 2, 3, 4, 5};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (from_init[a] != from_init[b]) return from_init[a] > from_init[b];
            return a < b;
        });
        const double total = counts.total();
        std::vector<double> eta;
        for (int id : order) eta.push_back(1.0 / (counts.counts()[id] / total + fc.ucert_eps));
        Rng orng(663);
        const std::vector<double> expect = oracle::frontier_rule_frequencies(eta, 400000, orng);

        Rng rng(664);
        const int trials = 10000;
        std::map<int, double> freq;
        for (int i = 0; i < trials; ++i) {
            freq[sample_frontier_goal(g, counts, from_init, fc, codec, rng).goal.landmark_id] += 1.0;
        }
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const double got = freq[order[pos]] / trials;
            if (std::abs(got - expect[pos]) > 0.02) {
                detail = "5-landmark frequency off at landmark " + std::to_string(order[pos]);
                return false;
            }
        }
    }

    // hindsight relabel fraction
    {
        RLBuffer rl(100000);
        for (int e = 0; e < 10; ++e) {
            std::vector<Transition> traj;
            for (int t = 0; t < 60; ++t) {
                Transition tr;
                tr.obs.x = t;
                tr.obs.feature = {static_cast<double>(t), 0.0};
                tr.next_obs.x = t + 1;
                tr.next_obs.feature = {static_cast<double>(t + 1), 0.0};
                tr.goal.x = 1e6; // sentinel: relabels are unmistakable
                tr.goal.feature = {1e6, 0.0};
                tr.reward = -1.0;
                tr.episode_id = e;
                tr.step_index = t;
                traj.push_back(tr);
            }
            rl.store_episode(traj);
        }
        Rng rng(665);
        const auto batch = rl.sample_batch(10000, 0.8, 60, 0.5, rng);
        double relabeled = 0.0;
        for (const Transition& t : batch) relabeled += t.goal.x != 1e6;
        relabeled /= batch.size();
        if (std::abs(relabeled - 0.8) > 0.02) {
            detail = "relabel fraction " + std::to_string(relabeled);
            return false;
        }
    }

    detail = "frontier frequencies within 2% of the rule oracle; relabel fraction within 2%";
    return true;
}

// ---------------------------------------------------------------------------
// end-to-end configs (criteria 7-9)

RunConfig umaze_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.maze_text = read_file(maps_dir() + "/umaze.txt");
    cfg.seed = seed;
    cfg.episodes = 2000;
    cfg.horizon = 150;
    cfg.warmup_rollouts = 20;
    cfg.graph_cycle = 5;
    cfg.train_steps_per_cycle = 40;
    cfg.batch_size = 64;
    cfg.num_codes = 48;
    cfg.cutoff = 10.0;
    cfg.noise_radius = 1.0;
    cfg.beta = -20.0;
    cfg.kappa = 1.0;
    cfg.checkpoint_buffers = false;
    return cfg;
}

RunConfig spiral_config(std::uint64_t seed) {
    RunConfig cfg = umaze_config(seed);
    cfg.maze_text = read_file(maps_dir() + "/spiral.txt");
    cfg.episodes = 1500;
    cfg.horizon = 250;
    cfg.cutoff = 7.0;
    return cfg;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4};

// 7. curriculum efficacy gap on the u-maze
bool criterion_curriculum_efficacy(std::string& detail) {
    int ok_pairs = 0;
    std::string per_seed;
    for (std::uint64_t seed : kSeeds) {
        Trainer cqm(umaze_config(seed));
        cqm.run();
        const double cqm_rate = cqm.summary().final_success_rate;

        RunConfig ablated = umaze_config(seed);
        ablated.no_curriculum = true;
        Trainer bare(ablated);
        bare.run();
        const double bare_rate = bare.summary().final_success_rate;

        per_seed += " s" + std::to_string(seed) + "=" + std::to_string(cqm_rate) + "/" + std::to_string(bare_rate);
        if (cqm_rate >= 0.9 && bare_rate <= 0.2) ++ok_pairs;
    }
    detail = "seeds with (cqm>=0.9, no_curriculum<=0.2):" + per_seed;
    return ok_pairs >= 3;
}

// 8. goal distance shrinks and alpha rises across thirds
bool criterion_convergence_trend(std::string& detail) {
    int ok = 0;
    std::string per_seed;
    for (std::uint64_t seed : kSeeds) {
        Trainer t(umaze_config(seed));
        t.run();
        const RunSummary s = t.summary();
        const bool dist_ok = s.goal_dist_thirds[2] < s.goal_dist_thirds[0];
        const bool alpha_ok = s.alpha_thirds[0] <= s.alpha_thirds[1] + 1e-9 &&
                              s.alpha_thirds[1] <= s.alpha_thirds[2] + 1e-9;
        const bool success_ok = s.final_success_rate >= 0.9;
        per_seed += " s" + std::to_string(seed) + (dist_ok && alpha_ok && success_ok ? "=ok" : "=no");
        if (dist_ok && alpha_ok && success_ok) ++ok;
    }
    detail = "thirds trend per seed:" + per_seed;
    return ok >= 3;
}

// 9. ablation ordering on the spiral maze
bool criterion_ablation_ordering(std::string& detail) {
    auto first_success = [](const RunConfig& cfg) {
        Trainer t(cfg);
        t.run();
        const int fs = t.first_success_episode();
        return fs < 0 ? cfg.episodes + 1 : fs;
    };
    int ok = 0;
    std::string per_seed;
    for (std::uint64_t seed : kSeeds) {
        const int full = first_success(spiral_config(seed));
        RunConfig ng = spiral_config(seed);
        ng.no_graph = true;
        const int no_graph = first_success(ng);
        RunConfig np = spiral_config(seed);
        np.no_planning = true;
        const int no_planning = first_success(np);
        per_seed += " s" + std::to_string(seed) + "=" + std::to_string(full) + "<" + std::to_string(no_graph) + "," +
                    std::to_string(no_planning);
        if (full < no_graph && full < no_planning) ++ok;
    }
    detail = "episodes-to-first-success:" + per_seed;
    return ok >= 3;
}

// 10. byte-identical metrics for identical (config, seed)
bool criterion_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    RunConfig cfg = umaze_config(12345);
    cfg.episodes = 60;
    const fs::path base = fs::temp_directory_path() / "cqm_acceptance_det";
    fs::remove_all(base);

    std::string contents[2];
    for (int run = 0; run < 2; ++run) {
        RunConfig c = cfg;
        c.out_dir = (base / ("run" + std::to_string(run))).string();
        Trainer t(c);
        t.run();
        t.write_outputs();
        std::ifstream in(fs::path(c.out_dir) / "metrics.csv", std::ios::binary);
        contents[run].assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    fs::remove_all(base);
    detail = "metrics files " + std::to_string(contents[0].size()) + " bytes";
    return !contents[0].empty() && contents[0] == contents[1];
}

} // namespace

int main(int argc, char** argv) {
    int only = -1;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    const std::vector<Criterion> criteria{
        {1, "temporal-distance roundtrip exact to 1e-9", criterion_temporal_roundtrip},
        {2, "dijkstra equals brute-force enumeration", criterion_shortest_path},
        {3, "nearest-code oracle + ema clustering", criterion_quantizer},
        {4, "encoder/decoder gradients vs central differences", criterion_gradients},
        {5, "mixture ratio table + kde self-divergence", criterion_mixture},
        {6, "frontier and hindsight sampling distributions", criterion_sampling},
        {7, "curriculum efficacy gap on the u-maze", criterion_curriculum_efficacy},
        {8, "goal distance shrinks, alpha rises across thirds", criterion_convergence_trend},
        {9, "ablation ordering on the spiral maze", criterion_ablation_ordering},
        {10, "byte-identical metrics across identical runs", criterion_determinism},
    };

    bool all_ok = true;
    for (const Criterion& c : criteria) {
        if (only > 0 && c.id != only) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %2d: %s — %s (%s)\n", c.id, ok ? "PASS" : "FAIL", c.name.c_str(), detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
