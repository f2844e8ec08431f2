#include "cqm/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cqm {

void VisitCounts::reset(int generation, std::size_t n_landmarks) {
    generation_ = generation;
    counts_.assign(n_landmarks, 0.0);
}

double VisitCounts::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0.0); }

void VisitCounts::restore(int generation, std::vector<double> counts) {
    generation_ = generation;
    counts_ = std::move(counts);
}

void record_visits(const std::vector<Vec>& episode_features, const LandmarkGraph& graph, const Quantizer& q,
                   VisitCounts& counts) {
    if (counts.generation() != graph.generation()) {
        throw std::runtime_error("curriculum error: visit counts generation " + std::to_string(counts.generation()) +
                                 " does not match graph generation " + std::to_string(graph.generation()));
    }
    if (graph.base_vertex_count() == 0) return;
    for (const Vec& f : episode_features) {
        const int id = graph.nearest_vertex_latent(q.encode(f));
        if (id >= 0) counts.bump(id);
    }
}

FrontierSample sample_frontier_goal(const LandmarkGraph& graph, const VisitCounts& counts,
                                    const std::vector<double>& dist_from_init, const FrontierConfig& cfg,
                                    const FeatureCodec& codec, Rng& rng) {
    std::vector<int> reachable;
    for (std::size_t v = 0; v < graph.base_vertex_count(); ++v) {
        if (dist_from_init[v] < kUnreachable) reachable.push_back(static_cast<int>(v));
    }
    if (reachable.empty()) throw std::runtime_error("curriculum error: no landmark reachable from the initial state");

    int top_k = cfg.top_k;
    if (top_k <= 0) {
        top_k = std::max<int>(5, static_cast<int>(std::ceil(0.1 * static_cast<double>(reachable.size()))));
    }
    top_k = std::min<int>(top_k, static_cast<int>(reachable.size()));

    // Farthest first; ties by lower id keep the ordering reproducible.
    std::sort(reachable.begin(), reachable.end(), [&dist_from_init](int a, int b) {
        const double da = dist_from_init[static_cast<std::size_t>(a)];
        const double db = dist_from_init[static_cast<std::size_t>(b)];
        if (da != db) return da > db;
        return a < b;
    });
    reachable.resize(static_cast<std::size_t>(top_k));

    const double total = counts.total();
    int best = reachable[0];
    double best_score = -1.0;
    for (int id : reachable) {
        const double mu = total > 0.0 ? counts.counts()[static_cast<std::size_t>(id)] / total : 0.0;
        const double ucert = 1.0 / (mu + cfg.ucert_eps);
        const double score = ucert * rng.uniform();
        if (score > best_score) {
            best_score = score;
            best = id;
        }
    }

    CurriculumGoal goal;
    goal.kind = CurriculumGoal::Kind::Frontier;
    goal.landmark_id = best;
    goal.point = graph.vertex(best).point;
    goal.noise.assign(goal.point.size(), 0.0);
    if (cfg.noise_radius > 0.0) {
        const double r = cfg.noise_radius * std::sqrt(rng.uniform());
        const double theta = 2.0 * M_PI * rng.uniform();
        const double dx = r * std::cos(theta);
        const double dy = r * std::sin(theta);
        Vec shifted = goal.point;
        codec.shift_position(shifted, dx, dy);
        for (std::size_t i = 0; i < goal.point.size(); ++i) goal.noise[i] = shifted[i] - goal.point[i];
        goal.point = std::move(shifted);
    }
    return {std::move(goal), top_k};
}

Kde Kde::fit(const std::vector<Vec>& points) {
    if (points.empty()) throw std::runtime_error("kde error: empty sample set");
    Kde k;
    k.points_ = points;
    const std::size_t n = points.size();
    const std::size_t d = points[0].size();

    Vec mean(d, 0.0);
    for (const Vec& p : points) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    Vec var(d, 0.0);
    for (const Vec& p : points) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = p[j] - mean[j];
            var[j] += diff * diff;
        }
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    const double scott = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    k.bandwidth_.assign(d, 0.0);
    double log_det = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double sigma = std::sqrt(var[j] / denom);
        k.bandwidth_[j] = std::max(sigma * scott, 1e-6);
        log_det += std::log(k.bandwidth_[j]);
    }
    k.log_norm_ = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI) - log_det - std::log(static_cast<double>(n));
    return k;
}

double Kde::log_density(const Vec& x) const {
    // log-sum-exp over kernels for stability far from the support.
    double max_e = -std::numeric_limits<double>::infinity();
    std::vector<double> exponents(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double z = (x[j] - points_[i][j]) / bandwidth_[j];
            e -= 0.5 * z * z;
        }
        exponents[i] = e;
        max_e = std::max(max_e, e);
    }
    double s = 0.0;
    for (double e : exponents) s += std::exp(e - max_e);
    return log_norm_ + max_e + std::log(s);
}

Vec Kde::sample(Rng& rng) const {
    const Vec& base = points_[rng.uniform_index(points_.size())];
    Vec x(base.size());
    for (std::size_t j = 0; j < base.size(); ++j) x[j] = base[j] + bandwidth_[j] * rng.normal();
    return x;
}

double alpha_from_dkl(double beta, double kappa, double dkl) {
    return 1.0 / std::max(beta + kappa * dkl, 1.0);
}

double monte_carlo_kl(const Kde& p, const Kde& q, int n_mc, double rho_floor, Rng& rng) {
    const double log_floor = std::log(rho_floor);
    double acc = 0.0;
    for (int i = 0; i < n_mc; ++i) {
        const Vec x = p.sample(rng);
        const double lp = std::max(p.log_density(x), log_floor);
        const double lq = std::max(q.log_density(x), log_floor);
        acc += lp - lq;
    }
    return acc / static_cast<double>(n_mc);
}

double GoalMixture::update_alpha(const std::vector<Vec>& achieved, const std::vector<Vec>& finals, Rng& rng) {
    if (achieved.size() < static_cast<std::size_t>(cfg_.min_fit_samples) ||
        finals.size() < static_cast<std::size_t>(cfg_.min_fit_samples)) {
        return alpha_;
    }
    const Kde p_gf = Kde::fit(finals);
    const Kde p_ag = Kde::fit(achieved);
    last_dkl_ = monte_carlo_kl(p_gf, p_ag, cfg_.n_mc, cfg_.rho_floor, rng);
    alpha_ = alpha_from_dkl(cfg_.beta, cfg_.kappa, last_dkl_);
    return alpha_;
}

void GoalMixture::restore(double alpha, double dkl) {
    alpha_ = alpha;
    last_dkl_ = dkl;
}

CurriculumGoal choose_goal(double alpha, const CurriculumGoal& frontier, const Observation& final_example, Rng& rng) {
    if (rng.uniform() < alpha) {
        CurriculumGoal g;
        g.kind = CurriculumGoal::Kind::Final;
        g.point = final_example.feature;
        g.noise.assign(final_example.feature.size(), 0.0);
        return g;
    }
    return frontier;
}

} // namespace cqm
