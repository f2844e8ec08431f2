#pragma once

#include <vector>

#include "cqm/graph.hpp"
#include "cqm/maze.hpp"
#include "cqm/quantizer.hpp"
#include "cqm/rng.hpp"

namespace cqm {

// Per-landmark occurrence counts over recent episodes; reset whenever the
// graph generation advances.
class VisitCounts {
public:
    void reset(int generation, std::size_t n_landmarks);
    int generation() const { return generation_; }
    const std::vector<double>& counts() const { return counts_; }
    double total() const;
    void bump(int landmark_id) { counts_[static_cast<std::size_t>(landmark_id)] += 1.0; }
    void restore(int generation, std::vector<double> counts);

private:
    int generation_ = -1;
    std::vector<double> counts_;
};

// Quantizes each observation to its nearest landmark (latent L2) and bumps
// that landmark's count. Throws when the counts lag the graph generation.
void record_visits(const std::vector<Vec>& episode_features, const LandmarkGraph& graph, const Quantizer& q,
                   VisitCounts& counts);

struct CurriculumGoal {
    enum class Kind { Frontier, Final };
    Kind kind = Kind::Frontier;
    Vec point;        // pursued goal point (landmark + noise, or final example)
    Vec noise;        // additive component, zero for final goals
    int landmark_id = -1;
};

struct FrontierSample {
    CurriculumGoal goal;
    int topk_size = 0;
};

struct FrontierConfig {
    int top_k = 0; // 0: max(5, ceil(0.1 * reachable))
    double ucert_eps = 1e-3;
    double noise_radius = 1.0;
};

// Uncertainty- and distance-aware frontier goal: of the top-k landmarks
// farthest (by dist_from_init) from the initial landmark, pick the argmax of
// inverse-visitation weight times an independent uniform draw, then add
// positional noise inside the configured radius. dist_from_init maps a
// vertex id to its distance; unreachable entries are excluded. Throws when
// no landmark is reachable.
FrontierSample sample_frontier_goal(const LandmarkGraph& graph, const VisitCounts& counts,
                                    const std::vector<double>& dist_from_init, const FrontierConfig& cfg,
                                    const FeatureCodec& codec, Rng& rng);

// Diagonal-bandwidth Gaussian kernel density estimate, Scott's rule.
class Kde {
public:
    static Kde fit(const std::vector<Vec>& points);
    double log_density(const Vec& x) const;
    Vec sample(Rng& rng) const;
    std::size_t sample_count() const { return points_.size(); }

private:
    std::vector<Vec> points_;
    Vec bandwidth_;
    double log_norm_ = 0.0; // log of the per-kernel normalization constant
};

struct MixtureConfig {
    double beta = -20.0;
    double kappa = 1.0;
    double alpha0 = 0.05;
    double rho_floor = 1e-12;
    int n_mc = 512;
    int min_fit_samples = 50;
};

// alpha = 1 / max(beta + kappa * KL(final || achieved), 1), estimated by
// Monte Carlo between Gaussian KDE fits of the two point sets.
class GoalMixture {
public:
    explicit GoalMixture(MixtureConfig cfg) : cfg_(cfg), alpha_(cfg.alpha0) {}

    double alpha() const { return alpha_; }
    double last_dkl() const { return last_dkl_; }
    const MixtureConfig& config() const { return cfg_; }

    // Refits both KDEs and refreshes alpha; keeps the previous alpha when
    // either sample set is below min_fit_samples.
    double update_alpha(const std::vector<Vec>& achieved, const std::vector<Vec>& finals, Rng& rng);

    void restore(double alpha, double dkl);

private:
    MixtureConfig cfg_;
    double alpha_;
    double last_dkl_ = 0.0;
};

double alpha_from_dkl(double beta, double kappa, double dkl);
double monte_carlo_kl(const Kde& p, const Kde& q, int n_mc, double rho_floor, Rng& rng);

// Bernoulli(alpha) choice between the final example and the frontier goal.
CurriculumGoal choose_goal(double alpha, const CurriculumGoal& frontier, const Observation& final_example, Rng& rng);

} // namespace cqm
