#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cqm/mlp.hpp"
#include "cqm/rng.hpp"
#include "cqm/vecmath.hpp"

namespace cqm {

struct VQLossReport {
    double recon = 0.0;  // mean over batch of squared reconstruction error
    double commit = 0.0; // mean over batch of the commitment term
    double commit_coef = 0.25;
};

struct QuantizerConfig {
    int num_codes = 48;
    int latent_dim = 4; // ignored in identity mode (latent dim = input dim)
    bool identity = true;
    int hidden = 32;            // mlp mode
    double learning_rate = 0.01; // mlp mode
    double ema_decay = 0.99;
    double ema_eps = 1e-5;
    double commit_coef = 0.25;
    int max_unused_rollouts = 5; // resample codes idle longer than this
};

// Discretization bottleneck over the observation space: encoder/decoder pair
// around a codebook trained by exponential-moving-average assignment counts.
// The codebook never receives gradient updates; encoder gradients flow
// straight-through the quantization step.
class Quantizer {
public:
    Quantizer(QuantizerConfig cfg, int obs_dim, Rng& rng);

    const QuantizerConfig& config() const { return cfg_; }
    int obs_dim() const { return obs_dim_; }
    int latent_dim() const { return latent_dim_; }
    int num_codes() const { return cfg_.num_codes; }

    // Seeds each code from the sample list (cycled if shorter than k) with
    // fresh accumulators N=1, m=e.
    void init_codebook_from(const std::vector<Vec>& samples);

    Vec encode(const Vec& obs) const;
    Vec decode(const Vec& latent) const;

    // Nearest code under L2; ties break to the lowest index.
    std::pair<int, Vec> quantize(const Vec& z_e) const;
    int nearest_code(const Vec& z_e) const;
    double nearest_code_sqdist(const Vec& z_e) const;

    // One gradient step on recon + commit for the encoder/decoder (mlp mode)
    // and one EMA codebook update. Throws on non-finite loss.
    VQLossReport train_step(const std::vector<Vec>& batch);

    // Ages all codes by one rollout; assignments in train_step reset ages.
    void note_rollout();

    // Re-initializes codes idle for more than max_unused_rollouts to encoded
    // candidates drawn with probability proportional to their squared
    // distance from the nearest code. Returns the number resampled.
    int resample_dead_codes(const std::vector<Vec>& recent, Rng& rng);

    const Vec& code(int j) const { return codes_[j]; }
    Vec decode_code(int j) const { return decode(codes_[j]); }
    int usage_age(int j) const { return usage_age_[j]; }

    // Number of distinct codes the given observations map to.
    int active_code_count(const std::vector<Vec>& obs) const;

    // Test-visible surrogate for finite-difference checks: loss with the
    // straight-through offsets and code assignments frozen.
    double surrogate_loss(const std::vector<Vec>& batch, const std::vector<int>& frozen_codes,
                          const std::vector<Vec>& frozen_offsets) const;

    Mlp& encoder_mlp() { return encoder_; }
    Mlp& decoder_mlp() { return decoder_; }
    const Mlp& encoder_mlp() const { return encoder_; }
    const Mlp& decoder_mlp() const { return decoder_; }

    // Checkpoint access.
    const std::vector<Vec>& codes() const { return codes_; }
    const Vec& ema_counts() const { return ema_count_; }
    const std::vector<Vec>& ema_sums() const { return ema_sum_; }
    const std::vector<int>& usage_ages() const { return usage_age_; }
    void restore(std::vector<Vec> codes, Vec ema_count, std::vector<Vec> ema_sum, std::vector<int> ages);

private:
    void ema_update(const std::vector<Vec>& latents, const std::vector<int>& assignment);

    QuantizerConfig cfg_;
    int obs_dim_ = 0;
    int latent_dim_ = 0;
    Mlp encoder_, decoder_;
    std::vector<Vec> codes_;
    Vec ema_count_;
    std::vector<Vec> ema_sum_;
    std::vector<int> usage_age_;
};

} // namespace cqm
