#include "cqm/quantizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cqm {

Quantizer::Quantizer(QuantizerConfig cfg, int obs_dim, Rng& rng) : cfg_(cfg), obs_dim_(obs_dim) {
    if (cfg_.num_codes < 2) throw std::runtime_error("quantizer config error: need at least 2 codes");
    latent_dim_ = cfg_.identity ? obs_dim_ : cfg_.latent_dim;
    if (!cfg_.identity) {
        encoder_ = Mlp(obs_dim_, cfg_.hidden, latent_dim_, rng);
        decoder_ = Mlp(latent_dim_, cfg_.hidden, obs_dim_, rng);
    }
    codes_.assign(static_cast<std::size_t>(cfg_.num_codes), Vec(static_cast<std::size_t>(latent_dim_), 0.0));
    // Spread default codes over a tiny deterministic lattice so nearest-code
    // queries are well-defined before data-driven initialization.
    for (int j = 0; j < cfg_.num_codes; ++j) codes_[j][0] = 1e-3 * j;
    ema_count_.assign(static_cast<std::size_t>(cfg_.num_codes), 1.0);
    ema_sum_ = codes_;
    usage_age_.assign(static_cast<std::size_t>(cfg_.num_codes), 0);
}

void Quantizer::init_codebook_from(const std::vector<Vec>& samples) {
    if (samples.empty()) throw std::runtime_error("quantizer error: empty codebook init sample");
    for (int j = 0; j < cfg_.num_codes; ++j) {
        codes_[j] = encode(samples[j % samples.size()]);
        ema_count_[j] = 1.0;
        ema_sum_[j] = codes_[j];
        usage_age_[j] = 0;
    }
}

Vec Quantizer::encode(const Vec& obs) const { return cfg_.identity ? obs : encoder_.forward(obs); }

Vec Quantizer::decode(const Vec& latent) const { return cfg_.identity ? latent : decoder_.forward(latent); }

int Quantizer::nearest_code(const Vec& z_e) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cfg_.num_codes; ++j) {
        const double d = squared_distance(z_e, codes_[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

double Quantizer::nearest_code_sqdist(const Vec& z_e) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& c : codes_) best = std::min(best, squared_distance(z_e, c));
    return best;
}

std::pair<int, Vec> Quantizer::quantize(const Vec& z_e) const {
    const int j = nearest_code(z_e);
    return {j, codes_[j]};
}

void Quantizer::ema_update(const std::vector<Vec>& latents, const std::vector<int>& assignment) {
    const double decay = cfg_.ema_decay;
    Vec count(static_cast<std::size_t>(cfg_.num_codes), 0.0);
    std::vector<Vec> sum(static_cast<std::size_t>(cfg_.num_codes), Vec(static_cast<std::size_t>(latent_dim_), 0.0));
    for (std::size_t i = 0; i < latents.size(); ++i) {
        const int c = assignment[i];
        count[c] += 1.0;
        for (int d = 0; d < latent_dim_; ++d) sum[c][d] += latents[i][d];
    }
    for (int j = 0; j < cfg_.num_codes; ++j) {
        ema_count_[j] = decay * ema_count_[j] + (1.0 - decay) * count[j];
        for (int d = 0; d < latent_dim_; ++d) {
            ema_sum_[j][d] = decay * ema_sum_[j][d] + (1.0 - decay) * sum[j][d];
            codes_[j][d] = ema_sum_[j][d] / std::max(ema_count_[j], cfg_.ema_eps);
        }
        if (count[j] > 0.0) usage_age_[j] = 0;
    }
}

VQLossReport Quantizer::train_step(const std::vector<Vec>& batch) {
    if (batch.empty()) throw std::runtime_error("quantizer error: empty training batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    VQLossReport report;
    report.commit_coef = cfg_.commit_coef;

    std::vector<Vec> latents(batch.size());
    std::vector<int> assignment(batch.size());

    if (cfg_.identity) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            latents[i] = batch[i];
            const auto [c, z_q] = quantize(latents[i]);
            assignment[i] = c;
            const double err = squared_distance(z_q, batch[i]);
            report.recon += err * inv_b;
            report.commit += err * inv_b;
        }
    } else {
        Mlp::Grads enc_grads, dec_grads;
        enc_grads.init_like(encoder_);
        dec_grads.init_like(decoder_);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Mlp::Trace enc_trace;
            latents[i] = encoder_.forward(batch[i], enc_trace);
            const auto [c, z_q] = quantize(latents[i]);
            assignment[i] = c;

            Mlp::Trace dec_trace;
            const Vec recon = decoder_.forward(z_q, dec_trace);
            double err = 0.0;
            Vec dl_drecon(recon.size());
            for (std::size_t d = 0; d < recon.size(); ++d) {
                const double diff = recon[d] - batch[i][d];
                err += diff * diff;
                dl_drecon[d] = 2.0 * diff * inv_b;
            }
            report.recon += err * inv_b;
            report.commit += squared_distance(latents[i], z_q) * inv_b;

            // Decoder gradients, plus dL/dz_q carried straight through to the
            // encoder output.
            Vec dl_dzq;
            decoder_.backward(dec_trace, dl_drecon, dec_grads, &dl_dzq);
            for (int d = 0; d < latent_dim_; ++d) {
                dl_dzq[d] += 2.0 * cfg_.commit_coef * (latents[i][d] - z_q[d]) * inv_b;
            }
            encoder_.backward(enc_trace, dl_dzq, enc_grads, nullptr);
        }
        encoder_.sgd_step(enc_grads, cfg_.learning_rate);
        decoder_.sgd_step(dec_grads, cfg_.learning_rate);
    }

    if (!std::isfinite(report.recon) || !std::isfinite(report.commit)) {
        throw std::runtime_error("quantizer error: non-finite loss (recon=" + std::to_string(report.recon) +
                                 ", commit=" + std::to_string(report.commit) + ")");
    }

    ema_update(latents, assignment);
    return report;
}

void Quantizer::note_rollout() {
    for (int& age : usage_age_) ++age;
}

int Quantizer::resample_dead_codes(const std::vector<Vec>& recent, Rng& rng) {
    if (recent.empty()) return 0;
    std::vector<int> dead;
    for (int j = 0; j < cfg_.num_codes; ++j) {
        if (usage_age_[j] > cfg_.max_unused_rollouts) dead.push_back(j);
    }
    if (dead.empty()) return 0;

    // Candidate weights against the pre-resample codebook.
    std::vector<Vec> encoded(recent.size());
    Vec weight(recent.size());
    double total = 0.0;
    for (std::size_t i = 0; i < recent.size(); ++i) {
        encoded[i] = encode(recent[i]);
        weight[i] = nearest_code_sqdist(encoded[i]);
        total += weight[i];
    }

    for (int j : dead) {
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            for (std::size_t i = 0; i < weight.size(); ++i) {
                r -= weight[i];
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
                if (i + 1 == weight.size()) pick = i;
            }
        } else {
            pick = rng.uniform_index(recent.size()); // all candidates sit on codes
        }
        codes_[j] = encoded[pick];
        ema_count_[j] = 1.0;
        ema_sum_[j] = codes_[j];
        usage_age_[j] = 0;
    }
    return static_cast<int>(dead.size());
}

int Quantizer::active_code_count(const std::vector<Vec>& obs) const {
    std::vector<char> hit(static_cast<std::size_t>(cfg_.num_codes), 0);
    for (const Vec& o : obs) hit[nearest_code(encode(o))] = 1;
    int n = 0;
    for (char h : hit) n += h;
    return n;
}

double Quantizer::surrogate_loss(const std::vector<Vec>& batch, const std::vector<int>& frozen_codes,
                                 const std::vector<Vec>& frozen_offsets) const {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec z_e = encode(batch[i]);
        Vec z_input = z_e;
        for (int d = 0; d < latent_dim_; ++d) z_input[d] += frozen_offsets[i][d];
        const Vec recon = decode(z_input);
        loss += squared_distance(recon, batch[i]) * inv_b;
        loss += cfg_.commit_coef * squared_distance(z_e, codes_[frozen_codes[i]]) * inv_b;
    }
    return loss;
}

void Quantizer::restore(std::vector<Vec> codes, Vec ema_count, std::vector<Vec> ema_sum, std::vector<int> ages) {
    codes_ = std::move(codes);
    ema_count_ = std::move(ema_count);
    ema_sum_ = std::move(ema_sum);
    usage_age_ = std::move(ages);
}

} // namespace cqm
