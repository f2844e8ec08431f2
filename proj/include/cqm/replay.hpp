#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "cqm/maze.hpp"
#include "cqm/rng.hpp"

namespace cqm {

struct Transition {
    Observation obs;
    Observation next_obs;
    Observation goal;
    int action = 0;
    double reward = -1.0;
    bool done = false; // success-terminal; horizon truncation is not terminal
    int episode_id = 0;
    int step_index = 0;
};

// Episode-contiguous ring buffer. Eviction drops whole episodes so the
// hindsight "future" lookup never crosses a partially retained episode.
class RLBuffer {
public:
    explicit RLBuffer(std::size_t capacity) : capacity_(capacity) {}

    void store_episode(std::vector<Transition> traj);

    std::size_t size() const { return total_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t episode_count() const { return episodes_.size(); }
    const std::vector<Transition>& episode(std::size_t i) const { return episodes_[i]; }

    // Uniform over stored transitions; each drawn transition is relabeled
    // with probability her_ratio: the goal becomes the achieved state of a
    // uniformly chosen step in [t, min(t + future_window, T-1)] of the same
    // episode, and reward/done are recomputed against it.
    std::vector<Transition> sample_batch(std::size_t n, double her_ratio, int future_window,
                                         double success_threshold, Rng& rng) const;

    // Serialization support: raw access in storage order.
    const std::deque<std::vector<Transition>>& episodes() const { return episodes_; }
    void restore(std::deque<std::vector<Transition>> episodes);

private:
    std::size_t capacity_;
    std::size_t total_ = 0;
    std::deque<std::vector<Transition>> episodes_;
    std::vector<std::size_t> cumulative_; // transitions before episode i
};

// Recent-observation ring for quantizer training.
class VQBuffer {
public:
    explicit VQBuffer(std::size_t capacity) : capacity_(capacity) {}

    void store_episode(const std::vector<Transition>& traj);
    void push(const Observation& obs);

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Observation& at(std::size_t i) const { return data_[i]; }

    std::vector<Vec> features() const;
    std::vector<Vec> sample_features(std::size_t n, Rng& rng) const;

    const std::vector<Observation>& raw() const { return data_; }
    std::size_t head() const { return head_; }
    void restore(std::vector<Observation> data, std::size_t head);

private:
    std::size_t capacity_;
    std::vector<Observation> data_;
    std::size_t head_ = 0; // next overwrite position once full
};

// Appends the trajectory to the agent buffer and its observation stream
// (including the terminal next observation) to the quantizer buffer.
void store_episode(const std::vector<Transition>& traj, RLBuffer& rl, VQBuffer& vq);

} // namespace cqm
