#include "cqm/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace cqm {

void RLBuffer::store_episode(std::vector<Transition> traj) {
    if (traj.empty()) return;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj[i].episode_id != traj[0].episode_id || (i > 0 && traj[i].step_index != traj[i - 1].step_index + 1)) {
            throw std::runtime_error("replay error: trajectory must be one ordered episode");
        }
    }
    if (traj.size() > capacity_) return; // episode can never fit whole
    total_ += traj.size();
    episodes_.push_back(std::move(traj));
    while (total_ > capacity_) {
        total_ -= episodes_.front().size();
        episodes_.pop_front();
    }
    cumulative_.clear();
    cumulative_.reserve(episodes_.size());
    std::size_t acc = 0;
    for (const auto& ep : episodes_) {
        cumulative_.push_back(acc);
        acc += ep.size();
    }
}

void RLBuffer::restore(std::deque<std::vector<Transition>> episodes) {
    episodes_ = std::move(episodes);
    total_ = 0;
    cumulative_.clear();
    for (const auto& ep : episodes_) {
        cumulative_.push_back(total_);
        total_ += ep.size();
    }
}

std::vector<Transition> RLBuffer::sample_batch(std::size_t n, double her_ratio, int future_window,
                                               double success_threshold, Rng& rng) const {
    if (total_ == 0) throw std::runtime_error("replay error: sample from empty buffer");
    std::vector<Transition> batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t flat = rng.uniform_index(total_);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), flat);
        const std::size_t ep_idx = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
        const std::vector<Transition>& ep = episodes_[ep_idx];
        const std::size_t t = flat - cumulative_[ep_idx];

        Transition tr = ep[t];
        if (rng.uniform() < her_ratio) {
            const std::size_t last = std::min(ep.size() - 1, t + static_cast<std::size_t>(future_window));
            const std::size_t pick = t + rng.uniform_index(last - t + 1);
            tr.goal = ep[pick].next_obs;
            const double dx = tr.next_obs.x - tr.goal.x;
            const double dy = tr.next_obs.y - tr.goal.y;
            const bool success = dx * dx + dy * dy <= success_threshold * success_threshold;
            tr.reward = success ? 0.0 : -1.0;
            tr.done = success;
        }
        batch.push_back(std::move(tr));
    }
    return batch;
}

void VQBuffer::push(const Observation& obs) {
    if (capacity_ == 0) return;
    if (data_.size() < capacity_) {
        data_.push_back(obs);
    } else {
        data_[head_] = obs;
        head_ = (head_ + 1) % capacity_;
    }
}

void VQBuffer::store_episode(const std::vector<Transition>& traj) {
    for (const Transition& t : traj) push(t.obs);
    if (!traj.empty()) push(traj.back().next_obs);
}

std::vector<Vec> VQBuffer::features() const {
    std::vector<Vec> out;
    out.reserve(data_.size());
    for (const Observation& o : data_) out.push_back(o.feature);
    return out;
}

std::vector<Vec> VQBuffer::sample_features(std::size_t n, Rng& rng) const {
    if (data_.empty()) throw std::runtime_error("replay error: sample from empty VQ buffer");
    std::vector<Vec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(data_[rng.uniform_index(data_.size())].feature);
    return out;
}

void VQBuffer::restore(std::vector<Observation> data, std::size_t head) {
    data_ = std::move(data);
    head_ = head;
}

void store_episode(const std::vector<Transition>& traj, RLBuffer& rl, VQBuffer& vq) {
    rl.store_episode(traj);
    vq.store_episode(traj);
}

} // namespace cqm
