#include "cqm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace cqm {

double temporal_distance_from_q(double q, double gamma) {
    // q = -(1 - gamma^n) / (1 - gamma)  =>  n = log_gamma(1 + (1 - gamma) q).
    // Near the floor the argument cancels to rounding noise; anything at or
    // below the saturation guard reads as unreachable.
    constexpr double kSaturation = 1e-5;
    const double floor = -1.0 / (1.0 - gamma);
    q = std::clamp(q, floor, 0.0);
    const double arg = 1.0 + (1.0 - gamma) * q;
    if (arg <= kSaturation) return kUnreachable;
    return std::log(arg) / std::log(gamma);
}

LandmarkDistanceFn q_temporal_distance(const QFunction& graph_q, const MazeEnv& env) {
    const double gamma = graph_q.config().gamma;
    return [&graph_q, &env, gamma](const Landmark& from, const Landmark& to) {
        const Observation o = env.from_feature(from.point);
        const Observation g = env.from_feature(to.point);
        return temporal_distance_from_q(graph_q.max_value(o, g), gamma);
    };
}

std::size_t LandmarkGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& edges : adj_) n += edges.size();
    return n;
}

void LandmarkGraph::check_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= vertices_.size()) {
        throw std::runtime_error("graph error: unknown vertex id " + std::to_string(id));
    }
}

std::vector<double> LandmarkGraph::geodesics_from(int from_id) const {
    check_id(from_id);
    std::vector<double> dist(vertices_.size(), kUnreachable);
    dist[static_cast<std::size_t>(from_id)] = 0.0;
    using Item = std::pair<double, int>; // (distance, id); id breaks ties
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.push({0.0, from_id});
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const GraphEdge& e : adj_[static_cast<std::size_t>(u)]) {
            const double nd = d + e.weight;
            if (nd < dist[static_cast<std::size_t>(e.to)]) {
                dist[static_cast<std::size_t>(e.to)] = nd;
                heap.push({nd, e.to});
            }
        }
    }
    return dist;
}

double LandmarkGraph::geodesic(int from_id, int to_id) const {
    check_id(to_id);
    return geodesics_from(from_id)[static_cast<std::size_t>(to_id)];
}

std::vector<int> LandmarkGraph::shortest_path(int from_id, int to_id) const {
    check_id(from_id);
    check_id(to_id);
    std::vector<double> dist(vertices_.size(), kUnreachable);
    std::vector<int> prev(vertices_.size(), -1);
    dist[static_cast<std::size_t>(from_id)] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.push({0.0, from_id});
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        if (u == to_id) break;
        for (const GraphEdge& e : adj_[static_cast<std::size_t>(u)]) {
            const double nd = d + e.weight;
            if (nd < dist[static_cast<std::size_t>(e.to)]) {
                dist[static_cast<std::size_t>(e.to)] = nd;
                prev[static_cast<std::size_t>(e.to)] = u;
                heap.push({nd, e.to});
            }
        }
    }
    if (!(dist[static_cast<std::size_t>(to_id)] < kUnreachable)) return {};
    std::vector<int> path;
    for (int v = to_id; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

int LandmarkGraph::insert_transient(Landmark lm, const LandmarkDistanceFn& dist, bool ensure_incoming) {
    const int id = static_cast<int>(vertices_.size());
    lm.id = id;
    lm.source_code = -1;
    adj_.emplace_back();
    double best_in = kUnreachable;
    int best_in_from = -1;
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        const double out_w = dist(lm, vertices_[v]);
        if (out_w <= cutoff_) adj_[static_cast<std::size_t>(id)].push_back({static_cast<int>(v), out_w});
        const double in_w = dist(vertices_[v], lm);
        if (in_w <= cutoff_) adj_[v].push_back({id, in_w});
        if (in_w < best_in) {
            best_in = in_w;
            best_in_from = static_cast<int>(v);
        }
    }
    vertices_.push_back(std::move(lm));
    if (ensure_incoming && best_in_from >= 0 && best_in > cutoff_ && best_in < kUnreachable) {
        adj_[static_cast<std::size_t>(best_in_from)].push_back({id, best_in});
    }
    return id;
}

void LandmarkGraph::remove_transients() {
    vertices_.resize(base_size_);
    adj_.resize(base_size_);
    for (auto& edges : adj_) {
        edges.erase(std::remove_if(edges.begin(), edges.end(),
                                   [this](const GraphEdge& e) {
                                       return static_cast<std::size_t>(e.to) >= base_size_;
                                   }),
                    edges.end());
    }
}

int LandmarkGraph::nearest_vertex_latent(const Vec& latent) const {
    int best = -1;
    double best_d = kUnreachable;
    for (std::size_t v = 0; v < base_size_; ++v) {
        const double d = squared_distance(latent, vertices_[v].latent);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(v);
        }
    }
    return best;
}

LandmarkGraph build_graph(std::vector<Landmark> landmarks, const LandmarkDistanceFn& dist, double cutoff,
                          int generation) {
    LandmarkGraph g;
    g.cutoff_ = cutoff;
    g.generation_ = generation;
    g.vertices_ = std::move(landmarks);
    for (std::size_t v = 0; v < g.vertices_.size(); ++v) g.vertices_[v].id = static_cast<int>(v);
    g.adj_.assign(g.vertices_.size(), {});
    for (std::size_t i = 0; i < g.vertices_.size(); ++i) {
        for (std::size_t j = 0; j < g.vertices_.size(); ++j) {
            if (i == j) continue;
            const double w = dist(g.vertices_[i], g.vertices_[j]);
            if (w <= cutoff) g.adj_[i].push_back({static_cast<int>(j), w});
        }
    }
    g.base_size_ = g.vertices_.size();
    return g;
}

void LandmarkGraph::restore(std::vector<Landmark> vertices, std::vector<std::vector<GraphEdge>> adj, double cutoff,
                            int generation) {
    vertices_ = std::move(vertices);
    adj_ = std::move(adj);
    cutoff_ = cutoff;
    generation_ = generation;
    base_size_ = vertices_.size();
}

std::vector<Landmark> sparsify(const std::vector<Landmark>& candidates, int k, const LandmarkDistanceFn& dist) {
    if (k > static_cast<int>(candidates.size())) {
        throw std::runtime_error("sparsify error: requested " + std::to_string(k) + " of " +
                                 std::to_string(candidates.size()) + " candidates");
    }
    std::vector<double> min_dist(candidates.size(), kUnreachable);
    std::vector<char> taken(candidates.size(), 0);
    std::vector<Landmark> selected;
    selected.reserve(static_cast<std::size_t>(k));
    for (int round = 0; round < k; ++round) {
        int far = -1;
        double far_d = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            if (min_dist[i] > far_d) {
                far_d = min_dist[i];
                far = static_cast<int>(i);
            }
        }
        taken[static_cast<std::size_t>(far)] = 1;
        selected.push_back(candidates[static_cast<std::size_t>(far)]);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            min_dist[i] = std::min(min_dist[i], dist(candidates[static_cast<std::size_t>(far)], candidates[i]));
        }
    }
    return selected;
}

std::vector<Landmark> decode_landmarks(const Quantizer& q) {
    std::vector<Landmark> out;
    out.reserve(static_cast<std::size_t>(q.num_codes()));
    for (int j = 0; j < q.num_codes(); ++j) {
        Landmark lm;
        lm.id = j;
        lm.point = q.decode_code(j);
        lm.latent = q.code(j);
        lm.source_code = j;
        out.push_back(std::move(lm));
    }
    return out;
}

namespace {

std::vector<std::vector<int>> group_by_code(const Quantizer& q, const VQBuffer& buf) {
    std::vector<std::vector<int>> members(static_cast<std::size_t>(q.num_codes()));
    for (std::size_t i = 0; i < buf.size(); ++i) {
        members[q.nearest_code(q.encode(buf.at(i).feature))].push_back(static_cast<int>(i));
    }
    return members;
}

} // namespace

std::vector<Landmark> landmarks_from_buffer(const Quantizer& q, const VQBuffer& buf, bool raw_representatives,
                                            Rng& rng) {
    if (buf.size() == 0) throw std::runtime_error("landmarks error: empty observation buffer");
    const auto members = group_by_code(q, buf);
    std::vector<Landmark> out;
    for (int j = 0; j < q.num_codes(); ++j) {
        if (members[static_cast<std::size_t>(j)].empty()) continue;
        Landmark lm;
        lm.id = static_cast<int>(out.size());
        lm.source_code = j;
        if (raw_representatives) {
            const auto& m = members[static_cast<std::size_t>(j)];
            lm.point = buf.at(static_cast<std::size_t>(m[rng.uniform_index(m.size())])).feature;
            lm.latent = q.encode(lm.point);
        } else {
            lm.point = q.decode_code(j);
            lm.latent = q.code(j);
        }
        out.push_back(std::move(lm));
    }
    return out;
}

std::vector<Landmark> filter_assigned_landmarks(std::vector<Landmark> landmarks, const Quantizer& q,
                                                const VQBuffer& buf) {
    std::vector<char> assigned(static_cast<std::size_t>(q.num_codes()), 0);
    for (std::size_t i = 0; i < buf.size(); ++i) assigned[q.nearest_code(q.encode(buf.at(i).feature))] = 1;
    std::vector<Landmark> out;
    out.reserve(landmarks.size());
    for (Landmark& lm : landmarks) {
        if (lm.source_code >= 0 && !assigned[static_cast<std::size_t>(lm.source_code)]) continue;
        lm.id = static_cast<int>(out.size());
        out.push_back(std::move(lm));
    }
    return out;
}

} // namespace cqm
