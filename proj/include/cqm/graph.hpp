#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "cqm/maze.hpp"
#include "cqm/qlearn.hpp"
#include "cqm/quantizer.hpp"
#include "cqm/replay.hpp"
#include "cqm/rng.hpp"

namespace cqm {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Inverts the discounted 0/-1 return into step counts. Values whose implied
// distance exceeds ~1100 steps collapse numerically and count as unreachable.
double temporal_distance_from_q(double q, double gamma);

struct Landmark {
    int id = 0;
    Vec point;            // observation-space point
    Vec latent;           // encoded point; equals the code vector for codes
    int source_code = -1; // codebook index, -1 for transient vertices
};

using LandmarkDistanceFn = std::function<double(const Landmark&, const Landmark&)>;

// Directed steps estimate between two landmarks from the graph critic's
// greedy action value.
LandmarkDistanceFn q_temporal_distance(const QFunction& graph_q, const MazeEnv& env);

struct GraphEdge {
    int to = 0;
    double weight = 0.0;
};

// Directed landmark graph; edge weights are temporal distances at or below
// the cutoff. Immutable between rebuilds except for transient vertices,
// which restore on removal.
class LandmarkGraph {
public:
    LandmarkGraph() = default;

    int generation() const { return generation_; }
    double cutoff() const { return cutoff_; }
    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t base_vertex_count() const { return base_size_; }
    std::size_t edge_count() const;
    const std::vector<Landmark>& vertices() const { return vertices_; }
    const Landmark& vertex(int id) const { return vertices_[static_cast<std::size_t>(id)]; }
    const std::vector<std::vector<GraphEdge>>& adjacency() const { return adj_; }

    double geodesic(int from_id, int to_id) const;
    // Vertex ids from source to target inclusive; empty when unreachable.
    std::vector<int> shortest_path(int from_id, int to_id) const;
    // Geodesic distance from one source to every vertex.
    std::vector<double> geodesics_from(int from_id) const;

    // Adds a temporary vertex connected (both directions) wherever the
    // distance passes the cutoff. ensure_incoming attaches the closest
    // finite incoming edge even above the cutoff, so goal vertices stay
    // addressable.
    int insert_transient(Landmark lm, const LandmarkDistanceFn& dist, bool ensure_incoming = false);
    void remove_transients();

    // Nearest base vertex to a latent point; -1 on an empty graph.
    int nearest_vertex_latent(const Vec& latent) const;

    friend LandmarkGraph build_graph(std::vector<Landmark> landmarks, const LandmarkDistanceFn& dist, double cutoff,
                                     int generation);
    void restore(std::vector<Landmark> vertices, std::vector<std::vector<GraphEdge>> adj, double cutoff,
                 int generation);

private:
    void check_id(int id) const;

    std::vector<Landmark> vertices_;
    std::vector<std::vector<GraphEdge>> adj_;
    double cutoff_ = 0.0;
    int generation_ = 0;
    std::size_t base_size_ = 0;
};

// Evaluates all ordered pairs and keeps edges with distance <= cutoff.
LandmarkGraph build_graph(std::vector<Landmark> landmarks, const LandmarkDistanceFn& dist, double cutoff,
                          int generation);

// Greedy farthest-point selection (running element-wise minimum of the
// distance to the selected set, argmax with lowest-index ties). Throws when
// k exceeds the candidate count.
std::vector<Landmark> sparsify(const std::vector<Landmark>& candidates, int k, const LandmarkDistanceFn& dist);

// One landmark per codebook entry, decoded.
std::vector<Landmark> decode_landmarks(const Quantizer& q);

// One representative per code with at least one assigned buffered
// observation: the decoded code, or with raw_representatives a uniformly
// chosen raw observation assigned to it.
std::vector<Landmark> landmarks_from_buffer(const Quantizer& q, const VQBuffer& buf, bool raw_representatives,
                                            Rng& rng);

// Drops landmarks whose code received no assignment from the buffer.
std::vector<Landmark> filter_assigned_landmarks(std::vector<Landmark> landmarks, const Quantizer& q,
                                                const VQBuffer& buf);

} // namespace cqm
