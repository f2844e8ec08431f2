#include "cqm/planner.hpp"

#include <cmath>

namespace cqm {

Plan direct_plan(const CurriculumGoal& goal, const MazeEnv& env) {
    Plan plan;
    plan.direct = true;
    plan.waypoints.push_back(env.from_feature(goal.point));
    plan.budgets.push_back(env.config().horizon);
    return plan;
}

Plan make_plan(LandmarkGraph& graph, const Observation& start, const CurriculumGoal& goal, const Quantizer& quantizer,
               const LandmarkDistanceFn& dist, const MazeEnv& env) {
    if (graph.base_vertex_count() == 0) return direct_plan(goal, env);

    Landmark start_lm;
    start_lm.point = start.feature;
    start_lm.latent = quantizer.encode(start.feature);
    const int sid = graph.insert_transient(std::move(start_lm), dist);

    Landmark goal_lm;
    goal_lm.point = goal.point;
    goal_lm.latent = quantizer.encode(goal.point);
    // The goal may be a noised point off every vertex; keep it addressable
    // through its nearest incoming landmark even above the cutoff.
    const int gid = graph.insert_transient(std::move(goal_lm), dist, /*ensure_incoming=*/true);

    const std::vector<int> path = graph.shortest_path(sid, gid);
    Plan plan;
    if (path.size() < 2) {
        graph.remove_transients();
        return direct_plan(goal, env);
    }
    for (std::size_t i = 1; i < path.size(); ++i) {
        const Landmark& prev = graph.vertex(path[i - 1]);
        const Landmark& cur = graph.vertex(path[i]);
        double w = kUnreachable;
        for (const GraphEdge& e : graph.adjacency()[static_cast<std::size_t>(path[i - 1])]) {
            if (e.to == path[i]) {
                w = std::min(w, e.weight);
            }
        }
        (void)prev;
        plan.waypoints.push_back(env.from_feature(cur.point));
        plan.budgets.push_back(std::max(1, static_cast<int>(std::ceil(w))));
        plan.planned_cost += w;
    }
    graph.remove_transients();
    return plan;
}

const Observation& advance(Plan& plan, const Observation& obs, int steps_on_current, const MazeEnv& env) {
    const int last = static_cast<int>(plan.waypoints.size()) - 1;
    if (plan.cursor > last) return plan.waypoints[static_cast<std::size_t>(last)];
    const Observation& current = plan.waypoints[static_cast<std::size_t>(plan.cursor)];
    if (env.reached(obs, current) || steps_on_current > plan.budgets[static_cast<std::size_t>(plan.cursor)]) {
        ++plan.cursor;
    }
    const int idx = std::min(plan.cursor, last);
    return plan.waypoints[static_cast<std::size_t>(idx)];
}

} // namespace cqm
