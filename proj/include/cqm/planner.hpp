#pragma once

#include <vector>

#include "cqm/curriculum.hpp"
#include "cqm/graph.hpp"
#include "cqm/maze.hpp"

namespace cqm {

// Waypoint sequence for one episode. Budgets are the rounded-up temporal
// distances from the previous waypoint; the cursor only moves forward.
struct Plan {
    std::vector<Observation> waypoints; // last entry is the goal point
    std::vector<int> budgets;
    int cursor = 0;
    double planned_cost = 0.0; // geodesic between the transient endpoints
    bool direct = false;       // disconnection fallback: pursue the goal directly

    const Observation& final_goal() const { return waypoints.back(); }
    bool exhausted() const { return cursor >= static_cast<int>(waypoints.size()); }
};

// Inserts transient vertices for the start observation and the goal point,
// runs the shortest path between them, and converts it into waypoints with
// step budgets. Falls back to a single-waypoint direct plan when the two
// ends are not connected. The graph is restored before returning.
Plan make_plan(LandmarkGraph& graph, const Observation& start, const CurriculumGoal& goal, const Quantizer& quantizer,
               const LandmarkDistanceFn& dist, const MazeEnv& env);

// Single-waypoint plan pursuing the goal for the whole horizon.
Plan direct_plan(const CurriculumGoal& goal, const MazeEnv& env);

// Advances the cursor when the observation reaches the current waypoint or
// its budget is spent, and returns the current target (the final goal once
// the plan is exhausted).
const Observation& advance(Plan& plan, const Observation& obs, int steps_on_current, const MazeEnv& env);

} // namespace cqm
