#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqm/rng.hpp"
#include "cqm/vecmath.hpp"

namespace cqm {

enum class Cell : std::uint8_t { Wall, Free };

// cx is the column, cy the row; row 0 is the first map line.
struct CellRef {
    int cx = 0;
    int cy = 0;
};

struct MazeMap {
    int width = 0;
    int height = 0;
    double cell_size = 1.0;
    std::vector<Cell> grid; // row-major
    std::vector<CellRef> start_region;
    std::vector<std::vector<CellRef>> final_goal_regions;
    std::string source_text;

    Cell at(int cx, int cy) const {
        if (cx < 0 || cy < 0 || cx >= width || cy >= height) return Cell::Wall;
        return grid[static_cast<std::size_t>(cy) * width + cx];
    }
    bool free_at(int cx, int cy) const { return at(cx, cy) == Cell::Free; }
    int cell_index(int cx, int cy) const { return cy * width + cx; }
    int n_cells() const { return width * height; }
    double span_x() const { return width * cell_size; }
    double span_y() const { return height * cell_size; }
    double center_x(int cx) const { return (cx + 0.5) * cell_size; }
    double center_y(int cy) const { return (cy + 0.5) * cell_size; }
    int cell_x_at(double x) const;
    int cell_y_at(double y) const;
    int free_cell_count() const;
};

// Map text format: '#' wall, '.' free, 'S' start cell, 'G' goal cell,
// digits '1'..'9' numbered goal regions (each digit forms one region).
// 'S', 'G' and digit cells are free. Throws std::runtime_error on unknown
// characters, a missing start region, no goal region, or any goal region
// not reachable from the start region (4-connected flood fill).
MazeMap load_maze_text(const std::string& text, double cell_size = 1.0);
MazeMap load_maze_file(const std::string& path, double cell_size = 1.0);

enum class ObsMode { State, HighDim };

struct Observation {
    double x = 0.0, y = 0.0;   // position, length units
    double vx = 0.0, vy = 0.0; // displacement of the previous step
    Vec feature;               // mode-dependent encoding
};

// Encodes kinematic state into the observation feature vector, and reads
// positions back out of arbitrary feature-space points (decoded landmarks,
// relabeled goals). Owns copies of the map data it needs, so it stays valid
// independently of any environment instance.
class FeatureCodec {
public:
    FeatureCodec() = default;
    FeatureCodec(const MazeMap& map, ObsMode mode, int patch_window = 8);

    ObsMode mode() const { return mode_; }
    int dim() const { return dim_; }
    int n_cells() const { return width_ * height_; }

    Vec encode(double x, double y, double vx, double vy) const;
    void position_of(const Vec& feature, double* x, double* y) const;
    int cell_of_position(double x, double y) const;
    int cell_of(const Vec& feature) const;
    // Adds (dx, dy) to the position components of a feature-space point.
    void shift_position(Vec& feature, double dx, double dy) const;

private:
    ObsMode mode_ = ObsMode::State;
    int width_ = 0, height_ = 0;
    double cell_size_ = 1.0;
    int patch_window_ = 8;
    int dim_ = 4;
    std::vector<Cell> grid_;
};

inline constexpr int kNumActions = 8;

// Unit direction of each action; action 0 is +x, indices advance
// counter-clockwise in 45 degree steps.
void action_direction(int action, double* dx, double* dy);

struct EnvConfig {
    int horizon = 150;
    double success_threshold = 0.5;
    double action_step = 1.0; // must be <= cell_size
    ObsMode mode = ObsMode::State;
    int patch_window = 8;
};

struct StepResult {
    Observation obs;
    double reward = -1.0;
    bool success = false;
};

// Kinematic point maze. Instances are immutable after construction; all
// dynamics are pure functions of (observation, action), so environments can
// be shared or replicated freely, each call site owning its own RNG.
class MazeEnv {
public:
    MazeEnv(MazeMap map, EnvConfig cfg);

    const MazeMap& map() const { return map_; }
    const FeatureCodec& codec() const { return codec_; }
    const EnvConfig& config() const { return cfg_; }

    // Uniform over start cells, placed at the cell center, zero velocity.
    Observation reset(Rng& rng) const;

    // One displacement step with wall clamping. reward is 0 iff the new
    // position is within success_threshold of the goal position, else -1.
    // The episode horizon is tracked by the caller.
    StepResult step(const Observation& obs, int action, const Observation& goal) const;

    // Uniformly chosen goal region, then a uniform cell of it (center).
    Observation sample_final_goal(Rng& rng) const;

    Observation observation_at(double x, double y, double vx = 0.0, double vy = 0.0) const;
    // Reconstructs an observation-as-goal from a feature-space point.
    Observation from_feature(const Vec& feature) const;

    double goal_distance(const Observation& obs, const Observation& goal) const;
    bool reached(const Observation& obs, const Observation& goal) const;

    // Center of mass of the start region; the curriculum's notion of the
    // initial state.
    Observation mean_reset_observation() const;

private:
    MazeMap map_;
    EnvConfig cfg_;
    FeatureCodec codec_;
};

} // namespace cqm
