#include "cqm/maze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cqm {

int MazeMap::cell_x_at(double x) const {
    int cx = static_cast<int>(std::floor(x / cell_size));
    return std::clamp(cx, 0, width - 1);
}

int MazeMap::cell_y_at(double y) const {
    int cy = static_cast<int>(std::floor(y / cell_size));
    return std::clamp(cy, 0, height - 1);
}

int MazeMap::free_cell_count() const {
    int n = 0;
    for (Cell c : grid) n += (c == Cell::Free);
    return n;
}

namespace {

std::vector<char> flood_reachable(const MazeMap& map, const std::vector<CellRef>& seeds) {
    std::vector<char> seen(static_cast<std::size_t>(map.n_cells()), 0);
    std::deque<CellRef> frontier;
    for (const CellRef& c : seeds) {
        seen[map.cell_index(c.cx, c.cy)] = 1;
        frontier.push_back(c);
    }
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!frontier.empty()) {
        CellRef c = frontier.front();
        frontier.pop_front();
        for (int d = 0; d < 4; ++d) {
            const int nx = c.cx + dx[d];
            const int ny = c.cy + dy[d];
            if (!map.free_at(nx, ny)) continue;
            char& s = seen[map.cell_index(nx, ny)];
            if (s) continue;
            s = 1;
            frontier.push_back({nx, ny});
        }
    }
    return seen;
}

} // namespace

MazeMap load_maze_text(const std::string& text, double cell_size) {
    std::vector<std::string> rows;
    {
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (!line.empty()) rows.push_back(line);
        }
    }
    if (rows.empty()) throw std::runtime_error("maze parse error: empty map");

    MazeMap map;
    map.height = static_cast<int>(rows.size());
    map.width = 0;
    for (const std::string& r : rows) map.width = std::max(map.width, static_cast<int>(r.size()));
    map.cell_size = cell_size;
    map.grid.assign(static_cast<std::size_t>(map.width) * map.height, Cell::Wall);
    map.source_text = text;

    std::map<char, std::vector<CellRef>> digit_regions;
    std::vector<CellRef> g_region;
    for (int cy = 0; cy < map.height; ++cy) {
        const std::string& row = rows[cy];
        for (int cx = 0; cx < map.width; ++cx) {
            const char ch = cx < static_cast<int>(row.size()) ? row[cx] : '#';
            switch (ch) {
            case '#':
                break;
            case '.':
                map.grid[map.cell_index(cx, cy)] = Cell::Free;
                break;
            case 'S':
                map.grid[map.cell_index(cx, cy)] = Cell::Free;
                map.start_region.push_back({cx, cy});
                break;
            case 'G':
                map.grid[map.cell_index(cx, cy)] = Cell::Free;
                g_region.push_back({cx, cy});
                break;
            default:
                if (ch >= '1' && ch <= '9') {
                    map.grid[map.cell_index(cx, cy)] = Cell::Free;
                    digit_regions[ch].push_back({cx, cy});
                } else {
                    throw std::runtime_error(std::string("maze parse error: unknown character '") + ch + "' at row " +
                                             std::to_string(cy) + ", column " + std::to_string(cx));
                }
            }
        }
    }

    if (!g_region.empty()) map.final_goal_regions.push_back(std::move(g_region));
    for (auto& [ch, region] : digit_regions) map.final_goal_regions.push_back(std::move(region));

    if (map.start_region.empty()) throw std::runtime_error("maze validation error: no start cell ('S')");
    if (map.final_goal_regions.empty()) throw std::runtime_error("maze validation error: no goal region ('G' or digit)");

    const std::vector<char> reachable = flood_reachable(map, map.start_region);
    for (std::size_t r = 0; r < map.final_goal_regions.size(); ++r) {
        for (const CellRef& c : map.final_goal_regions[r]) {
            if (!reachable[map.cell_index(c.cx, c.cy)]) {
                throw std::runtime_error("maze validation error: goal region " + std::to_string(r) +
                                         " unreachable from start (cell " + std::to_string(c.cx) + "," +
                                         std::to_string(c.cy) + ")");
            }
        }
    }
    return map;
}

MazeMap load_maze_file(const std::string& path, double cell_size) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("maze load error: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_maze_text(buf.str(), cell_size);
}

FeatureCodec::FeatureCodec(const MazeMap& map, ObsMode mode, int patch_window)
    : mode_(mode), width_(map.width), height_(map.height), cell_size_(map.cell_size), patch_window_(patch_window),
      grid_(map.grid) {
    dim_ = mode_ == ObsMode::State ? 4 : patch_window_ * patch_window_ + 2;
}

Vec FeatureCodec::encode(double x, double y, double vx, double vy) const {
    if (mode_ == ObsMode::State) return Vec{x, y, vx, vy};

    Vec f(static_cast<std::size_t>(dim_), 0.0);
    const int cx = std::clamp(static_cast<int>(std::floor(x / cell_size_)), 0, width_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(y / cell_size_)), 0, height_ - 1);
    const int lo = patch_window_ / 2 - 1; // 8 -> cells [c-3, c+4]
    int k = 0;
    for (int oy = -lo; oy < patch_window_ - lo; ++oy) {
        for (int ox = -lo; ox < patch_window_ - lo; ++ox) {
            const int gx = cx + ox;
            const int gy = cy + oy;
            const bool wall = gx < 0 || gy < 0 || gx >= width_ || gy >= height_ ||
                              grid_[static_cast<std::size_t>(gy) * width_ + gx] == Cell::Wall;
            f[k++] = wall ? 1.0 : 0.0;
        }
    }
    f[k++] = x / (width_ * cell_size_);
    f[k++] = y / (height_ * cell_size_);
    return f;
}

void FeatureCodec::position_of(const Vec& feature, double* x, double* y) const {
    if (mode_ == ObsMode::State) {
        *x = feature[0];
        *y = feature[1];
    } else {
        const std::size_t base = static_cast<std::size_t>(dim_) - 2;
        *x = feature[base] * (width_ * cell_size_);
        *y = feature[base + 1] * (height_ * cell_size_);
    }
}

int FeatureCodec::cell_of_position(double x, double y) const {
    const int cx = std::clamp(static_cast<int>(std::floor(x / cell_size_)), 0, width_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(y / cell_size_)), 0, height_ - 1);
    return cy * width_ + cx;
}

int FeatureCodec::cell_of(const Vec& feature) const {
    double x = 0.0, y = 0.0;
    position_of(feature, &x, &y);
    return cell_of_position(x, y);
}

void FeatureCodec::shift_position(Vec& feature, double dx, double dy) const {
    if (mode_ == ObsMode::State) {
        feature[0] += dx;
        feature[1] += dy;
    } else {
        const std::size_t base = static_cast<std::size_t>(dim_) - 2;
        feature[base] += dx / (width_ * cell_size_);
        feature[base + 1] += dy / (height_ * cell_size_);
    }
}

void action_direction(int action, double* dx, double* dy) {
    static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
    static const double table[kNumActions][2] = {
        {1.0, 0.0},        {kInvSqrt2, kInvSqrt2},   {0.0, 1.0},  {-kInvSqrt2, kInvSqrt2},
        {-1.0, 0.0},       {-kInvSqrt2, -kInvSqrt2}, {0.0, -1.0}, {kInvSqrt2, -kInvSqrt2},
    };
    *dx = table[action][0];
    *dy = table[action][1];
}

MazeEnv::MazeEnv(MazeMap map, EnvConfig cfg) : map_(std::move(map)), cfg_(cfg) {
    if (cfg_.action_step > map_.cell_size) {
        throw std::runtime_error("env config error: action_step must not exceed cell_size");
    }
    codec_ = FeatureCodec(map_, cfg_.mode, cfg_.patch_window);
}

Observation MazeEnv::observation_at(double x, double y, double vx, double vy) const {
    Observation o;
    o.x = x;
    o.y = y;
    o.vx = vx;
    o.vy = vy;
    o.feature = codec_.encode(x, y, vx, vy);
    return o;
}

Observation MazeEnv::reset(Rng& rng) const {
    const CellRef c = map_.start_region[rng.uniform_index(map_.start_region.size())];
    return observation_at(map_.center_x(c.cx), map_.center_y(c.cy));
}

namespace {
// A half-open wall boundary would put the agent exactly on the wall cell;
// back off by a hair so positions always lie strictly inside free cells.
constexpr double kWallMargin = 1e-9;
} // namespace

StepResult MazeEnv::step(const Observation& obs, int action, const Observation& goal) const {
    double dx = 0.0, dy = 0.0;
    action_direction(action, &dx, &dy);
    dx *= cfg_.action_step;
    dy *= cfg_.action_step;

    const double cs = map_.cell_size;
    double nx = obs.x + dx;
    double ny = obs.y;
    // Axis-separated moves: with action_step <= cell_size each axis crosses
    // at most one cell boundary, so a single clamp per axis suffices.
    {
        const int target = static_cast<int>(std::floor(nx / cs));
        if (!map_.free_at(target, map_.cell_y_at(ny))) {
            if (dx > 0) nx = target * cs - kWallMargin;
            else if (dx < 0) nx = (target + 1) * cs + kWallMargin;
        }
    }
    ny = obs.y + dy;
    {
        const int target = static_cast<int>(std::floor(ny / cs));
        if (!map_.free_at(map_.cell_x_at(nx), target)) {
            if (dy > 0) ny = target * cs - kWallMargin;
            else if (dy < 0) ny = (target + 1) * cs + kWallMargin;
        }
    }

    StepResult r;
    r.obs = observation_at(nx, ny, nx - obs.x, ny - obs.y);
    r.success = reached(r.obs, goal);
    r.reward = r.success ? 0.0 : -1.0;
    return r;
}

Observation MazeEnv::sample_final_goal(Rng& rng) const {
    const auto& regions = map_.final_goal_regions;
    const auto& region = regions[rng.uniform_index(regions.size())];
    const CellRef c = region[rng.uniform_index(region.size())];
    return observation_at(map_.center_x(c.cx), map_.center_y(c.cy));
}

Observation MazeEnv::from_feature(const Vec& feature) const {
    double x = 0.0, y = 0.0;
    codec_.position_of(feature, &x, &y);
    Observation o;
    o.x = x;
    o.y = y;
    o.feature = feature;
    return o;
}

double MazeEnv::goal_distance(const Observation& obs, const Observation& goal) const {
    const double dx = obs.x - goal.x;
    const double dy = obs.y - goal.y;
    return std::sqrt(dx * dx + dy * dy);
}

bool MazeEnv::reached(const Observation& obs, const Observation& goal) const {
    return goal_distance(obs, goal) <= cfg_.success_threshold;
}

Observation MazeEnv::mean_reset_observation() const {
    double sx = 0.0, sy = 0.0;
    for (const CellRef& c : map_.start_region) {
        sx += map_.center_x(c.cx);
        sy += map_.center_y(c.cy);
    }
    const double n = static_cast<double>(map_.start_region.size());
    return observation_at(sx / n, sy / n);
}

} // namespace cqm
