#include "cqm/rng.hpp"

#include <cmath>
#include <sstream>

namespace cqm {

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
}

double Rng::normal() {
    // u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string Rng::state_string() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
}

void Rng::set_state_string(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag0, std::uint64_t tag1) {
    return splitmix64(splitmix64(seed ^ tag0) + tag1);
}

} // namespace cqm
