#pragma once

#include "mms/model.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace mms {

// Deterministic across platforms: raw mt19937_64 output with modulo mapping.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    // Uniform-ish integer in [lo, hi].
    long range(long lo, long hi) { return lo + static_cast<long>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    bool chance(int percent) { return range(0, 99) < percent; }

private:
    std::mt19937_64 eng_;
};

struct Instance {
    System sys;
    Rational t_max;
};

// Profiles:
//   1d-small  |M| <= 4, every rational has denominator <= 8
//   1d-grid   slopes in {-2,-1,1,2} plus optional zero-modes, box [0,H] with H in {2,4},
//             integer start and costs, integer t_max (<= 5 for H = 2, <= 8 for H = 4)
//   2d-small  slopes in {-1,0,1}^2, integer box and start, integer costs, t_max in 1..4
Instance generate(const std::string& profile, std::uint64_t seed);
bool known_profile(const std::string& profile);

// A random safe schedule of the given length for a one-dimensional system;
// many actions end exactly on a border.
Schedule random_safe_schedule(const System& sys, Rng& rng, std::size_t length);

// The worked normalization example: twelve actions, one mode per segment,
// horizon 18 and box [0, 9/2].
Instance worked_example_instance(Schedule& schedule);

// The two-dimensional system with slopes (1,1), (1,-1), (-1,1) from v_0 = (0,0) in [0,1]^2.
System example1_system();

}  // namespace mms
