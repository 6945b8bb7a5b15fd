#pragma once

#include "mms/io.hpp"
#include "mms/model.hpp"
#include "mms/transform.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mms {

// Thrown when the exact leap DP would need a grid larger than the configured bound.
struct DeskScaleExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfiniteSolution {
    Rational average_cost;
    Schedule schedule;  // INFINITE_TAIL or PERIODIC witness
};

struct FiniteSolution {
    Rational cost;
    Schedule schedule;
    // "e/b" style catalog name, "SHORT" for length <= 2, "no-floor" for
    // up, partial down, up from an interior start.
    std::string pattern;
    std::map<std::string, long> leap_counts;  // keyed "up/down"
    std::size_t candidates_examined = 0;
};

std::optional<InfiniteSolution> solve_infinite(const System& sys);

// All results below are nullopt when no safe schedule of horizon t_max exists.
std::optional<FiniteSolution> solve_len_le2(const System& sys, const Rational& t_max);

// Default bound on the number of grid points of the leap DP; MMS_GRID_LIMIT overrides.
inline constexpr long kDefaultGridLimit = 2000000;
long grid_limit();

std::optional<FiniteSolution> solve_exact(const System& sys, const Rational& t_max);
std::optional<FiniteSolution> approx3(const System& sys, const Rational& t_max);
std::optional<FiniteSolution> fptas(const System& sys, const Rational& t_max, const Rational& rho);

struct KnapsackItem {
    Rational volume, value;
    std::string tag;
};

struct KnapsackInstance {
    std::vector<KnapsackItem> items;
    Rational capacity;
};

// Indices of the chosen items, ascending. Value-scaling scheme with a sparse
// Pareto table; total value >= (1 - rho) * optimum.
std::vector<std::size_t> knapsack_fptas(const KnapsackInstance& inst, const Rational& rho);

json report_json(const std::string& solver, const std::optional<FiniteSolution>& sol, double wall_ms);
json report_json(const std::optional<InfiniteSolution>& sol, double wall_ms);

}  // namespace mms
