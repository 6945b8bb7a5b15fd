#pragma once

#include "mms/io.hpp"
#include "mms/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mms {

// M* = levels[0] ⊂ levels[1] ⊂ ... ; the last level is the fixpoint.
struct ModeLadder {
    std::vector<std::vector<std::string>> levels;
};

struct EasyTarget {
    Vec v_end;
    std::vector<std::size_t> border_coords;  // 0-based coordinates forced onto a border
    Rational clearance;
};

// Ladder of modes usable from `start`; a mode joins a level once it is safe
// at some state reachable through the previous levels.
ModeLadder build_ladder(const System& sys, const Vec& start);

// Drops every mode outside the fixpoint of the ladder built from v_0.
std::pair<System, ModeLadder> prune_unsafe_modes(const System& sys);

// Drops every mode that cannot run for positive time in a level-wise safe
// lumped run of total length t_max.
System prune_by_horizon(const System& sys, const Rational& t_max);

// nullopt: no horizon-t_max endpoint exists.
std::optional<EasyTarget> find_easy_target(const System& sys, const Rational& t_max);

// Limit-safe abstract schedule from `from` to `to` with horizon `horizon`,
// built level by level with round-robin interleaving. Needs every mode safe
// at `from` to be safe at `to`.
std::optional<AbstractSchedule> reach_limit_safe(const System& sys, const Vec& from, const Vec& to,
                                                 const Rational& horizon);

struct LimitSafeResult {
    AbstractSchedule schedule;
    Rational cost;
    ModeLadder ladder;
    std::optional<EasyTarget> target;
    // Halves of the construction: forward from v_0, backward from v_end in the
    // negated system. Empty when the construction found nothing.
    std::optional<AbstractSchedule> forward, backward;
    bool construction_found = false;
    bool from_construction = false;  // false: the single-lump optimum was cheaper
};

std::optional<LimitSafeResult> limit_safe_schedule(const System& sys, const Rational& t_max);

// All switch costs must be zero. Round-robin schedule of minimal continuous cost.
std::optional<Schedule> optimal_reach(const System& sys, const Vec& from, const Vec& to, const Rational& t_bound);

struct OptimalLimitSafe {
    AbstractSchedule schedule;
    Rational cost;
    std::size_t sequences = 0;  // mode sequences tried
};

// Exact optimum over abstract schedules with at most max_switches concrete
// actions outside M*.
std::optional<OptimalLimitSafe> optimal_limit_safe(const System& sys, const Rational& t_max, int max_switches);

// eps / (action count * largest slope norm); zero when nothing moves.
Rational rounding_step(const System& sys, const Schedule& s, const Rational& eps);
Schedule round_to_space(const System& sys, const Schedule& s, const Rational& eps);

System negated(const System& sys);
AbstractSchedule reversed(const AbstractSchedule& s);

json ladder_to_json(const ModeLadder& l);
json report_json(const std::optional<LimitSafeResult>& r, double wall_ms);
json report_json(const std::optional<OptimalLimitSafe>& r, int max_switches, double wall_ms);

}  // namespace mms
