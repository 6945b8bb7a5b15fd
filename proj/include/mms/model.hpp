#pragma once

#include "mms/rational.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mms {

struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Mode {
    std::string id;
    Vec slope;
    Rational cost_rate;    // paid per unit of time
    Rational switch_cost;  // paid once per activation
};

struct System {
    int dimension = 0;
    Vec v_min, v_max, v_0;
    std::vector<Mode> modes;

    // Throws ModelError for an unknown id.
    const Mode& mode(const std::string& id) const;
    std::optional<std::size_t> index_of(const std::string& id) const;

    bool is_star(const std::string& id) const { return mode(id).switch_cost == 0; }
    bool is_zero(const std::string& id) const;

    std::vector<std::string> star_modes() const;
    std::vector<std::string> zero_modes() const;
};

struct TimedAction {
    std::string mode;
    Rational duration;
    bool infinite = false;  // only legal as the last action of an INFINITE_TAIL schedule
};

enum class HorizonKind { FINITE, INFINITE_TAIL, PERIODIC };

struct Schedule {
    std::vector<TimedAction> actions;
    HorizonKind kind = HorizonKind::FINITE;
    std::size_t prefix_len = 0;  // PERIODIC: actions[prefix_len..] repeat forever

    // Sum of the finite durations; equals t_max for FINITE schedules.
    Rational horizon() const;
    std::size_t size() const { return actions.size(); }
};

// Either a lump of time over zero-switch-cost modes or one concrete action.
struct AbstractStep {
    bool abstract = true;
    std::map<std::string, Rational> times;
    TimedAction action;

    Rational duration() const;
};

struct AbstractSchedule {
    std::vector<AbstractStep> steps;

    Rational horizon() const;
};

struct Run {
    std::vector<Vec> states;
    bool safe = true;
    Rational eps_safe_margin = 0;  // worst excursion outside the box, 0 when safe
    long first_violation = -1;     // index of the first unsafe state
};

// Empty result means the system is well formed.
std::vector<std::string> validate_system(const System& sys);
void require_valid(const System& sys);

Run run_of(const System& sys, const Schedule& s);
Run run_of(const System& sys, const AbstractSchedule& s);

bool in_box(const System& sys, const Vec& v);
bool is_safe(const System& sys, const Schedule& s);
bool is_safe(const System& sys, const AbstractSchedule& s);
// Strict inequalities: v_min - eps < V_i < v_max + eps.
bool is_eps_safe(const System& sys, const Schedule& s, const Rational& eps);

Rational total_cost(const System& sys, const Schedule& s);
Rational total_cost(const System& sys, const AbstractSchedule& s);
Rational average_cost(const System& sys, const Schedule& s);

Schedule drop_zero_actions(const Schedule& s);
Schedule make_angular(const System& sys, const Schedule& s);
Schedule hoist_zero_modes(const System& sys, const Schedule& s);

// Smallest l with l > t_star * max_norm / eps.
mpz_class interleave_count(const Rational& t_star, const Rational& max_norm, const Rational& eps);
Schedule concretize(const System& sys, const AbstractSchedule& tau, const Rational& eps);

Schedule finite_schedule(std::vector<TimedAction> actions);

}  // namespace mms
