#pragma once

#include "mms/rational.hpp"

#include <map>
#include <string>
#include <vector>

namespace mms {

enum class Rel { LE, EQ, GE, LT, GT };

struct Constraint {
    Vec coeffs;  // one entry per variable
    Rel rel;
    Rational rhs;
};

// Variables are nonnegative unless flagged free. The objective is minimised;
// an all-zero objective is a plain feasibility question.
struct LpProblem {
    std::vector<std::string> variables;
    std::vector<bool> free;
    Vec objective;
    std::vector<Constraint> constraints;

    std::size_t add_var(const std::string& name, bool is_free = false);
    std::size_t size() const { return variables.size(); }
    // Sparse helper: unspecified coefficients are zero.
    void add(const std::map<std::size_t, Rational>& terms, Rel rel, const Rational& rhs);
    void set_objective(const std::map<std::size_t, Rational>& terms);
    bool has_strict() const;
};

enum class LpStatus { OPTIMAL, INFEASIBLE, UNBOUNDED };

struct LpSolution {
    LpStatus status = LpStatus::INFEASIBLE;
    Vec assignment;
    Rational objective_value = 0;
    Rational slack = 0;  // strict-feasibility margin, when applicable
    std::size_t pivots = 0;
};

struct LpOptions {
    int verbosity = 0;  // > 0 dumps the problem and pivots to stderr
};

// Two-phase simplex with Bland's rule; rejects strict relations.
LpSolution solve(const LpProblem& p, const LpOptions& opt = {});

// Maximises a common margin s <= 1 on every strict row; feasible iff s > 0.
LpSolution solve_strict_feasibility(const LpProblem& p, const LpOptions& opt = {});

bool satisfies(const LpProblem& p, const Vec& x);
std::string dump(const LpProblem& p);
const char* to_string(LpStatus s);

}  // namespace mms
