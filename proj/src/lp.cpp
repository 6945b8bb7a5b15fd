#include "mms/lp.hpp"

#include <iostream>
#include <sstream>
#include <stdexcept>

namespace mms {

std::size_t LpProblem::add_var(const std::string& name, bool is_free) {
    variables.push_back(name);
    free.resize(variables.size() - 1, false);
    free.push_back(is_free);
    objective.resize(variables.size(), Rational(0));
    for (auto& c : constraints) c.coeffs.resize(variables.size(), Rational(0));
    return variables.size() - 1;
}

void LpProblem::add(const std::map<std::size_t, Rational>& terms, Rel rel, const Rational& rhs) {
    Constraint c{Vec(variables.size(), Rational(0)), rel, rhs};
    for (const auto& [j, a] : terms) {
        if (j >= variables.size()) throw std::invalid_argument("constraint references unknown variable");
        c.coeffs[j] += a;
    }
    constraints.push_back(std::move(c));
}

void LpProblem::set_objective(const std::map<std::size_t, Rational>& terms) {
    objective.assign(variables.size(), Rational(0));
    for (const auto& [j, a] : terms) objective.at(j) += a;
}

bool LpProblem::has_strict() const {
    for (const auto& c : constraints)
        if (c.rel == Rel::LT || c.rel == Rel::GT) return true;
    return false;
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::OPTIMAL: return "OPTIMAL";
        case LpStatus::INFEASIBLE: return "INFEASIBLE";
        case LpStatus::UNBOUNDED: return "UNBOUNDED";
    }
    return "?";
}

namespace {

const char* rel_text(Rel r) {
    switch (r) {
        case Rel::LE: return "<=";
        case Rel::EQ: return "=";
        case Rel::GE: return ">=";
        case Rel::LT: return "<";
        case Rel::GT: return ">";
    }
    return "?";
}

void check_shape(const LpProblem& p) {
    const auto n = p.variables.size();
    if (p.objective.size() != n) throw std::invalid_argument("objective length mismatch");
    if (!p.free.empty() && p.free.size() != n) throw std::invalid_argument("free flag length mismatch");
    for (const auto& c : p.constraints)
        if (c.coeffs.size() != n) throw std::invalid_argument("coefficient vector length mismatch");
}

bool is_free(const LpProblem& p, std::size_t j) { return !p.free.empty() && p.free[j]; }

// Dense tableau. Column layout: structural columns, then slacks/surplus, then artificials.
class Tableau {
public:
    std::vector<Vec> rows;      // m rows, width cols + 1 (last entry is the rhs)
    std::vector<std::size_t> basis;
    std::size_t cols = 0;
    std::size_t first_artificial = 0;
    std::size_t pivots = 0;
    int verbosity = 0;

    void pivot(std::size_t r, std::size_t c) {
        ++pivots;
        if (verbosity > 1) std::cerr << "pivot row " << r << " col " << c << '\n';
        Rational inv = 1 / rows[r][c];
        for (auto& x : rows[r]) x *= inv;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r || rows[i][c] == 0) continue;
            Rational f = rows[i][c];
            for (std::size_t k = 0; k <= cols; ++k)
                if (rows[r][k] != 0) rows[i][k] -= f * rows[r][k];
        }
        basis[r] = c;
    }

    // Reduced costs of cost vector c under the current basis.
    Vec reduced(const Vec& c) const {
        Vec d = c;
        d.resize(cols + 1, Rational(0));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Rational& cb = c[basis[i]];
            if (cb == 0) continue;
            for (std::size_t k = 0; k <= cols; ++k)
                if (rows[i][k] != 0) d[k] -= cb * rows[i][k];
        }
        return d;  // d[cols] holds minus the objective value
    }

    // Bland's rule. Returns false when unbounded.
    bool optimise(const Vec& c, std::size_t allowed_cols) {
        for (;;) {
            Vec d = reduced(c);
            std::size_t enter = cols;
            for (std::size_t k = 0; k < allowed_cols; ++k)
                if (d[k] < 0) {
                    enter = k;
                    break;
                }
            if (enter == cols) return true;
            std::size_t leave = rows.size();
            Rational best;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i][enter] <= 0) continue;
                Rational ratio = rows[i][cols] / rows[i][enter];
                if (leave == rows.size() || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == rows.size()) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

bool satisfies(const LpProblem& p, const Vec& x) {
    if (x.size() != p.variables.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (!is_free(p, j) && x[j] < 0) return false;
    for (const auto& c : p.constraints) {
        Rational lhs = 0;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (c.coeffs[j] != 0) lhs += c.coeffs[j] * x[j];
        bool ok = false;
        switch (c.rel) {
            case Rel::LE: ok = lhs <= c.rhs; break;
            case Rel::EQ: ok = lhs == c.rhs; break;
            case Rel::GE: ok = lhs >= c.rhs; break;
            case Rel::LT: ok = lhs < c.rhs; break;
            case Rel::GT: ok = lhs > c.rhs; break;
        }
        if (!ok) return false;
    }
    return true;
}

std::string dump(const LpProblem& p) {
    std::ostringstream os;
    os << "minimise";
    for (std::size_t j = 0; j < p.size(); ++j)
        if (p.objective[j] != 0) os << ' ' << to_string(p.objective[j]) << '*' << p.variables[j];
    os << '\n';
    for (const auto& c : p.constraints) {
        for (std::size_t j = 0; j < p.size(); ++j)
            if (c.coeffs[j] != 0) os << ' ' << to_string(c.coeffs[j]) << '*' << p.variables[j];
        os << ' ' << rel_text(c.rel) << ' ' << to_string(c.rhs) << '\n';
    }
    for (std::size_t j = 0; j < p.size(); ++j)
        if (is_free(p, j)) os << " free " << p.variables[j] << '\n';
    return os.str();
}

LpSolution solve(const LpProblem& p, const LpOptions& opt) {
    check_shape(p);
    if (p.has_strict()) throw std::invalid_argument("strict relations need solve_strict_feasibility");
    if (opt.verbosity > 0) std::cerr << "LP problem:\n" << dump(p);

    const std::size_t n = p.size();
    // Structural columns: one per variable plus a negative twin for free ones.
    std::vector<std::size_t> pos(n), neg(n, SIZE_MAX);
    std::size_t s = 0;
    for (std::size_t j = 0; j < n; ++j) {
        pos[j] = s++;
        if (is_free(p, j)) neg[j] = s++;
    }
    const std::size_t structural = s;
    const std::size_t m = p.constraints.size();

    std::size_t n_slack = 0, n_art = 0;
    std::vector<Rel> rel(m);
    std::vector<bool> flip(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        rel[i] = p.constraints[i].rel;
        if (p.constraints[i].rhs < 0) {
            flip[i] = true;
            if (rel[i] == Rel::LE) rel[i] = Rel::GE;
            else if (rel[i] == Rel::GE) rel[i] = Rel::LE;
        }
        if (rel[i] != Rel::EQ) ++n_slack;
        if (rel[i] != Rel::LE) ++n_art;
    }

    Tableau tab;
    tab.verbosity = opt.verbosity;
    tab.cols = structural + n_slack + n_art;
    tab.first_artificial = structural + n_slack;
    tab.rows.assign(m, Vec(tab.cols + 1, Rational(0)));
    tab.basis.assign(m, 0);
    std::size_t next_slack = structural, next_art = tab.first_artificial;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& c = p.constraints[i];
        Rational sign = flip[i] ? -1 : 1;
        auto& row = tab.rows[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (c.coeffs[j] == 0) continue;
            row[pos[j]] = sign * c.coeffs[j];
            if (neg[j] != SIZE_MAX) row[neg[j]] = -sign * c.coeffs[j];
        }
        row[tab.cols] = sign * c.rhs;
        if (rel[i] == Rel::LE) {
            row[next_slack] = 1;
            tab.basis[i] = next_slack++;
        } else if (rel[i] == Rel::GE) {
            row[next_slack++] = -1;
            row[next_art] = 1;
            tab.basis[i] = next_art++;
        } else {
            row[next_art] = 1;
            tab.basis[i] = next_art++;
        }
    }

    LpSolution out;
    // Phase 1: drive the artificials to zero.
    if (n_art > 0) {
        Vec c1(tab.cols, Rational(0));
        for (std::size_t k = tab.first_artificial; k < tab.cols; ++k) c1[k] = 1;
        tab.optimise(c1, tab.cols);
        Vec d = tab.reduced(c1);
        if (-d[tab.cols] > 0) {
            out.status = LpStatus::INFEASIBLE;
            out.pivots = tab.pivots;
            return out;
        }
        // Pivot any remaining artificial out of the basis; drop redundant rows.
        for (std::size_t i = 0; i < tab.rows.size();) {
            if (tab.basis[i] < tab.first_artificial) {
                ++i;
                continue;
            }
            std::size_t col = tab.first_artificial;
            for (std::size_t k = 0; k < tab.first_artificial; ++k)
                if (tab.rows[i][k] != 0) {
                    col = k;
                    break;
                }
            if (col < tab.first_artificial) {
                tab.pivot(i, col);
                ++i;
            } else {
                tab.rows.erase(tab.rows.begin() + static_cast<long>(i));
                tab.basis.erase(tab.basis.begin() + static_cast<long>(i));
            }
        }
    }

    // Phase 2 over structural and slack columns only.
    Vec c2(tab.cols, Rational(0));
    for (std::size_t j = 0; j < n; ++j) {
        c2[pos[j]] = p.objective[j];
        if (neg[j] != SIZE_MAX) c2[neg[j]] = -p.objective[j];
    }
    bool bounded = tab.optimise(c2, tab.first_artificial);
    out.pivots = tab.pivots;
    if (!bounded) {
        out.status = LpStatus::UNBOUNDED;
        return out;
    }

    Vec col_val(tab.cols, Rational(0));
    for (std::size_t i = 0; i < tab.rows.size(); ++i) col_val[tab.basis[i]] = tab.rows[i][tab.cols];
    out.assignment.assign(n, Rational(0));
    for (std::size_t j = 0; j < n; ++j) {
        out.assignment[j] = col_val[pos[j]];
        if (neg[j] != SIZE_MAX) out.assignment[j] -= col_val[neg[j]];
    }
    out.objective_value = 0;
    for (std::size_t j = 0; j < n; ++j) out.objective_value += p.objective[j] * out.assignment[j];
    out.status = LpStatus::OPTIMAL;

    // Internal audit: an optimal point must satisfy every row exactly.
    if (!satisfies(p, out.assignment)) throw std::logic_error("simplex audit failed: solution violates a constraint");
    if (opt.verbosity > 0) std::cerr << "LP optimal value " << to_string(out.objective_value) << '\n';
    return out;
}

LpSolution solve_strict_feasibility(const LpProblem& p, const LpOptions& opt) {
    check_shape(p);
    LpProblem q = p;
    const std::size_t s = q.add_var("__margin");
    for (auto& c : q.constraints) {
        if (c.rel == Rel::GT) {
            c.coeffs[s] = -1;
            c.rel = Rel::GE;
        } else if (c.rel == Rel::LT) {
            c.coeffs[s] = 1;
            c.rel = Rel::LE;
        }
    }
    q.add({{s, Rational(1)}}, Rel::LE, Rational(1));
    q.set_objective({{s, Rational(-1)}});
    LpSolution r = solve(q, opt);
    LpSolution out;
    out.pivots = r.pivots;
    if (r.status != LpStatus::OPTIMAL || r.assignment[s] <= 0) {
        out.status = LpStatus::INFEASIBLE;
        return out;
    }
    out.status = LpStatus::OPTIMAL;
    out.slack = r.assignment[s];
    out.assignment.assign(r.assignment.begin(), r.assignment.end() - 1);
    for (std::size_t j = 0; j < p.size(); ++j) out.objective_value += p.objective[j] * out.assignment[j];
    if (!satisfies(p, out.assignment)) throw std::logic_error("strict feasibility audit failed");
    return out;
}

}  // namespace mms
