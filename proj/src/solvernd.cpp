#include "mms/solvernd.hpp"

#include "mms/lp.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace mms {

namespace {

using Terms = std::map<std::size_t, Rational>;
using Levels = std::vector<std::vector<std::string>>;

// Lumped level run: one block of variables per level, states after every
// level kept inside the box. disp[c] is the displacement so far.
struct LevelLp {
    LpProblem lp;
    std::vector<std::vector<std::pair<std::string, std::size_t>>> vars;
    std::vector<Terms> disp;
    Terms total_time;
};

LevelLp level_lp(const System& sys, const Vec& start, const Levels& levels) {
    LevelLp out;
    out.disp.assign(static_cast<std::size_t>(sys.dimension), {});
    for (std::size_t i = 0; i < levels.size(); ++i) {
        out.vars.emplace_back();
        for (const auto& id : levels[i]) {
            std::size_t v = out.lp.add_var("t" + std::to_string(i) + "_" + id);
            out.vars.back().push_back({id, v});
            out.total_time[v] = 1;
            const Vec& a = sys.mode(id).slope;
            for (std::size_t c = 0; c < a.size(); ++c)
                if (a[c] != 0) out.disp[c][v] = a[c];
        }
        for (std::size_t c = 0; c < out.disp.size(); ++c) {
            if (out.disp[c].empty()) continue;
            out.lp.add(out.disp[c], Rel::LE, sys.v_max[c] - start[c]);
            out.lp.add(out.disp[c], Rel::GE, sys.v_min[c] - start[c]);
        }
    }
    return out;
}

void require_target(LevelLp& l, const Vec& start, const Vec& to) {
    for (std::size_t c = 0; c < start.size(); ++c) l.lp.add(l.disp[c], Rel::EQ, to[c] - start[c]);
}

bool strictly_feasible(const LpProblem& p) { return solve_strict_feasibility(p).status == LpStatus::OPTIMAL; }

// Whether some positive duration of mode m keeps v inside the box.
bool safe_at(const System& sys, const Mode& m, const Vec& v) {
    for (std::size_t c = 0; c < v.size(); ++c) {
        if (m.slope[c] > 0 && v[c] >= sys.v_max[c]) return false;
        if (m.slope[c] < 0 && v[c] <= sys.v_min[c]) return false;
    }
    return true;
}

System with_modes(const System& sys, const std::set<std::string>& keep) {
    System out = sys;
    out.modes.clear();
    for (const auto& m : sys.modes)
        if (keep.count(m.id)) out.modes.push_back(m);
    return out;
}

// Removes q from level j whenever no run of horizon `horizon` (and, when given,
// ending at `to`) can give it positive time there.
Levels prune_levels(const System& sys, const Vec& start, const Levels& levels, const Rational& horizon,
                    const std::optional<Vec>& to) {
    Levels out = levels;
    for (std::size_t j = 0; j < levels.size(); ++j) {
        for (std::size_t qi = 0; qi < levels[j].size(); ++qi) {
            LevelLp l = level_lp(sys, start, levels);
            l.lp.add(l.total_time, Rel::EQ, horizon);
            if (to) require_target(l, start, *to);
            l.lp.add({{l.vars[j][qi].second, Rational(1)}}, Rel::GT, 0);
            if (!strictly_feasible(l.lp)) {
                auto& lvl = out[j];
                lvl.erase(std::find(lvl.begin(), lvl.end(), levels[j][qi]));
            }
        }
    }
    return out;
}

std::set<std::string> modes_in(const Levels& levels) {
    std::set<std::string> s;
    for (const auto& l : levels) s.insert(l.begin(), l.end());
    return s;
}

Vec displaced(const System& sys, Vec v, const std::string& id, const Rational& t) {
    const Vec& a = sys.mode(id).slope;
    for (std::size_t c = 0; c < v.size(); ++c) v[c] += a[c] * t;
    return v;
}

// One level realized as l rounds. Each round applies the M* lump (as one
// abstract step) and every other mode for a 1/l share; inside a round the
// first component that keeps the state in the box goes next.
std::optional<std::vector<AbstractStep>> interleave(const System& sys, const Vec& from,
                                                    const std::vector<std::pair<std::string, Rational>>& times,
                                                    const mpz_class& rounds) {
    struct Part {
        bool lump;
        std::map<std::string, Rational> times;
        std::string mode;
        Rational duration;
    };
    std::vector<Part> parts;
    Part lump{true, {}, "", 0};
    for (const auto& [id, t] : times) {
        if (t <= 0) continue;
        if (sys.is_star(id)) lump.times[id] = t / Rational(rounds);
        else parts.push_back({false, {}, id, t / Rational(rounds)});
    }
    if (!lump.times.empty()) parts.insert(parts.begin(), lump);
    std::vector<AbstractStep> steps;
    Vec v = from;
    auto apply = [&](const Part& p) {
        Vec w = v;
        if (p.lump) {
            for (const auto& [id, t] : p.times) w = displaced(sys, w, id, t);
        } else {
            w = displaced(sys, w, p.mode, p.duration);
        }
        return w;
    };
    for (mpz_class r = 0; r < rounds; ++r) {
        std::vector<bool> done(parts.size(), false);
        for (std::size_t n = 0; n < parts.size(); ++n) {
            bool moved = false;
            for (std::size_t i = 0; i < parts.size() && !moved; ++i) {
                if (done[i]) continue;
                Vec w = apply(parts[i]);
                if (!in_box(sys, w)) continue;
                AbstractStep st;
                st.abstract = parts[i].lump;
                if (st.abstract) st.times = parts[i].times;
                else st.action = {parts[i].mode, parts[i].duration};
                steps.push_back(std::move(st));
                v = std::move(w);
                done[i] = true;
                moved = true;
            }
            if (!moved) return std::nullopt;
        }
    }
    return steps;
}

bool fewer_steps_first(const AbstractSchedule& a, const AbstractSchedule& b) {
    return a.steps.size() < b.steps.size();
}

}  // namespace

System negated(const System& sys) {
    System out = sys;
    for (auto& m : out.modes)
        for (auto& a : m.slope) a = -a;
    return out;
}

AbstractSchedule reversed(const AbstractSchedule& s) {
    AbstractSchedule out = s;
    std::reverse(out.steps.begin(), out.steps.end());
    return out;
}

ModeLadder build_ladder(const System& sys, const Vec& start) {
    ModeLadder ladder;
    std::vector<std::string> level = sys.star_modes();
    ladder.levels.push_back(level);
    for (;;) {
        std::vector<std::string> next = ladder.levels.back();
        for (const auto& q : sys.modes) {
            if (std::find(ladder.levels.back().begin(), ladder.levels.back().end(), q.id) != ladder.levels.back().end())
                continue;
            LevelLp l = level_lp(sys, start, ladder.levels);
            std::size_t t = l.lp.add_var("t");
            for (std::size_t c = 0; c < l.disp.size(); ++c) {
                Terms row = l.disp[c];
                if (q.slope[c] != 0) row[t] = q.slope[c];
                if (row.empty()) {
                    if (start[c] < sys.v_min[c] || start[c] > sys.v_max[c]) goto unsafe;
                    continue;
                }
                l.lp.add(row, Rel::LE, sys.v_max[c] - start[c]);
                l.lp.add(row, Rel::GE, sys.v_min[c] - start[c]);
            }
            l.lp.add({{t, Rational(1)}}, Rel::GT, 0);
            if (strictly_feasible(l.lp)) next.push_back(q.id);
        unsafe:;
        }
        if (next.size() == ladder.levels.back().size()) break;
        // Keep the system's mode order inside every level.
        std::vector<std::string> ordered;
        for (const auto& m : sys.modes)
            if (std::find(next.begin(), next.end(), m.id) != next.end()) ordered.push_back(m.id);
        ladder.levels.push_back(ordered);
    }
    return ladder;
}

std::pair<System, ModeLadder> prune_unsafe_modes(const System& sys) {
    require_valid(sys);
    ModeLadder ladder = build_ladder(sys, sys.v_0);
    const auto& top = ladder.levels.back();
    return {with_modes(sys, {top.begin(), top.end()}), ladder};
}

System prune_by_horizon(const System& sys, const Rational& t_max) {
    require_valid(sys);
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    ModeLadder ladder = build_ladder(sys, sys.v_0);
    Levels kept = prune_levels(sys, sys.v_0, ladder.levels, t_max, std::nullopt);
    return with_modes(sys, modes_in(kept));
}

std::optional<EasyTarget> find_easy_target(const System& sys, const Rational& t_max) {
    require_valid(sys);
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    ModeLadder ladder = build_ladder(sys, sys.v_0);
    Levels levels = prune_levels(sys, sys.v_0, ladder.levels, t_max, std::nullopt);
    const auto dim = static_cast<std::size_t>(sys.dimension);

    // Distance to both borders per coordinate, through x_c variables.
    auto make = [&](std::vector<std::size_t>& x_vars, bool single) {
        LevelLp l = level_lp(sys, sys.v_0, levels);
        l.lp.add(l.total_time, Rel::EQ, t_max);
        x_vars.clear();
        std::size_t shared = single ? l.lp.add_var("x") : 0;
        for (std::size_t c = 0; c < dim; ++c) {
            std::size_t x = single ? shared : l.lp.add_var("x" + std::to_string(c));
            x_vars.push_back(x);
        }
        return l;
    };
    auto bound = [&](LevelLp& l, std::size_t c, std::size_t x) {
        Terms up = l.disp[c], down;
        up[x] += 1;
        l.lp.add(up, Rel::LE, sys.v_max[c] - sys.v_0[c]);
        for (const auto& [k, v] : l.disp[c]) down[k] = -v;
        down[x] += 1;
        l.lp.add(down, Rel::LE, sys.v_0[c] - sys.v_min[c]);
    };
    auto end_of = [&](const LevelLp& l, const Vec& x) {
        Vec v = sys.v_0;
        for (std::size_t c = 0; c < dim; ++c)
            for (const auto& [k, a] : l.disp[c]) v[c] += a * x[k];
        return v;
    };

    std::vector<std::size_t> active(dim);
    for (std::size_t c = 0; c < dim; ++c) active[c] = c;
    std::vector<std::size_t> released;
    Vec any_end;
    for (;;) {
        std::vector<std::size_t> xs;
        LevelLp l = make(xs, false);
        Terms obj;
        for (std::size_t c = 0; c < dim; ++c) {
            bound(l, c, xs[c]);
            if (std::find(active.begin(), active.end(), c) != active.end()) obj[xs[c]] = -1;
        }
        l.lp.set_objective(obj);
        LpSolution s = solve(l.lp);
        if (s.status != LpStatus::OPTIMAL) return std::nullopt;
        any_end = end_of(l, s.assignment);
        if (s.objective_value == 0) break;
        std::vector<std::size_t> still;
        for (std::size_t c : active) {
            if (s.assignment[xs[c]] > 0) released.push_back(c);
            else still.push_back(c);
        }
        active = still;
        if (active.empty()) break;
    }
    EasyTarget out;
    out.border_coords = active;
    out.clearance = 0;
    out.v_end = any_end;
    if (!released.empty()) {
        std::vector<std::size_t> xs;
        LevelLp l = make(xs, true);
        for (std::size_t c : released) bound(l, c, xs[c]);
        l.lp.set_objective({{xs[0], Rational(-1)}});
        LpSolution s = solve(l.lp);
        if (s.status != LpStatus::OPTIMAL) throw std::logic_error("clearance LP lost feasibility");
        out.clearance = s.assignment[xs[0]];
        out.v_end = end_of(l, s.assignment);
    }
    return out;
}

std::optional<AbstractSchedule> reach_limit_safe(const System& sys_in, const Vec& from, const Vec& to,
                                                 const Rational& horizon) {
    System sys = sys_in;
    sys.v_0 = from;
    for (const auto& m : sys.modes)
        if (safe_at(sys, m, from) && !safe_at(sys, m, to))
            throw std::logic_error("target is less permissive than the start for mode " + m.id);
    ModeLadder ladder = build_ladder(sys, from);
    Levels levels = prune_levels(sys, from, ladder.levels, horizon, to);

    LevelLp l = level_lp(sys, from, levels);
    l.lp.add(l.total_time, Rel::EQ, horizon);
    require_target(l, from, to);
    for (const auto& lvl : l.vars)
        for (const auto& [id, v] : lvl) l.lp.add({{v, Rational(1)}}, Rel::GT, 0);
    LpSolution s = solve_strict_feasibility(l.lp);
    if (s.status != LpStatus::OPTIMAL) return std::nullopt;

    AbstractSchedule out;
    Vec v = from;
    for (const auto& lvl : l.vars) {
        if (lvl.empty()) continue;
        std::vector<std::pair<std::string, Rational>> times;
        Rational total = 0, tau;
        bool first = true;
        for (const auto& [id, var] : lvl) {
            const Rational& t = s.assignment[var];
            times.push_back({id, t});
            total += t;
            if (first || t < tau) tau = t;
            first = false;
        }
        // Safe time bound: the shortest delay of the level.
        mpz_class rounds = ceil_z(total / tau);
        if (rounds < 1) rounds = 1;
        std::optional<std::vector<AbstractStep>> steps;
        for (int attempt = 0; attempt < 12 && !steps; ++attempt, rounds *= 2) steps = interleave(sys, v, times, rounds);
        if (!steps) return std::nullopt;
        for (auto& st : *steps) out.steps.push_back(std::move(st));
        for (const auto& [id, t] : times) v = displaced(sys, v, id, t);
    }
    if (v != to) throw std::logic_error("level run missed the target");
    return out;
}

std::optional<LimitSafeResult> limit_safe_schedule(const System& sys, const Rational& t_max) {
    require_valid(sys);
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    LimitSafeResult r;
    auto [usable, ladder] = prune_unsafe_modes(sys);
    r.ladder = ladder;
    System pruned = usable;
    if (!usable.modes.empty()) pruned = prune_by_horizon(usable, t_max);
    if (!pruned.modes.empty()) r.target = find_easy_target(pruned, t_max);
    if (r.target) {
        Vec mid(sys.v_0.size());
        for (std::size_t c = 0; c < mid.size(); ++c) mid[c] = (sys.v_0[c] + r.target->v_end[c]) / 2;
        const Rational half = t_max / 2;
        r.forward = reach_limit_safe(pruned, sys.v_0, mid, half);
        if (r.forward) r.backward = reach_limit_safe(negated(pruned), r.target->v_end, mid, half);
        if (r.forward && r.backward) {
            r.construction_found = true;
            r.schedule = *r.forward;
            AbstractSchedule back = reversed(*r.backward);
            r.schedule.steps.insert(r.schedule.steps.end(), back.steps.begin(), back.steps.end());
            r.cost = total_cost(sys, r.schedule);
            r.from_construction = true;
        }
    }
    // A single lump over M* is often far cheaper than the constructed witness.
    auto lump = optimal_limit_safe(sys, t_max, 0);
    if (lump && (!r.construction_found || lump->cost < r.cost ||
                 (lump->cost == r.cost && fewer_steps_first(lump->schedule, r.schedule)))) {
        r.schedule = lump->schedule;
        r.cost = lump->cost;
        r.from_construction = false;
    } else if (!r.construction_found) {
        return std::nullopt;
    }
    if (!is_safe(sys, r.schedule) || r.schedule.horizon() != t_max)
        throw std::logic_error("limit-safe witness failed its own check");
    return r;
}

std::optional<Schedule> optimal_reach(const System& sys, const Vec& from, const Vec& to, const Rational& t_bound) {
    require_valid(sys);
    if (t_bound <= 0) throw std::invalid_argument("t_bound must be positive");
    for (const auto& m : sys.modes)
        if (m.switch_cost != 0) throw std::invalid_argument("optimal_reach needs zero switch costs");
    LpProblem lp;
    Terms obj;
    std::vector<Terms> rows(from.size());
    for (const auto& m : sys.modes) {
        std::size_t v = lp.add_var(m.id);
        obj[v] = m.cost_rate;
        for (std::size_t c = 0; c < from.size(); ++c)
            if (m.slope[c] != 0) rows[c][v] = m.slope[c];
    }
    for (std::size_t c = 0; c < from.size(); ++c) {
        if (rows[c].empty()) {
            if (from[c] != to[c]) return std::nullopt;
            continue;
        }
        lp.add(rows[c], Rel::EQ, to[c] - from[c]);
    }
    lp.set_objective(obj);
    LpSolution s = solve(lp);
    if (s.status != LpStatus::OPTIMAL) return std::nullopt;
    Rational total = 0;
    for (const auto& t : s.assignment) total += t;
    Schedule out;
    if (total == 0) return out;
    mpz_class l = ceil_z(total / t_bound);
    for (mpz_class r = 0; r < l; ++r)
        for (std::size_t i = 0; i < sys.modes.size(); ++i)
            if (s.assignment[i] > 0) out.actions.push_back({sys.modes[i].id, s.assignment[i] / Rational(l)});
    return out;
}

std::optional<OptimalLimitSafe> optimal_limit_safe(const System& sys, const Rational& t_max, int max_switches) {
    require_valid(sys);
    if (max_switches < 0) throw std::invalid_argument("max_switches must be nonnegative");
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    const std::vector<std::string> star = sys.star_modes();
    std::vector<std::string> others;
    for (const auto& m : sys.modes)
        if (!sys.is_star(m.id)) others.push_back(m.id);
    const auto dim = static_cast<std::size_t>(sys.dimension);

    std::optional<OptimalLimitSafe> best;
    std::size_t tried = 0;
    std::vector<std::string> seq;

    auto evaluate = [&] {
        ++tried;
        LpProblem lp;
        Terms obj, time;
        std::vector<Terms> disp(dim);
        Rational fixed = 0;
        std::vector<std::vector<std::pair<std::string, std::size_t>>> lumps;
        std::vector<std::size_t> acts;
        auto box = [&] {
            for (std::size_t c = 0; c < dim; ++c) {
                if (disp[c].empty()) {
                    continue;  // the start is inside the box already
                }
                lp.add(disp[c], Rel::LE, sys.v_max[c] - sys.v_0[c]);
                lp.add(disp[c], Rel::GE, sys.v_min[c] - sys.v_0[c]);
            }
        };
        auto use = [&](const std::string& id, std::size_t v) {
            const Mode& m = sys.mode(id);
            obj[v] = m.cost_rate;
            time[v] = 1;
            for (std::size_t c = 0; c < dim; ++c)
                if (m.slope[c] != 0) disp[c][v] = m.slope[c];
        };
        for (std::size_t i = 0; i <= seq.size(); ++i) {
            lumps.emplace_back();
            for (const auto& id : star) {
                std::size_t v = lp.add_var("lump" + std::to_string(i) + "_" + id);
                lumps.back().push_back({id, v});
                use(id, v);
            }
            box();
            if (i == seq.size()) break;
            std::size_t v = lp.add_var("act" + std::to_string(i));
            acts.push_back(v);
            use(seq[i], v);
            fixed += sys.mode(seq[i]).switch_cost;
            box();
        }
        lp.add(time, Rel::EQ, t_max);
        lp.set_objective(obj);
        LpSolution s = solve(lp);
        if (s.status != LpStatus::OPTIMAL) return;
        if (best && s.objective_value + fixed > best->cost) return;
        AbstractSchedule sched;
        for (std::size_t i = 0; i < lumps.size(); ++i) {
            AbstractStep st;
            for (const auto& [id, v] : lumps[i])
                if (s.assignment[v] > 0) st.times[id] = s.assignment[v];
            if (!st.times.empty()) {
                if (!sched.steps.empty() && sched.steps.back().abstract) {
                    for (const auto& [id, t] : st.times) sched.steps.back().times[id] += t;
                } else {
                    sched.steps.push_back(st);
                }
            }
            if (i < acts.size() && s.assignment[acts[i]] > 0) {
                AbstractStep a;
                a.abstract = false;
                a.action = {seq[i], s.assignment[acts[i]]};
                sched.steps.push_back(a);
            }
        }
        // A dropped zero-length action merges its neighbouring lumps, which only removes checked states.
        if (!is_safe(sys, sched)) return;
        Rational cost = total_cost(sys, sched);
        if (!best || cost < best->cost || (cost == best->cost && sched.steps.size() < best->schedule.steps.size()))
            best = OptimalLimitSafe{sched, cost, 0};
    };

    std::function<void()> rec = [&] {
        evaluate();
        if (static_cast<int>(seq.size()) == max_switches) return;
        for (const auto& id : others) {
            // Back-to-back repeats fold into one action unless an M* lump can sit between them.
            if (star.empty() && !seq.empty() && seq.back() == id) continue;
            seq.push_back(id);
            rec();
            seq.pop_back();
        }
    };
    rec();
    if (best) best->sequences = tried;
    return best;
}

Rational rounding_step(const System& sys, const Schedule& s, const Rational& eps) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    Rational max_norm = 0;
    for (const auto& m : sys.modes) max_norm = rmax(max_norm, norm_inf(m.slope));
    if (max_norm == 0 || s.actions.empty()) return 0;
    return eps / (Rational(static_cast<long>(s.actions.size())) * max_norm);
}

Schedule round_to_space(const System& sys, const Schedule& s, const Rational& eps) {
    require_valid(sys);
    if (s.kind != HorizonKind::FINITE) throw std::invalid_argument("finite schedule required");
    const Rational delta = rounding_step(sys, s, eps);
    if (delta == 0) return s;
    Schedule out = s;
    Rational drift = 0;
    for (auto& a : out.actions) {
        // Nearest grid point; halves round down.
        Rational r = Rational(ceil_z(a.duration / delta - Rational(1, 2))) * delta;
        drift += r - a.duration;
        a.duration = r;
    }
    if (drift == 0) return out;
    std::size_t absorber = out.actions.size() - 1;
    if (out.actions[absorber].duration - drift < 0) {
        // The last action is too short to take the residue; the longest one takes it.
        absorber = 0;
        for (std::size_t i = 1; i < out.actions.size(); ++i)
            if (out.actions[i].duration > out.actions[absorber].duration) absorber = i;
    }
    out.actions[absorber].duration -= drift;
    if (out.actions[absorber].duration < 0) throw std::logic_error("rounding residue exceeds every action");
    return out;
}

json ladder_to_json(const ModeLadder& l) {
    json j = json::array();
    for (const auto& lvl : l.levels) j.push_back(lvl);
    return j;
}

json report_json(const std::optional<LimitSafeResult>& r, double wall_ms) {
    json j;
    j["solver"] = "limit-safe";
    j["wall_time_ms"] = wall_ms;
    j["L"] = nullptr;
    if (!r) {
        j["status"] = "NO_SCHEDULE";
        return j;
    }
    j["status"] = "OK";
    j["cost"] = rational_to_json(r->cost);
    j["schedule"] = to_json(r->schedule);
    j["pattern"] = nullptr;
    j["leap_counts"] = json::object();
    j["candidates_examined"] = r->schedule.steps.size();
    j["mode_ladder"] = ladder_to_json(r->ladder);
    j["from_construction"] = r->from_construction;
    if (r->target) {
        j["v_end"] = vec_to_json(r->target->v_end);
        j["border_coords"] = r->target->border_coords;
        j["clearance"] = rational_to_json(r->target->clearance);
    } else {
        j["v_end"] = nullptr;
        j["border_coords"] = nullptr;
    }
    return j;
}

json report_json(const std::optional<OptimalLimitSafe>& r, int max_switches, double wall_ms) {
    json j;
    j["solver"] = "optimal-limit-safe";
    j["wall_time_ms"] = wall_ms;
    j["L"] = max_switches;
    if (!r) {
        j["status"] = "NO_SCHEDULE";
        return j;
    }
    j["status"] = "OK";
    j["cost"] = rational_to_json(r->cost);
    j["schedule"] = to_json(r->schedule);
    j["pattern"] = nullptr;
    j["leap_counts"] = json::object();
    j["candidates_examined"] = r->sequences;
    return j;
}

}  // namespace mms
