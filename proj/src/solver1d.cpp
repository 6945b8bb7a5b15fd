#include "mms/solver1d.hpp"

#include "mms/lp.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <memory>

namespace mms {

namespace {

void require_1d(const System& sys) {
    require_valid(sys);
    if (sys.dimension != 1) throw std::invalid_argument("one-dimensional system required");
}

void require_horizon(const Rational& t_max) {
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
}

std::vector<std::string> mode_ids(const Schedule& s) {
    std::vector<std::string> ids;
    for (const auto& a : s.actions) ids.push_back(a.mode);
    return ids;
}

// Fewer actions, then the lexicographically smaller mode sequence, break cost ties.
bool better(const FiniteSolution& x, const FiniteSolution& y) {
    if (x.cost != y.cost) return x.cost < y.cost;
    if (x.schedule.size() != y.schedule.size()) return x.schedule.size() < y.schedule.size();
    return mode_ids(x.schedule) < mode_ids(y.schedule);
}

struct Keeper {
    std::optional<FiniteSolution> best;
    std::size_t examined = 0;

    void offer(FiniteSolution&& s) {
        if (!best || better(s, *best)) best = std::move(s);
    }
    // Upper bound for pruning; candidates whose parametric cost exceeds it cannot win.
    bool beats(const Rational& c) const { return !best || c <= best->cost; }
    std::optional<FiniteSolution> finish() {
        if (best) best->candidates_examined = examined;
        return std::move(best);
    }
};

Schedule merge_runs(const Schedule& in) {
    Schedule s = drop_zero_actions(in);
    Schedule out;
    for (const auto& a : s.actions) {
        if (!out.actions.empty() && out.actions.back().mode == a.mode) out.actions.back().duration += a.duration;
        else out.actions.push_back(a);
    }
    return out;
}

// Cleans up, checks and prices a candidate. Any failure here is a solver bug.
FiniteSolution finish_candidate(const System& sys, const Rational& t_max, const Schedule& raw,
                                const std::string& shape, std::map<std::string, long> leaps) {
    FiniteSolution f;
    f.schedule = merge_runs(raw);
    if (f.schedule.horizon() != t_max) throw std::logic_error("candidate horizon mismatch");
    if (!is_safe(sys, f.schedule)) throw std::logic_error("candidate is unsafe");
    f.cost = total_cost(sys, f.schedule);
    if (f.schedule.size() <= 2) {
        f.pattern = "SHORT";
    } else if (auto c = classify_pattern(sys, f.schedule)) {
        f.pattern = c->name();
    } else {
        f.pattern = shape;
    }
    for (auto it = leaps.begin(); it != leaps.end();) {
        if (it->second == 0) it = leaps.erase(it);
        else ++it;
    }
    f.leap_counts = std::move(leaps);
    return f;
}

// ---------------------------------------------------------------------------
// Length one and two.

void search_len_le2(const System& sys, const Rational& t_max, Keeper& keep) {
    const Rational &lo = sys.v_min[0], &hi = sys.v_max[0], &v0 = sys.v_0[0];
    for (const auto& m : sys.modes) {
        ++keep.examined;
        Rational end = v0 + m.slope[0] * t_max;
        if (end < lo || end > hi) continue;
        keep.offer(finish_candidate(sys, t_max, finite_schedule({{m.id, t_max}}), "SHORT", {}));
    }
    for (const auto& m1 : sys.modes) {
        for (const auto& m2 : sys.modes) {
            if (m1.id == m2.id) continue;
            ++keep.examined;
            // Cheapest split of t_max between the two modes, both states inside the box.
            LpProblem lp;
            std::size_t t1 = lp.add_var("t1"), t2 = lp.add_var("t2");
            const Rational &a1 = m1.slope[0], &a2 = m2.slope[0];
            lp.add({{t1, 1}, {t2, 1}}, Rel::EQ, t_max);
            lp.add({{t1, a1}}, Rel::LE, hi - v0);
            lp.add({{t1, a1}}, Rel::GE, lo - v0);
            lp.add({{t1, a1}, {t2, a2}}, Rel::LE, hi - v0);
            lp.add({{t1, a1}, {t2, a2}}, Rel::GE, lo - v0);
            lp.set_objective({{t1, m1.cost_rate}, {t2, m2.cost_rate}});
            LpSolution sol = solve(lp);
            if (sol.status != LpStatus::OPTIMAL) continue;
            Rational bound = m1.switch_cost + m2.switch_cost + sol.objective_value;
            if (!keep.beats(bound)) continue;
            Schedule s = finite_schedule({{m1.id, sol.assignment[t1]}, {m2.id, sol.assignment[t2]}});
            keep.offer(finish_candidate(sys, t_max, s, "SHORT", {}));
        }
    }
}

// ---------------------------------------------------------------------------
// Pattern shapes and their instantiation with one free parameter p.

struct Shape {
    std::string name;
    std::vector<Seg> head, tail;
};

const std::vector<Shape>& shapes() {
    static const std::vector<Shape> all = [] {
        std::vector<Shape> out;
        for (char h : pattern_letters())
            for (char t : pattern_letters())
                if (admissible(h, t)) out.push_back({PatternId{h, t}.name(), head_segments(h), tail_segments(t)});
        // Up to the top, partway down and back up without ever touching the floor.
        // No catalog entry covers it, yet it can be strictly cheapest.
        out.push_back({"no-floor", {}, {Seg::UP_TOP, Seg::DOWN_INT, Seg::UP_TOP}});
        return out;
    }();
    return all;
}

// c0 + c1 * p
struct Lin {
    Rational c0, c1;
    Rational at(const Rational& p) const { return c0 + c1 * p; }
};

struct Slot {
    std::string mode;  // empty: placeholder of zero duration (no mode of that trend)
    Lin duration;
};

struct Combo {
    std::string shape;
    std::vector<Slot> head, tail;
    bool leaps = false;  // a leap section may sit between head and tail
    Rational lo, hi;     // range of p
    Lin time, cost;      // horizon and cost of head and tail together
    Rational cheap() const { return cost.c1 >= 0 ? lo : hi; }
};

bool is_up(Seg s) { return s == Seg::UP_INT || s == Seg::UP_TOP; }
bool is_down(Seg s) { return s == Seg::DOWN_INT || s == Seg::DOWN_BOT; }

struct Trends {
    std::vector<std::string> up, down, flat;
    const std::vector<std::string>& of(Seg s) const { return is_up(s) ? up : is_down(s) ? down : flat; }
};

Trends trends(const System& sys) {
    Trends t;
    for (const auto& m : sys.modes) {
        if (m.slope[0] > 0) t.up.push_back(m.id);
        else if (m.slope[0] < 0) t.down.push_back(m.id);
        else t.flat.push_back(m.id);
    }
    return t;
}

// Tightens lo <= p <= hi with c0 + c1 p >= 0; false when empty.
bool restrict(Combo& c, const Lin& f) {
    if (f.c1 == 0) return f.c0 >= 0;
    Rational root = -f.c0 / f.c1;
    if (f.c1 > 0) c.lo = rmax(c.lo, root);
    else c.hi = rmin(c.hi, root);
    return c.lo <= c.hi;
}

std::optional<Combo> instantiate(const System& sys, const Rational& t_max, const Shape& shape,
                                 const std::vector<std::string>& modes) {
    const Rational &bot = sys.v_min[0], &top = sys.v_max[0];
    Combo c;
    c.shape = shape.name;
    int params = 0;
    for (Seg s : shape.head) params += (s == Seg::FLAT || s == Seg::UP_INT || s == Seg::DOWN_INT);
    for (Seg s : shape.tail) params += (s == Seg::FLAT || s == Seg::UP_INT || s == Seg::DOWN_INT);
    if (params > 1) return std::nullopt;
    bool flat_param = false;
    for (Seg s : shape.head) flat_param = flat_param || s == Seg::FLAT;
    c.lo = flat_param ? Rational(0) : bot;
    c.hi = flat_param ? t_max : top;
    if (params == 0) c.lo = c.hi = 0;

    std::size_t k = 0;
    auto walk = [&](const std::vector<Seg>& segs, Lin start, std::vector<Slot>& out) -> std::optional<Lin> {
        for (Seg s : segs) {
            const std::string& id = modes[k++];
            Lin end = start, dur;
            if (s == Seg::FLAT) {
                dur = {0, 1};
            } else {
                if (s == Seg::UP_TOP) end = {top, 0};
                else if (s == Seg::DOWN_BOT) end = {bot, 0};
                else end = {0, 1};
                if (!id.empty()) {
                    const Rational& a = sys.mode(id).slope[0];
                    dur = {(end.c0 - start.c0) / a, (end.c1 - start.c1) / a};
                } else {
                    dur = {end.c0 - start.c0, end.c1 - start.c1};
                }
            }
            if (id.empty()) {
                // Placeholder: the segment must have zero length.
                if (!restrict(c, dur) || !restrict(c, {-dur.c0, -dur.c1})) return std::nullopt;
                dur = {0, 0};
            } else if (!restrict(c, dur)) {
                return std::nullopt;
            }
            out.push_back({id, dur});
            start = end;
        }
        return start;
    };
    auto after_head = walk(shape.head, {sys.v_0[0], 0}, c.head);
    if (!after_head) return std::nullopt;
    Lin tail_start = *after_head;
    c.leaps = !shape.head.empty() || sys.v_0[0] == bot;
    if (c.leaps) tail_start = {bot, 0};
    if (!walk(shape.tail, tail_start, c.tail)) return std::nullopt;

    for (const auto* part : {&c.head, &c.tail}) {
        for (const auto& slot : *part) {
            if (slot.mode.empty()) continue;
            const Mode& m = sys.mode(slot.mode);
            c.time.c0 += slot.duration.c0;
            c.time.c1 += slot.duration.c1;
            c.cost.c0 += m.switch_cost + m.cost_rate * slot.duration.c0;
            c.cost.c1 += m.cost_rate * slot.duration.c1;
        }
    }
    return c;
}

void for_each_combo(const System& sys, const Rational& t_max, const std::function<void(const Combo&)>& fn) {
    Trends tr = trends(sys);
    for (const Shape& shape : shapes()) {
        std::vector<Seg> segs = shape.head;
        segs.insert(segs.end(), shape.tail.begin(), shape.tail.end());
        std::vector<std::string> modes(segs.size());
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == segs.size()) {
                if (auto c = instantiate(sys, t_max, shape, modes)) fn(*c);
                return;
            }
            const auto& options = tr.of(segs[i]);
            if (options.empty()) {
                modes[i].clear();
                rec(i + 1);
                return;
            }
            for (const auto& id : options) {
                modes[i] = id;
                rec(i + 1);
            }
        };
        rec(0);
    }
}

struct Partial {
    std::string up, down;
    Rational peak;  // height above the floor
};

std::string leap_key(const LeapType& l) { return l.up + "/" + l.down; }

Schedule build(const System& sys, const Combo& c, const Rational& p, const std::vector<LeapType>& types,
               const std::vector<long>& counts, const std::optional<Partial>& partial) {
    Schedule s;
    auto emit = [&](const std::vector<Slot>& slots) {
        for (const auto& slot : slots)
            if (!slot.mode.empty()) s.actions.push_back({slot.mode, slot.duration.at(p)});
    };
    emit(c.head);
    const Rational height = sys.v_max[0] - sys.v_min[0];
    for (std::size_t i = 0; i < types.size() && i < counts.size(); ++i) {
        Rational up = height / sys.mode(types[i].up).slope[0];
        Rational down = -height / sys.mode(types[i].down).slope[0];
        for (long n = 0; n < counts[i]; ++n) {
            s.actions.push_back({types[i].up, up});
            s.actions.push_back({types[i].down, down});
        }
    }
    if (partial) {
        s.actions.push_back({partial->up, partial->peak / sys.mode(partial->up).slope[0]});
        s.actions.push_back({partial->down, -partial->peak / sys.mode(partial->down).slope[0]});
    }
    emit(c.tail);
    return s;
}

std::map<std::string, long> count_map(const std::vector<LeapType>& types, const std::vector<long>& counts) {
    std::map<std::string, long> m;
    for (std::size_t i = 0; i < types.size() && i < counts.size(); ++i) m[leap_key(types[i])] += counts[i];
    return m;
}

void offer(const System& sys, const Rational& t_max, Keeper& keep, const Combo& c, const Rational& p,
           const std::vector<LeapType>& types, const std::vector<long>& counts,
           const std::optional<Partial>& partial = std::nullopt) {
    ++keep.examined;
    Schedule s = build(sys, c, p, types, counts, partial);
    keep.offer(finish_candidate(sys, t_max, s, c.shape, count_map(types, counts)));
}

// Head and tail alone fill the horizon.
void no_leap_case(const System& sys, const Rational& t_max, Keeper& keep, const Combo& c,
                  const std::vector<LeapType>& types) {
    Rational p;
    if (c.time.c1 != 0) {
        p = (t_max - c.time.c0) / c.time.c1;
        if (p < c.lo || p > c.hi) return;
    } else {
        if (c.time.c0 != t_max) return;
        p = c.cheap();
    }
    if (!keep.beats(c.cost.at(p))) return;
    offer(sys, t_max, keep, c, p, types, {});
}

// ---------------------------------------------------------------------------
// Exact unbounded-knapsack table over the 1/D grid of leap times.

struct LeapTable {
    mpz_class denom = 1;
    long size = 0;  // grid points 0..size
    std::vector<Rational> best;
    std::vector<char> reach;
    std::vector<int> last;
    std::vector<long> count;

    // Grid index of an exact time, or -1 when off grid or beyond the table.
    long index(const Rational& time) const {
        if (time < 0) return -1;
        Rational g = time * Rational(denom);
        if (!is_integer(g) || g > size) return -1;
        return g.get_num().get_si();
    }
    std::vector<long> counts(long g, std::size_t types) const {
        std::vector<long> out(types, 0);
        while (g > 0) {
            ++out[static_cast<std::size_t>(last[static_cast<std::size_t>(g)])];
            g -= weight[static_cast<std::size_t>(last[static_cast<std::size_t>(g)])];
        }
        return out;
    }
    std::vector<long> weight;
};

LeapTable leap_table(const std::vector<LeapType>& types, const Rational& t_max) {
    LeapTable t;
    for (const auto& l : types) t.denom = lcm_z(t.denom, l.time.get_den());
    Rational points = t_max * Rational(t.denom);
    mpz_class n = floor_z(points);
    if (n + 1 > grid_limit())
        throw DeskScaleExceeded("leap grid needs " + mpz_class(n + 1).get_str() + " points, limit " +
                                std::to_string(grid_limit()));
    t.size = n.get_si();
    for (const auto& l : types) t.weight.push_back(Rational(l.time * Rational(t.denom)).get_num().get_si());
    const auto points_n = static_cast<std::size_t>(t.size + 1);
    t.best.assign(points_n, 0);
    t.reach.assign(points_n, 0);
    t.last.assign(points_n, -1);
    t.count.assign(points_n, 0);
    t.reach[0] = 1;
    for (long g = 1; g <= t.size; ++g) {
        auto gi = static_cast<std::size_t>(g);
        for (std::size_t i = 0; i < types.size(); ++i) {
            long w = t.weight[i];
            if (w > g || !t.reach[static_cast<std::size_t>(g - w)]) continue;
            auto prev = static_cast<std::size_t>(g - w);
            Rational cand = t.best[prev] + types[i].cost;
            long cnt = t.count[prev] + 1;
            // Ties: fewer leaps, then the earlier type.
            if (!t.reach[gi] || cand < t.best[gi] || (cand == t.best[gi] && cnt < t.count[gi])) {
                t.best[gi] = cand;
                t.reach[gi] = 1;
                t.last[gi] = static_cast<int>(i);
                t.count[gi] = cnt;
            }
        }
    }
    return t;
}

void exact_leap_case(const System& sys, const Rational& t_max, Keeper& keep, const Combo& c,
                     const std::vector<LeapType>& types, const LeapTable& table) {
    const Rational rest = t_max - c.time.c0;  // leap time plus c.time.c1 * p
    if (c.time.c1 == 0) {
        long g = table.index(rest);
        if (g < 0 || !table.reach[static_cast<std::size_t>(g)]) return;
        Rational p = c.cheap();
        if (!keep.beats(c.cost.at(p) + table.best[static_cast<std::size_t>(g)])) return;
        offer(sys, t_max, keep, c, p, types, table.counts(g, types.size()));
        return;
    }
    // L = rest - b p for p in [lo, hi].
    Rational l1 = rest - c.time.c1 * c.lo, l2 = rest - c.time.c1 * c.hi;
    Rational lmin = rmax(rmin(l1, l2), 0), lmax = rmax(l1, l2);
    if (lmax < 0) return;
    mpz_class g_lo = ceil_z(lmin * Rational(table.denom)), g_hi = floor_z(lmax * Rational(table.denom));
    if (g_hi > table.size) g_hi = table.size;
    long best_g = -1;
    Rational best_cost;
    for (long g = g_lo.get_si(); g <= g_hi.get_si(); ++g) {
        if (!table.reach[static_cast<std::size_t>(g)]) continue;
        Rational p = (rest - Rational(g) / Rational(table.denom)) / c.time.c1;
        Rational cost = c.cost.at(p) + table.best[static_cast<std::size_t>(g)];
        if (best_g < 0 || cost < best_cost) {
            best_g = g;
            best_cost = cost;
        }
    }
    if (best_g < 0 || !keep.beats(best_cost)) return;
    Rational p = (rest - Rational(best_g) / Rational(table.denom)) / c.time.c1;
    offer(sys, t_max, keep, c, p, types, table.counts(best_g, types.size()));
}

// ---------------------------------------------------------------------------
// Single leap type, with an optional partial leap for the remainder.

void single_type_case(const System& sys, const Rational& t_max, Keeper& keep, const Combo& c,
                      const std::vector<LeapType>& types, std::size_t ti) {
    const LeapType& lt = types[ti];
    const Rational rest = t_max - c.time.c0;
    auto with_count = [&](long n, const Rational& p) {
        std::vector<long> counts(types.size(), 0);
        counts[ti] = n;
        if (!keep.beats(c.cost.at(p) + lt.cost * n)) return;
        offer(sys, t_max, keep, c, p, types, counts);
    };
    // Complete leaps only.
    if (c.time.c1 == 0) {
        Rational n = rest / lt.time;
        if (n >= 0 && is_integer(n)) with_count(n.get_num().get_si(), c.cheap());
    } else {
        Rational l1 = rest - c.time.c1 * c.lo, l2 = rest - c.time.c1 * c.hi;
        Rational lmin = rmax(rmin(l1, l2), 0), lmax = rmax(l1, l2);
        if (lmax >= 0) {
            mpz_class n_lo = ceil_z(lmin / lt.time), n_hi = floor_z(lmax / lt.time);
            // Cost is linear in n, so an end of the range is optimal.
            for (const mpz_class& n : {n_lo, n_hi}) {
                if (n < n_lo || n > n_hi) continue;
                Rational p = (rest - lt.time * Rational(n)) / c.time.c1;
                with_count(n.get_si(), p);
            }
        }
    }
    // A partial leap absorbs what complete leaps leave over, at either end of p.
    const Rational rate = 1 / sys.mode(lt.up).slope[0] - 1 / sys.mode(lt.down).slope[0];
    for (const Rational& p : {c.lo, c.hi}) {
        Rational left = t_max - c.time.at(p);
        if (left <= 0) continue;
        mpz_class n = floor_z(left / lt.time);
        Rational r = left - lt.time * Rational(n);
        if (r == 0) continue;
        std::vector<long> counts(types.size(), 0);
        counts[ti] = n.get_si();
        Partial part{lt.up, lt.down, r / rate};
        Rational bound = c.cost.at(p) + lt.cost * Rational(n) + sys.mode(lt.up).switch_cost +
                         sys.mode(lt.down).switch_cost;
        if (!keep.beats(bound)) continue;
        ++keep.examined;
        Schedule s = build(sys, c, p, types, counts, part);
        keep.offer(finish_candidate(sys, t_max, s, c.shape, count_map(types, counts)));
    }
}

std::optional<FiniteSolution> approx3_impl(const System& sys, const Rational& t_max) {
    Keeper keep;
    search_len_le2(sys, t_max, keep);
    auto types = leap_types(sys);
    for_each_combo(sys, t_max, [&](const Combo& c) {
        ++keep.examined;
        no_leap_case(sys, t_max, keep, c, types);
        if (!c.leaps) return;
        for (std::size_t ti = 0; ti < types.size(); ++ti) single_type_case(sys, t_max, keep, c, types, ti);
    });
    return keep.finish();
}

// ---------------------------------------------------------------------------
// Knapsack.

struct ParetoState {
    long value;
    Rational volume;
    int node;
};

}  // namespace

long grid_limit() {
    if (const char* env = std::getenv("MMS_GRID_LIMIT")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return kDefaultGridLimit;
}

std::vector<std::size_t> knapsack_fptas(const KnapsackInstance& inst, const Rational& rho) {
    if (rho <= 0) throw std::invalid_argument("rho must be positive");
    if (inst.capacity < 0) throw std::invalid_argument("negative capacity");
    std::vector<std::size_t> usable;
    Rational vmax = 0;
    for (std::size_t i = 0; i < inst.items.size(); ++i) {
        const auto& it = inst.items[i];
        if (it.volume < 0 || it.value < 0) throw std::invalid_argument("negative knapsack item");
        if (it.volume > inst.capacity) continue;
        usable.push_back(i);
        vmax = rmax(vmax, it.value);
    }
    if (usable.empty() || vmax == 0) return {};
    const Rational scale = rho * vmax / Rational(static_cast<long>(usable.size()));
    std::vector<std::pair<std::size_t, int>> nodes;  // (item, previous node)
    std::vector<ParetoState> front{{0, 0, -1}};
    for (std::size_t i : usable) {
        const auto& it = inst.items[i];
        long sv = floor_z(it.value / scale).get_si();
        std::vector<ParetoState> all = front;
        for (const auto& st : front) {
            Rational vol = st.volume + it.volume;
            if (vol > inst.capacity) continue;
            nodes.push_back({i, st.node});
            all.push_back({st.value + sv, vol, static_cast<int>(nodes.size()) - 1});
        }
        std::sort(all.begin(), all.end(), [](const ParetoState& a, const ParetoState& b) {
            if (a.value != b.value) return a.value > b.value;
            return a.volume < b.volume;
        });
        // Keep states that need strictly less volume than every higher-valued one.
        std::vector<ParetoState> kept;
        for (auto& st : all)
            if (kept.empty() || st.volume < kept.back().volume) kept.push_back(std::move(st));
        std::reverse(kept.begin(), kept.end());
        front = std::move(kept);
    }
    std::vector<std::size_t> chosen;
    for (int n = front.back().node; n >= 0; n = nodes[static_cast<std::size_t>(n)].second)
        chosen.push_back(nodes[static_cast<std::size_t>(n)].first);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::optional<InfiniteSolution> solve_infinite(const System& sys) {
    require_1d(sys);
    std::optional<InfiniteSolution> best;
    for (const auto& m : sys.modes) {
        if (m.slope[0] != 0) continue;
        if (!best || m.cost_rate < best->average_cost) {
            InfiniteSolution s;
            s.average_cost = m.cost_rate;
            s.schedule.kind = HorizonKind::INFINITE_TAIL;
            s.schedule.actions.push_back({m.id, 0, true});
            best = s;
        }
    }
    const Rational &bot = sys.v_min[0], &v0 = sys.v_0[0];
    const Rational height = sys.v_max[0] - bot;
    for (const auto& l : leap_types(sys)) {
        Rational ratio = l.cost / l.time;
        if (best && ratio >= best->average_cost) continue;
        InfiniteSolution s;
        s.average_cost = ratio;
        s.schedule.kind = HorizonKind::PERIODIC;
        const Rational& down = sys.mode(l.down).slope[0];
        // Walk down to the floor first, then repeat the full leap.
        if (v0 != bot) s.schedule.actions.push_back({l.down, (bot - v0) / down});
        s.schedule.prefix_len = s.schedule.actions.size();
        s.schedule.actions.push_back({l.up, height / sys.mode(l.up).slope[0]});
        s.schedule.actions.push_back({l.down, -height / down});
        best = s;
    }
    return best;
}

std::optional<FiniteSolution> solve_len_le2(const System& sys, const Rational& t_max) {
    require_1d(sys);
    require_horizon(t_max);
    Keeper keep;
    search_len_le2(sys, t_max, keep);
    return keep.finish();
}

std::optional<FiniteSolution> solve_exact(const System& sys, const Rational& t_max) {
    require_1d(sys);
    require_horizon(t_max);
    Keeper keep;
    search_len_le2(sys, t_max, keep);
    auto types = leap_types(sys);
    std::optional<LeapTable> table;
    if (!types.empty()) table = leap_table(types, t_max);
    for_each_combo(sys, t_max, [&](const Combo& c) {
        ++keep.examined;
        if (c.leaps && table) exact_leap_case(sys, t_max, keep, c, types, *table);
        else no_leap_case(sys, t_max, keep, c, types);
    });
    return keep.finish();
}

std::optional<FiniteSolution> approx3(const System& sys, const Rational& t_max) {
    require_1d(sys);
    require_horizon(t_max);
    return approx3_impl(sys, t_max);
}

namespace {

// Appendix-style reduction for one combo. The free parameter moves from its
// cheap end p_c towards the other end by a fraction lambda; leaps fill the rest.
void knapsack_case(const System& sys, const Rational& t_max, const Rational& rho, const Rational& c_star,
                   Keeper& keep, const Combo& c, const std::vector<LeapType>& types) {
    const Rational pc = c.cheap();
    const Rational pe = pc == c.lo ? c.hi : c.lo;
    const Rational delta = pe - pc;
    const Rational shift = c.time.c1 * delta;  // horizon change for lambda = 1
    const Rational kappa = c.cost.c1 * delta;  // extra cost for lambda = 1, never negative
    const Rational r = t_max - c.time.at(pc);  // leap time needed at lambda = 0
    const long m = static_cast<long>(sys.modes.size());
    const Rational inner = rho / Rational(12 * m * m);

    KnapsackInstance ks;
    std::vector<std::pair<std::size_t, long>> leap_of;  // item -> (type, multiplicity); type npos for slices
    const auto none = static_cast<std::size_t>(-1);
    for (std::size_t ti = 0; ti < types.size(); ++ti) {
        Rational value = types[ti].cost;
        if (shift < 0) value += kappa / -shift * types[ti].time;
        for (long mult = 1; Rational(mult) * types[ti].time <= t_max && Rational(mult) * value <= c_star;
             mult *= 2) {
            ks.items.push_back({Rational(mult) * types[ti].time, Rational(mult) * value, leap_key(types[ti])});
            leap_of.push_back({ti, mult});
        }
    }
    if (shift > 0) {
        // Binary slices of lambda, halving until the slice cost drops below the threshold.
        const Rational eps = c_star * rho / 6;
        Rational frac = Rational(1, 2);
        for (;;) {
            ks.items.push_back({frac * shift, frac * kappa, "slice"});
            leap_of.push_back({none, 0});
            if (frac * kappa <= eps) break;
            frac /= 2;
        }
        ks.items.push_back({frac * shift, frac * kappa, "slice"});
        leap_of.push_back({none, 0});
    }
    const Rational need = shift < 0 ? rmax(r, 0) : r;
    Rational total = 0;
    for (const auto& it : ks.items) total += it.volume;
    if (total < need) return;
    ks.capacity = total - need;
    auto left_out = knapsack_fptas(ks, inner);
    std::vector<char> out(ks.items.size(), 0);
    for (std::size_t i : left_out) out[i] = 1;
    std::vector<long> counts(types.size(), 0);
    for (std::size_t i = 0; i < ks.items.size(); ++i)
        if (!out[i] && leap_of[i].first != none) counts[leap_of[i].first] += leap_of[i].second;

    // Repair: recompute lambda exactly; drop single leaps while it falls outside [0, 1].
    auto leap_time = [&] {
        Rational t = 0;
        for (std::size_t i = 0; i < types.size(); ++i) t += types[i].time * Rational(counts[i]);
        return t;
    };
    for (;;) {
        Rational lt = leap_time();
        Rational lambda = (r - lt) / shift;
        if (lambda >= 0 && lambda <= 1) {
            offer(sys, t_max, keep, c, pc + lambda * delta, types, counts);
            return;
        }
        bool too_much = shift > 0 ? lambda < 0 : lambda > 1;
        if (!too_much) return;
        // Remove the longest leap still present.
        std::size_t pick = types.size();
        for (std::size_t i = 0; i < types.size(); ++i)
            if (counts[i] > 0 && (pick == types.size() || types[i].time > types[pick].time)) pick = i;
        if (pick == types.size()) return;
        --counts[pick];
    }
}

}  // namespace

std::optional<FiniteSolution> fptas(const System& sys, const Rational& t_max, const Rational& rho) {
    require_1d(sys);
    require_horizon(t_max);
    if (rho <= 0) throw std::invalid_argument("rho must be positive");
    auto seed = approx3_impl(sys, t_max);
    if (!seed || seed->cost == 0) return seed;
    const Rational c_star = seed->cost;
    Keeper keep;
    keep.examined = seed->candidates_examined;
    keep.offer(FiniteSolution(*seed));
    auto types = leap_types(sys);
    std::optional<LeapTable> table;
    for_each_combo(sys, t_max, [&](const Combo& c) {
        ++keep.examined;
        if (!c.leaps || types.empty()) {
            no_leap_case(sys, t_max, keep, c, types);
            return;
        }
        if (!keep.beats(c.cost.at(c.cheap()))) return;
        const Rational shift = c.time.c1 * (c.hi - c.lo);
        if (shift == 0) {
            // Rigid combo: the leap section has a fixed length, handled by the exact table.
            if (!table) table = leap_table(types, t_max);
            exact_leap_case(sys, t_max, keep, c, types, *table);
            return;
        }
        knapsack_case(sys, t_max, rho, c_star, keep, c, types);
    });
    return keep.finish();
}

json report_json(const std::string& solver, const std::optional<FiniteSolution>& sol, double wall_ms) {
    json j;
    j["solver"] = solver;
    j["wall_time_ms"] = wall_ms;
    if (!sol) {
        j["status"] = "INFEASIBLE";
        return j;
    }
    j["status"] = "OK";
    j["cost"] = rational_to_json(sol->cost);
    j["schedule"] = to_json(sol->schedule);
    j["pattern"] = sol->pattern;
    json counts = json::object();
    for (const auto& [k, n] : sol->leap_counts) counts[k] = n;
    j["leap_counts"] = counts;
    j["candidates_examined"] = sol->candidates_examined;
    return j;
}

json report_json(const std::optional<InfiniteSolution>& sol, double wall_ms) {
    json j;
    j["solver"] = "infinite";
    j["wall_time_ms"] = wall_ms;
    if (!sol) {
        j["status"] = "NO_SCHEDULE";
        return j;
    }
    j["status"] = "OK";
    j["average_cost"] = rational_to_json(sol->average_cost);
    j["schedule"] = to_json(sol->schedule);
    return j;
}

}  // namespace mms
