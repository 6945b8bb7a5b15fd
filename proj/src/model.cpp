#include "mms/model.hpp"

#include <algorithm>
#include <set>

namespace mms {

const Mode& System::mode(const std::string& id) const {
    for (const auto& m : modes)
        if (m.id == id) return m;
    throw ModelError("unknown mode id: " + id);
}

std::optional<std::size_t> System::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < modes.size(); ++i)
        if (modes[i].id == id) return i;
    return std::nullopt;
}

bool System::is_zero(const std::string& id) const {
    for (const auto& a : mode(id).slope)
        if (a != 0) return false;
    return true;
}

std::vector<std::string> System::star_modes() const {
    std::vector<std::string> out;
    for (const auto& m : modes)
        if (m.switch_cost == 0) out.push_back(m.id);
    return out;
}

std::vector<std::string> System::zero_modes() const {
    std::vector<std::string> out;
    for (const auto& m : modes)
        if (is_zero(m.id)) out.push_back(m.id);
    return out;
}

Rational Schedule::horizon() const {
    Rational h = 0;
    for (const auto& a : actions)
        if (!a.infinite) h += a.duration;
    return h;
}

Rational AbstractStep::duration() const {
    if (!abstract) return action.duration;
    Rational t = 0;
    for (const auto& [m, x] : times) t += x;
    return t;
}

Rational AbstractSchedule::horizon() const {
    Rational h = 0;
    for (const auto& s : steps) h += s.duration();
    return h;
}

Schedule finite_schedule(std::vector<TimedAction> actions) {
    Schedule s;
    s.actions = std::move(actions);
    return s;
}

std::vector<std::string> validate_system(const System& sys) {
    std::vector<std::string> out;
    const auto n = static_cast<std::size_t>(std::max(sys.dimension, 0));
    if (sys.dimension <= 0) out.push_back("dimension must be positive");
    if (sys.v_min.size() != n || sys.v_max.size() != n || sys.v_0.size() != n) {
        out.push_back("box vectors do not match the dimension");
        return out;
    }
    bool strict = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (sys.v_min[i] > sys.v_max[i])
            out.push_back("v_min exceeds v_max at coordinate " + std::to_string(i));
        if (sys.v_min[i] < sys.v_max[i]) strict = true;
        if (sys.v_0[i] < sys.v_min[i] || sys.v_0[i] > sys.v_max[i])
            out.push_back("v_0 outside the safe set at coordinate " + std::to_string(i));
    }
    if (!strict) out.push_back("safe set degenerate");
    if (sys.modes.empty()) out.push_back("no modes");
    std::set<std::string> seen;
    for (const auto& m : sys.modes) {
        if (!seen.insert(m.id).second) out.push_back("duplicate mode id " + m.id);
        if (m.slope.size() != n) out.push_back("slope length mismatch for mode " + m.id);
        if (m.cost_rate < 0) out.push_back("negative cost rate for mode " + m.id);
        if (m.switch_cost < 0) out.push_back("negative switch cost for mode " + m.id);
    }
    return out;
}

void require_valid(const System& sys) {
    auto v = validate_system(sys);
    if (!v.empty()) throw ModelError("invalid system: " + v.front());
}

bool in_box(const System& sys, const Vec& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] < sys.v_min[i] || v[i] > sys.v_max[i]) return false;
    return true;
}

namespace {

Rational excursion(const System& sys, const Vec& v) {
    Rational worst = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        worst = rmax(worst, sys.v_min[i] - v[i]);
        worst = rmax(worst, v[i] - sys.v_max[i]);
    }
    return worst;
}

void step(Vec& v, const Vec& slope, const Rational& t) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += slope[i] * t;
}

void score(const System& sys, Run& r) {
    r.safe = true;
    r.eps_safe_margin = 0;
    r.first_violation = -1;
    for (std::size_t i = 0; i < r.states.size(); ++i) {
        Rational e = excursion(sys, r.states[i]);
        if (e > 0 && r.first_violation < 0) r.first_violation = static_cast<long>(i);
        r.eps_safe_margin = rmax(r.eps_safe_margin, e);
    }
    r.safe = r.first_violation < 0;
}

}  // namespace

Run run_of(const System& sys, const Schedule& s) {
    Run r;
    Vec v = sys.v_0;
    r.states.push_back(v);
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
        const auto& a = s.actions[i];
        const auto& m = sys.mode(a.mode);
        if (a.infinite) {
            if (s.kind != HorizonKind::INFINITE_TAIL || i + 1 != s.actions.size())
                throw ModelError("infinite duration is only allowed as the last action");
            break;
        }
        if (a.duration < 0) throw ModelError("negative duration");
        step(v, m.slope, a.duration);
        r.states.push_back(v);
    }
    score(sys, r);
    // An infinite tail or a drifting cycle eventually leaves any bounded box.
    bool drifts = false;
    if (s.kind == HorizonKind::INFINITE_TAIL && !s.actions.empty())
        drifts = !sys.is_zero(s.actions.back().mode);
    if (s.kind == HorizonKind::PERIODIC) {
        Vec d(sys.dimension, Rational(0));
        for (std::size_t i = s.prefix_len; i < s.actions.size(); ++i)
            step(d, sys.mode(s.actions[i].mode).slope, s.actions[i].duration);
        for (const auto& x : d)
            if (x != 0) drifts = true;
    }
    if (drifts && r.safe) {
        r.safe = false;
        r.first_violation = static_cast<long>(r.states.size()) - 1;
    }
    return r;
}

Run run_of(const System& sys, const AbstractSchedule& s) {
    Run r;
    Vec v = sys.v_0;
    r.states.push_back(v);
    for (const auto& st : s.steps) {
        if (st.abstract) {
            for (const auto& [id, t] : st.times) {
                const auto& m = sys.mode(id);
                if (m.switch_cost != 0) throw ModelError("abstract action uses mode with switch cost: " + id);
                if (t < 0) throw ModelError("negative duration");
                step(v, m.slope, t);
            }
        } else {
            if (st.action.duration < 0) throw ModelError("negative duration");
            step(v, sys.mode(st.action.mode).slope, st.action.duration);
        }
        r.states.push_back(v);
    }
    score(sys, r);
    return r;
}

bool is_safe(const System& sys, const Schedule& s) { return run_of(sys, s).safe; }
bool is_safe(const System& sys, const AbstractSchedule& s) { return run_of(sys, s).safe; }

bool is_eps_safe(const System& sys, const Schedule& s, const Rational& eps) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    return run_of(sys, s).eps_safe_margin < eps;
}

Rational total_cost(const System& sys, const Schedule& s) {
    if (s.kind != HorizonKind::FINITE) throw std::invalid_argument("total cost needs a finite horizon");
    Rational c = 0;
    for (const auto& a : s.actions) {
        const auto& m = sys.mode(a.mode);
        c += m.switch_cost + m.cost_rate * a.duration;
    }
    return c;
}

Rational total_cost(const System& sys, const AbstractSchedule& s) {
    Rational c = 0;
    for (const auto& st : s.steps) {
        if (st.abstract) {
            for (const auto& [id, t] : st.times) c += sys.mode(id).cost_rate * t;
        } else {
            const auto& m = sys.mode(st.action.mode);
            c += m.switch_cost + m.cost_rate * st.action.duration;
        }
    }
    return c;
}

Rational average_cost(const System& sys, const Schedule& s) {
    if (s.actions.empty()) throw std::invalid_argument("empty schedule");
    switch (s.kind) {
        case HorizonKind::FINITE:
            throw std::invalid_argument("average cost needs an infinite horizon");
        case HorizonKind::INFINITE_TAIL:
            // The prefix is ignored on purpose: only the tail rate survives the limit.
            return sys.mode(s.actions.back().mode).cost_rate;
        case HorizonKind::PERIODIC: {
            Rational cost = 0, time = 0;
            for (std::size_t i = s.prefix_len; i < s.actions.size(); ++i) {
                const auto& m = sys.mode(s.actions[i].mode);
                cost += m.switch_cost + m.cost_rate * s.actions[i].duration;
                time += s.actions[i].duration;
            }
            if (time <= 0) throw std::invalid_argument("cycle must take positive time");
            return cost / time;
        }
    }
    return 0;
}

Schedule drop_zero_actions(const Schedule& s) {
    Schedule out = s;
    out.actions.clear();
    std::size_t removed_in_prefix = 0;
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
        const auto& a = s.actions[i];
        if (!a.infinite && a.duration == 0) {
            if (i < s.prefix_len) ++removed_in_prefix;
            continue;
        }
        out.actions.push_back(a);
    }
    out.prefix_len = s.prefix_len - removed_in_prefix;
    return out;
}

namespace {

void require_finite(const Schedule& s) {
    if (s.kind != HorizonKind::FINITE) throw std::invalid_argument("finite schedule required");
}

// Prefer the lower rate, then the lower switch cost, then the incumbent.
bool cheaper(const Mode& a, const Mode& b) {
    if (a.cost_rate != b.cost_rate) return a.cost_rate < b.cost_rate;
    return a.switch_cost < b.switch_cost;
}

}  // namespace

Schedule make_angular(const System& sys, const Schedule& s) {
    require_finite(s);
    Schedule in = drop_zero_actions(s);
    Schedule out = in;
    out.actions.clear();
    for (const auto& a : in.actions) {
        if (!out.actions.empty()) {
            auto& last = out.actions.back();
            const auto& ml = sys.mode(last.mode);
            const auto& ma = sys.mode(a.mode);
            if (ml.slope == ma.slope) {
                if (cheaper(ma, ml)) last.mode = a.mode;
                last.duration += a.duration;
                continue;
            }
        }
        out.actions.push_back(a);
    }
    return out;
}

Schedule hoist_zero_modes(const System& sys, const Schedule& s) {
    require_finite(s);
    const Mode* best = nullptr;
    Rational zero_time = 0;
    bool any = false;
    for (const auto& a : s.actions) {
        if (!sys.is_zero(a.mode)) continue;
        any = true;
        zero_time += a.duration;
        const auto& m = sys.mode(a.mode);
        if (a.duration > 0 && (!best || cheaper(m, *best))) best = &m;
    }
    if (!any) return s;
    Schedule out = s;
    out.actions.clear();
    if (best && zero_time > 0) out.actions.push_back({best->id, zero_time});
    for (const auto& a : s.actions)
        if (!sys.is_zero(a.mode) && a.duration > 0) out.actions.push_back(a);
    return out;
}

mpz_class interleave_count(const Rational& t_star, const Rational& max_norm, const Rational& eps) {
    return floor_z(t_star * max_norm / eps) + 1;
}

Schedule concretize(const System& sys, const AbstractSchedule& tau, const Rational& eps) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    if (!is_safe(sys, tau)) throw std::invalid_argument("abstract schedule is not limit-safe");
    Rational max_norm = 0;
    for (const auto& id : sys.star_modes()) max_norm = rmax(max_norm, norm_inf(sys.mode(id).slope));

    Schedule out;
    for (const auto& st : tau.steps) {
        if (!st.abstract) {
            out.actions.push_back(st.action);
            continue;
        }
        std::vector<TimedAction> parts;
        Rational t_star = 0;
        for (const auto& [id, t] : st.times) {
            if (t <= 0) continue;
            parts.push_back({id, t});
            t_star += t;
        }
        if (parts.empty()) continue;
        if (parts.size() == 1) {
            out.actions.push_back(parts.front());
            continue;
        }
        mpz_class l = interleave_count(t_star, max_norm, eps);
        Rational lq(l);
        for (auto& p : parts) p.duration /= lq;
        for (mpz_class r = 0; r < l; ++r)
            for (const auto& p : parts) out.actions.push_back(p);
    }
    return out;
}

}  // namespace mms
