#include "mms/transform.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mms {

namespace {

void require_1d(const System& sys) {
    if (sys.dimension != 1) throw std::invalid_argument("one-dimensional system required");
}

void require_finite(const Schedule& s) {
    if (s.kind != HorizonKind::FINITE) throw std::invalid_argument("finite schedule required");
}

const Rational& lo_of(const System& sys) { return sys.v_min[0]; }
const Rational& hi_of(const System& sys) { return sys.v_max[0]; }

Rational slope_at(const System& sys, const Schedule& s, std::size_t p) {
    return sys.mode(s.actions.at(p).mode).slope[0];
}

std::vector<Rational> states_of(const System& sys, const Schedule& s) {
    std::vector<Rational> v{sys.v_0[0]};
    for (std::size_t p = 0; p < s.actions.size(); ++p) v.push_back(v.back() + slope_at(sys, s, p) * s.actions[p].duration);
    return v;
}

// Collects constraints c0 + c1 * t >= 0 into a closed interval.
struct Bounds {
    std::optional<Rational> lo, hi;
    bool empty = false;

    void at_least_zero(const Rational& c0, const Rational& c1) {
        if (c1 > 0) {
            Rational b = -c0 / c1;
            if (!lo || b > *lo) lo = b;
        } else if (c1 < 0) {
            Rational b = c0 / -c1;
            if (!hi || b < *hi) hi = b;
        } else if (c0 < 0) {
            empty = true;
        }
    }
    // lo <= c0 + c1 * t <= hi
    void within(const Rational& c0, const Rational& c1, const Rational& lower, const Rational& upper) {
        at_least_zero(c0 - lower, c1);
        at_least_zero(upper - c0, -c1);
    }
};

bool same(const Schedule& a, const Schedule& b) {
    if (a.actions.size() != b.actions.size()) return false;
    for (std::size_t p = 0; p < a.actions.size(); ++p)
        if (a.actions[p].mode != b.actions[p].mode || a.actions[p].duration != b.actions[p].duration) return false;
    return true;
}

std::string key_of(const Schedule& s) {
    std::string k;
    for (const auto& a : s.actions) k += a.mode + ':' + to_string(a.duration) + ';';
    return k;
}

// Pair-window duration changes per unit of horizon change t.
std::pair<Rational, Rational> pair_rates(const Rational& a1, const Rational& a2) {
    return {-a2 / (a1 - a2), a1 / (a1 - a2)};
}

}  // namespace

Trend trend_of(const System& sys, const std::string& mode) {
    require_1d(sys);
    const Rational& a = sys.mode(mode).slope[0];
    if (a > 0) return Trend::UP;
    if (a < 0) return Trend::DOWN;
    return Trend::FLAT;
}

Rational sweep_time(const System& sys, const std::string& mode) {
    const Rational& a = sys.mode(mode).slope.at(0);
    if (a == 0) throw std::invalid_argument("zero-mode has no sweep time");
    return (hi_of(sys) - lo_of(sys)) / rabs(a);
}

Rational sweep_cost(const System& sys, const std::string& mode) {
    const auto& m = sys.mode(mode);
    return m.switch_cost + m.cost_rate * sweep_time(sys, mode);
}

std::vector<LeapType> leap_types(const System& sys) {
    require_1d(sys);
    std::vector<LeapType> out;
    for (const auto& u : sys.modes) {
        if (u.slope[0] <= 0) continue;
        for (const auto& d : sys.modes) {
            if (d.slope[0] >= 0) continue;
            out.push_back({u.id, d.id, sweep_time(sys, u.id) + sweep_time(sys, d.id),
                           sweep_cost(sys, u.id) + sweep_cost(sys, d.id)});
        }
    }
    return out;
}

const char* to_string(WindowKind k) {
    switch (k) {
        case WindowKind::UP_UP: return "up-up";
        case WindowKind::UP_DOWN: return "up-down";
        case WindowKind::DOWN_UP: return "down-up";
        case WindowKind::DOWN_DOWN: return "down-down";
        case WindowKind::FLAT: return "flat";
        case WindowKind::LAST: return "last";
    }
    return "?";
}

namespace {

WindowKind window_kind_from(const std::string& s) {
    for (auto k : {WindowKind::UP_UP, WindowKind::UP_DOWN, WindowKind::DOWN_UP, WindowKind::DOWN_DOWN,
                   WindowKind::FLAT, WindowKind::LAST})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown window kind " + s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Pattern catalog. A segment is named by its trend and where it ends.

namespace {

enum Lab { L_FLAT, L_UP_INT, L_UP_TOP, L_DOWN_INT, L_DOWN_BOT, L_BAD };

struct Entry {
    char letter;
    const char* name;
    std::vector<Lab> labs;
};

const std::vector<Entry>& heads() {
    static const std::vector<Entry> h = {
        {'a', "flat+down", {L_FLAT, L_DOWN_BOT}},
        {'b', "down", {L_DOWN_BOT}},
        {'c', "partial-up+down", {L_UP_INT, L_DOWN_BOT}},
        {'d', "flat+up+down", {L_FLAT, L_UP_TOP, L_DOWN_BOT}},
        {'e', "up+down", {L_UP_TOP, L_DOWN_BOT}},
        {'f', "partial-down+up+down", {L_DOWN_INT, L_UP_TOP, L_DOWN_BOT}},
        {'g', "partial-up+up+down", {L_UP_INT, L_UP_TOP, L_DOWN_BOT}},
        {'h', "partial-down+down", {L_DOWN_INT, L_DOWN_BOT}},
        {'i', "up+partial-down+down", {L_UP_TOP, L_DOWN_INT, L_DOWN_BOT}},
        {'j', "empty", {}},
    };
    return h;
}

const std::vector<Entry>& tails() {
    static const std::vector<Entry> t = {
        {'a', "partial-up", {L_UP_INT}},
        {'b', "partial-up+up", {L_UP_INT, L_UP_TOP}},
        {'c', "up+partial-down+down", {L_UP_TOP, L_DOWN_INT, L_DOWN_BOT}},
        {'d', "up+partial-down", {L_UP_TOP, L_DOWN_INT}},
        {'e', "up", {L_UP_TOP}},
        {'f', "partial-up+down", {L_UP_INT, L_DOWN_BOT}},
        {'g', "partial-up+up+down", {L_UP_INT, L_UP_TOP, L_DOWN_BOT}},
        {'h', "partial-up+down+up", {L_UP_INT, L_DOWN_BOT, L_UP_TOP}},
        {'i', "up+partial-down+down+up", {L_UP_TOP, L_DOWN_INT, L_DOWN_BOT, L_UP_TOP}},
        {'j', "empty", {}},
    };
    return t;
}

const Entry* lookup(const std::vector<Entry>& table, char letter) {
    for (const auto& e : table)
        if (e.letter == letter) return &e;
    return nullptr;
}

const Entry* match(const std::vector<Entry>& table, const std::vector<Lab>& labs) {
    for (const auto& e : table)
        if (e.labs == labs) return &e;
    return nullptr;
}

}  // namespace

bool admissible(char head, char tail) {
    if (!lookup(heads(), head) || !lookup(tails(), tail)) return false;
    return tail == 'e' || tail == 'j' || head == 'b' || head == 'e' || head == 'j';
}

namespace {

std::vector<Seg> segs_of(const Entry* e) {
    if (!e) throw std::invalid_argument("unknown pattern letter");
    std::vector<Seg> out;
    for (Lab l : e->labs) out.push_back(static_cast<Seg>(l));
    return out;
}

}  // namespace

std::vector<Seg> head_segments(char h) { return segs_of(lookup(heads(), h)); }
std::vector<Seg> tail_segments(char t) { return segs_of(lookup(tails(), t)); }

const std::string& pattern_letters() {
    static const std::string letters = "abcdefghij";
    return letters;
}

const char* head_name(char h) {
    const Entry* e = lookup(heads(), h);
    return e ? e->name : "?";
}

const char* tail_name(char t) {
    const Entry* e = lookup(tails(), t);
    return e ? e->name : "?";
}

std::string PatternId::name() const { return std::string(1, head) + "/" + std::string(1, tail); }

std::optional<Sections> classify(const System& sys, const Schedule& in) {
    require_1d(sys);
    require_finite(in);
    Schedule s = drop_zero_actions(in);
    auto v = states_of(sys, s);
    const Rational &bot = lo_of(sys), &top = hi_of(sys);
    std::vector<Lab> labs;
    for (std::size_t p = 0; p < s.actions.size(); ++p) {
        Rational a = slope_at(sys, s, p);
        const Rational& end = v[p + 1];
        if (end < bot || end > top) return std::nullopt;
        if (a == 0) labs.push_back(L_FLAT);
        else if (a > 0) labs.push_back(end == top ? L_UP_TOP : (end == bot ? L_BAD : L_UP_INT));
        else labs.push_back(end == bot ? L_DOWN_BOT : (end == top ? L_BAD : L_DOWN_INT));
    }

    Sections out;
    std::size_t pos = 0;
    bool at_bottom = false;
    if (v[0] == bot) {
        // Starting on the floor: a leading flat action is a flat+down head whose down part is empty.
        if (!labs.empty() && labs[0] == L_FLAT) {
            out.pattern.head = 'a';
            pos = 1;
        }
        at_bottom = true;
    } else {
        auto first_bot = std::find(labs.begin(), labs.end(), L_DOWN_BOT);
        if (first_bot != labs.end()) {
            std::vector<Lab> head(labs.begin(), first_bot + 1);
            const Entry* e = match(heads(), head);
            if (!e) return std::nullopt;
            out.pattern.head = e->letter;
            pos = head.size();
            at_bottom = true;
        }
    }
    out.head_len = pos;
    if (at_bottom) {
        while (pos + 1 < labs.size() && labs[pos] == L_UP_TOP && labs[pos + 1] == L_DOWN_BOT) {
            ++out.leaps;
            pos += 2;
        }
    }
    std::vector<Lab> tail(labs.begin() + static_cast<long>(pos), labs.end());
    const Entry* t = match(tails(), tail);
    if (!t) return std::nullopt;
    out.pattern.tail = t->letter;
    out.tail_len = tail.size();
    if (!admissible(out.pattern.head, out.pattern.tail)) return std::nullopt;
    return out;
}

std::optional<PatternId> classify_pattern(const System& sys, const Schedule& s) {
    auto c = classify(sys, s);
    if (!c) return std::nullopt;
    return c->pattern;
}

// ---------------------------------------------------------------------------
// Cost-neutral reorderings.

Schedule rearrange(const System& sys, const Schedule& s, std::size_t i, std::size_t j,
                   const std::vector<std::size_t>& perm) {
    require_1d(sys);
    if (i > j || j >= s.actions.size()) throw std::invalid_argument("rearrange window out of range");
    const std::size_t n = j - i + 1;
    if (perm.size() != n) throw std::invalid_argument("permutation size does not match the window");
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t r = 0; r < n; ++r)
        if (sorted[r] != r) throw std::invalid_argument("not a permutation");
    Trend first = trend_of(sys, s.actions[i].mode);
    if (first == Trend::FLAT) throw std::invalid_argument("mixed trends in window");
    for (std::size_t p = i; p <= j; ++p)
        if (trend_of(sys, s.actions[p].mode) != first) throw std::invalid_argument("mixed trends in window");
    Schedule out = s;
    for (std::size_t r = 0; r < n; ++r) out.actions[i + r] = s.actions[i + perm[r]];
    return out;
}

Schedule shift(const System& sys, const Schedule& s, std::size_t i, std::size_t j, std::size_t l) {
    require_1d(sys);
    const std::size_t k = s.actions.size();
    if (!(i < j && j <= k && l <= k)) throw std::invalid_argument("shift indices out of range");
    if (l > i && l < j) throw std::invalid_argument("shift target inside the moved block");
    auto v = states_of(sys, s);
    if (v[i] != v[j] || v[i] != v[l]) throw std::invalid_argument("shift needs V_i = V_j = V_l");
    const auto& a = s.actions;
    auto seg = [&](std::size_t from, std::size_t to, std::vector<TimedAction>& dst) {
        dst.insert(dst.end(), a.begin() + static_cast<long>(from), a.begin() + static_cast<long>(to));
    };
    Schedule out = s;
    out.actions.clear();
    if (l >= j) {
        seg(0, i, out.actions);
        seg(j, l, out.actions);
        seg(i, j, out.actions);
        seg(l, k, out.actions);
    } else {
        seg(0, l, out.actions);
        seg(i, j, out.actions);
        seg(l, i, out.actions);
        seg(j, k, out.actions);
    }
    return out;
}

Schedule shift_down(const System& sys, const Schedule& s, std::size_t i, std::size_t j, std::size_t l) {
    require_1d(sys);
    const std::size_t k = s.actions.size();
    if (!(i <= j && j < k && l <= k)) throw std::invalid_argument("shift-down indices out of range");
    if (l > i && l <= j) throw std::invalid_argument("shift-down target inside the moved block");
    auto v = states_of(sys, s);
    if (v[i] != hi_of(sys) || v[j + 1] != hi_of(sys)) throw std::invalid_argument("shift-down block must start and end at v_max");
    if (v[l] != lo_of(sys)) throw std::invalid_argument("shift-down target must sit at v_min");
    // First lowest state inside the block; the rotation starts there.
    std::size_t q = i;
    for (std::size_t b = i + 1; b <= j; ++b)
        if (q == i || v[b] < v[q]) q = b;
    const auto& a = s.actions;
    std::vector<TimedAction> block(a.begin() + static_cast<long>(q), a.begin() + static_cast<long>(j + 1));
    block.insert(block.end(), a.begin() + static_cast<long>(i), a.begin() + static_cast<long>(q));
    Schedule out = s;
    out.actions.clear();
    auto seg = [&](std::size_t from, std::size_t to) {
        out.actions.insert(out.actions.end(), a.begin() + static_cast<long>(from), a.begin() + static_cast<long>(to));
    };
    if (l <= i) {
        seg(0, l);
        out.actions.insert(out.actions.end(), block.begin(), block.end());
        seg(l, i);
        seg(j + 1, k);
    } else {
        seg(0, i);
        seg(j + 1, l);
        out.actions.insert(out.actions.end(), block.begin(), block.end());
        seg(l, k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resize.

std::optional<WindowKind> pair_kind(const System& sys, const Schedule& s, std::size_t i) {
    require_1d(sys);
    if (i + 1 >= s.actions.size()) return std::nullopt;
    Rational a1 = slope_at(sys, s, i), a2 = slope_at(sys, s, i + 1);
    if (a1 == 0 || a2 == 0 || a1 == a2) return std::nullopt;
    if (a1 > 0) return a2 > 0 ? WindowKind::UP_UP : WindowKind::UP_DOWN;
    return a2 > 0 ? WindowKind::DOWN_UP : WindowKind::DOWN_DOWN;
}

namespace {

void check_window(const System& sys, const Schedule& s, const Window& w) {
    require_1d(sys);
    require_finite(s);
    const std::size_t k = s.actions.size();
    switch (w.kind) {
        case WindowKind::FLAT:
            if (w.position != 0 || k == 0 || slope_at(sys, s, 0) != 0)
                throw std::invalid_argument("flat window needs a leading zero-mode action");
            return;
        case WindowKind::LAST:
            if (k == 0 || w.position != k - 1 || slope_at(sys, s, k - 1) == 0)
                throw std::invalid_argument("last window needs a final non-flat action");
            return;
        default: {
            auto kind = pair_kind(sys, s, w.position);
            if (!kind || *kind != w.kind) throw std::invalid_argument("window is not a resizable pair");
        }
    }
}

}  // namespace

Interval resize_interval(const System& sys, const Schedule& s, const Window& w) {
    check_window(sys, s, w);
    auto v = states_of(sys, s);
    const auto& a = s.actions;
    Bounds b;
    switch (w.kind) {
        case WindowKind::FLAT:
            // The upper end is the horizon cap rather than a safety limit.
            return {-a[0].duration, s.horizon() - a[0].duration};
        case WindowKind::LAST: {
            std::size_t p = w.position;
            Rational slope = slope_at(sys, s, p);
            b.at_least_zero(a[p].duration, 1);
            b.within(v[p + 1], slope, lo_of(sys), hi_of(sys));
            break;
        }
        default: {
            std::size_t i = w.position;
            Rational a1 = slope_at(sys, s, i), a2 = slope_at(sys, s, i + 1);
            auto [x, z] = pair_rates(a1, a2);
            b.at_least_zero(a[i].duration, x);
            b.at_least_zero(a[i + 1].duration, z);
            b.within(v[i + 1], a1 * x, lo_of(sys), hi_of(sys));
        }
    }
    if (b.empty || !b.lo || !b.hi || *b.lo > *b.hi) return {Rational(0), Rational(0)};
    return {*b.lo, *b.hi};
}

Schedule resize_unchecked(const System& sys, const Schedule& s, const Window& w, const Rational& t) {
    check_window(sys, s, w);
    Schedule out = s;
    auto& a = out.actions;
    switch (w.kind) {
        case WindowKind::FLAT: a[0].duration += t; break;
        case WindowKind::LAST: a[w.position].duration += t; break;
        default: {
            auto [x, z] = pair_rates(slope_at(sys, s, w.position), slope_at(sys, s, w.position + 1));
            a[w.position].duration += x * t;
            a[w.position + 1].duration += z * t;
        }
    }
    return out;
}

Schedule resize(const System& sys, const Schedule& s, const Window& w, const Rational& t) {
    Interval iv = resize_interval(sys, s, w);
    if (t < iv.lo || t > iv.hi) throw std::invalid_argument("t outside max_interval");
    return resize_unchecked(sys, s, w, t);
}

Rational resize_cost_delta(const System& sys, const Schedule& s, const Window& w, const Rational& t) {
    check_window(sys, s, w);
    const auto& a = s.actions;
    switch (w.kind) {
        case WindowKind::FLAT: return sys.mode(a[0].mode).cost_rate * t;
        case WindowKind::LAST: return sys.mode(a[w.position].mode).cost_rate * t;
        default: {
            auto [x, z] = pair_rates(slope_at(sys, s, w.position), slope_at(sys, s, w.position + 1));
            return (sys.mode(a[w.position].mode).cost_rate * x + sys.mode(a[w.position + 1].mode).cost_rate * z) * t;
        }
    }
}

std::vector<Flexi> find_flexis(const System& sys, const Schedule& s) {
    require_1d(sys);
    require_finite(s);
    std::vector<Flexi> out;
    const std::size_t k = s.actions.size();
    auto consider = [&](const Window& w) {
        Interval iv = resize_interval(sys, s, w);
        if (iv.lo < 0 && iv.hi > 0) out.push_back({w, iv});
    };
    if (k > 0 && slope_at(sys, s, 0) == 0) consider({WindowKind::FLAT, 0});
    for (std::size_t i = 0; i + 1 < k; ++i)
        if (auto kind = pair_kind(sys, s, i)) consider({*kind, i});
    if (k > 0 && slope_at(sys, s, k - 1) != 0) consider({WindowKind::LAST, k - 1});
    return out;
}

// ---------------------------------------------------------------------------
// Wedge: translate the middle action of a triple while both ends stay put.

Schedule wedge(const System& sys, const Schedule& s, std::size_t i) {
    require_1d(sys);
    require_finite(s);
    if (i + 2 >= s.actions.size()) throw std::invalid_argument("wedge needs three actions");
    Trend t1 = trend_of(sys, s.actions[i].mode), t2 = trend_of(sys, s.actions[i + 1].mode),
          t3 = trend_of(sys, s.actions[i + 2].mode);
    if (t1 == Trend::FLAT || t2 == Trend::FLAT || t3 == Trend::FLAT) throw std::invalid_argument("wedge on a flat action");
    bool shape = (t1 == t2 && t2 != t3) || (t1 != t2 && t2 == t3);
    if (!shape) throw std::invalid_argument("wedge needs exactly two consecutive same-trend actions");
    auto v = states_of(sys, s);
    if (v[i] != v[i + 3]) throw std::invalid_argument("wedge needs equal outer states");

    Rational a1 = slope_at(sys, s, i), a2 = slope_at(sys, s, i + 1), a3 = slope_at(sys, s, i + 2);
    const auto& act = s.actions;
    Rational total = act[i].duration + act[i + 1].duration + act[i + 2].duration;
    // With the middle duration y, the first is x(y) = xa + xb*y and the last z(y) = za + zb*y.
    Rational xa = -a3 * total / (a1 - a3), xb = (a3 - a2) / (a1 - a3);
    Rational za = total - xa, zb = -1 - xb;
    Bounds b;
    b.at_least_zero(0, 1);
    b.at_least_zero(xa, xb);
    b.at_least_zero(za, zb);
    b.within(v[i] + a1 * xa, a1 * xb, lo_of(sys), hi_of(sys));
    b.within(v[i] + a1 * xa, a1 * xb + a2, lo_of(sys), hi_of(sys));
    if (b.empty || !b.lo || !b.hi) throw std::logic_error("wedge interval unbounded");

    const Rational &p1 = sys.mode(act[i].mode).cost_rate, &p2 = sys.mode(act[i + 1].mode).cost_rate,
                   &p3 = sys.mode(act[i + 2].mode).cost_rate;
    Rational rate = p1 * xb + p2 + p3 * zb;
    const Rational y0 = act[i + 1].duration;
    auto removes = [&](const Rational& y) { return y == 0 || xa + xb * y == 0 || za + zb * y == 0; };
    Rational y;
    if (rate < 0) y = *b.hi;
    else if (rate > 0) y = *b.lo;
    else {
        bool rl = removes(*b.lo), rh = removes(*b.hi);
        if (rl != rh) y = rl ? *b.lo : *b.hi;
        else y = rabs(*b.lo - y0) <= rabs(*b.hi - y0) ? *b.lo : *b.hi;
    }
    Schedule out = s;
    out.actions[i].duration = xa + xb * y;
    out.actions[i + 1].duration = y;
    out.actions[i + 2].duration = za + zb * y;
    return out;
}

// ---------------------------------------------------------------------------
// Normalization.

namespace {

Schedule cleanup(const System& sys, const Schedule& s) {
    Schedule cur = make_angular(sys, s);
    for (;;) {
        Schedule next = make_angular(sys, hoist_zero_modes(sys, cur));
        if (same(next, cur)) return cur;
        cur = next;
    }
}

// A run state strictly inside the box that can be moved, or a positive leading flat action.
struct Feature {
    bool flat = false;
    std::size_t state = 0;
    Rational horizon_rate;  // horizon change per unit of movement
};

std::vector<Feature> features(const System& sys, const Schedule& s) {
    std::vector<Feature> out;
    const std::size_t k = s.actions.size();
    auto v = states_of(sys, s);
    if (k >= 2 && slope_at(sys, s, 0) == 0 && s.actions[0].duration > 0) out.push_back({true, 0, Rational(1)});
    for (std::size_t j = 1; j <= k; ++j) {
        if (!(v[j] > lo_of(sys) && v[j] < hi_of(sys))) continue;
        Rational before = slope_at(sys, s, j - 1);
        if (before == 0) continue;
        Rational rate = 1 / before;
        if (j < k) {
            Rational after = slope_at(sys, s, j);
            if (after == 0 || after == before) continue;
            rate -= 1 / after;
        }
        out.push_back({false, j, rate});
    }
    return out;
}

struct PairMove {
    Schedule result;
    TraceStep step;
    bool ok = false;
};

// Moves two features against each other so the horizon stays fixed, to the
// cheaper end of the admissible range.
PairMove pair_move(const System& sys, const Schedule& s, const Feature& f1, const Feature& f2) {
    const std::size_t k = s.actions.size();
    auto v = states_of(sys, s);
    Vec e(k, Rational(0));
    std::vector<std::pair<std::size_t, Rational>> moved;  // state index, rate per unit s
    std::vector<std::pair<Window, Rational>> resizes;     // per unit s
    auto contribute = [&](const Feature& f, const Rational& u) {
        if (f.flat) {
            e[0] += u;
            resizes.push_back({{WindowKind::FLAT, 0}, u});
            return;
        }
        std::size_t j = f.state;
        e[j - 1] += u / slope_at(sys, s, j - 1);
        if (j < k) {
            e[j] -= u / slope_at(sys, s, j);
            resizes.push_back({{*pair_kind(sys, s, j - 1), j - 1}, f.horizon_rate * u});
        } else {
            resizes.push_back({{WindowKind::LAST, k - 1}, u / slope_at(sys, s, k - 1)});
        }
        moved.push_back({j, u});
    };
    contribute(f1, f2.horizon_rate);
    contribute(f2, -f1.horizon_rate);

    Bounds b;
    for (std::size_t p = 0; p < k; ++p) b.at_least_zero(s.actions[p].duration, e[p]);
    for (const auto& [j, g] : moved) b.within(v[j], g, lo_of(sys), hi_of(sys));
    PairMove out;
    if (b.empty || !b.lo || !b.hi || !(*b.lo < 0 && *b.hi > 0)) return out;

    Rational rate = 0;
    for (std::size_t p = 0; p < k; ++p) rate += sys.mode(s.actions[p].mode).cost_rate * e[p];
    auto removes = [&](const Rational& x) {
        for (std::size_t p = 0; p < k; ++p)
            if (e[p] != 0 && s.actions[p].duration + x * e[p] == 0) return true;
        return false;
    };
    Rational x;
    if (rate < 0) x = *b.hi;
    else if (rate > 0) x = *b.lo;
    else {
        bool rl = removes(*b.lo), rh = removes(*b.hi);
        if (rl != rh) x = rl ? *b.lo : *b.hi;
        else x = rabs(*b.lo) < rabs(*b.hi) ? *b.lo : *b.hi;
    }
    out.result = s;
    for (std::size_t p = 0; p < k; ++p) out.result.actions[p].duration += x * e[p];
    bool adjacent = !f1.flat && !f2.flat && (f2.state == f1.state + 1 || f1.state == f2.state + 1);
    out.step.op = adjacent ? "wedge" : "shrink-stretch";
    for (auto& [w, r] : resizes) out.step.resizes.push_back({w, r * x});
    out.ok = true;
    return out;
}

struct Move {
    Schedule result;
    TraceStep step;
};

std::vector<Move> relocations(const System& sys, const Schedule& s) {
    std::vector<Move> out;
    auto v = states_of(sys, s);
    std::vector<std::size_t> bots, tops;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] == lo_of(sys)) bots.push_back(j);
        if (v[j] == hi_of(sys)) tops.push_back(j);
    }
    for (const auto* list : {&bots, &tops}) {
        for (std::size_t a = 0; a + 1 < list->size(); ++a) {
            std::size_t i = (*list)[a], j = (*list)[a + 1];
            for (std::size_t l : *list) {
                if (l == i || l == j) continue;
                out.push_back({shift(sys, s, i, j, l), {"shift", {}, {i, j, l}}});
            }
        }
    }
    for (std::size_t a = 0; a + 1 < tops.size(); ++a) {
        std::size_t i = tops[a], j = tops[a + 1] - 1;
        for (std::size_t l : bots) {
            if (l > i && l <= j) continue;
            out.push_back({shift_down(sys, s, i, j, l), {"shift-down", {}, {i, j, l}}});
        }
    }
    return out;
}

constexpr std::size_t kSearchDepth = 3;
constexpr std::size_t kSearchNodes = 20000;

}  // namespace

Normalized normalize(const System& sys, const Schedule& s) {
    require_1d(sys);
    require_finite(s);
    if (!is_safe(sys, s)) throw std::invalid_argument("input unsafe");
    Normalized out;
    if (s.actions.size() < 3) {
        out.schedule = s;
        out.sections = classify(sys, s);
        out.short_form = true;
        return out;
    }
    auto tidy = [&](Schedule cur) {
        Schedule next = cleanup(sys, cur);
        if (!same(next, cur)) out.trace.push_back({"cleanup", {}, {}});
        return next;
    };
    Schedule cur = tidy(s);

    // Pair up flexible features, leftmost first, until at most one is left.
    // Overlapping neighbours (the wedge case) only go together once nothing else pairs.
    auto overlapping = [](const Feature& x, const Feature& y) {
        return !x.flat && !y.flat && (x.state + 1 == y.state || y.state + 1 == x.state);
    };
    for (std::size_t guard = 0; guard < 100000; ++guard) {
        auto fs = features(sys, cur);
        if (fs.size() < 2) break;
        bool moved = false;
        for (int pass = 0; pass < 2 && !moved; ++pass)
            for (std::size_t a = 0; a < fs.size() && !moved; ++a)
            for (std::size_t b = a + 1; b < fs.size() && !moved; ++b) {
                if (overlapping(fs[a], fs[b]) != (pass == 1)) continue;
                PairMove m = pair_move(sys, cur, fs[a], fs[b]);
                if (!m.ok) continue;
                out.trace.push_back(m.step);
                cur = tidy(m.result);
                moved = true;
            }
        if (!moved) break;
    }

    // Relocate loops (shift) and v_max blocks (shift-down) until the catalog matches.
    if (!classify(sys, cur)) {
        struct Node {
            Schedule s;
            std::vector<TraceStep> steps;
        };
        std::deque<std::pair<Node, std::size_t>> queue{{{cur, {}}, 0}};
        std::set<std::string> seen{key_of(cur)};
        std::optional<Node> found;
        while (!queue.empty() && !found && seen.size() < kSearchNodes) {
            auto [node, depth] = queue.front();
            queue.pop_front();
            if (depth >= kSearchDepth) continue;
            for (auto& mv : relocations(sys, node.s)) {
                Schedule next = cleanup(sys, mv.result);
                if (!seen.insert(key_of(next)).second) continue;
                Node child{next, node.steps};
                child.steps.push_back(mv.step);
                if (!same(next, mv.result)) child.steps.push_back({"cleanup", {}, {}});
                if (classify(sys, next)) {
                    found = child;
                    break;
                }
                queue.push_back({child, depth + 1});
            }
        }
        if (found) {
            cur = found->s;
            out.trace.insert(out.trace.end(), found->steps.begin(), found->steps.end());
        }
    }

    out.schedule = cur;
    out.sections = classify(sys, cur);
    out.short_form = cur.actions.size() < 3 && !out.sections;
    return out;
}

Schedule replay(const System& sys, const Schedule& s, const std::vector<TraceStep>& trace) {
    Schedule cur = s;
    for (const auto& st : trace) {
        if (st.op == "cleanup") cur = cleanup(sys, cur);
        else if (st.op == "shift") cur = shift(sys, cur, st.args.at(0), st.args.at(1), st.args.at(2));
        else if (st.op == "shift-down") cur = shift_down(sys, cur, st.args.at(0), st.args.at(1), st.args.at(2));
        else if (st.op == "shrink-stretch" || st.op == "wedge") {
            for (const auto& [w, t] : st.resizes) cur = resize_unchecked(sys, cur, w, t);
        } else {
            throw std::invalid_argument("unknown trace op " + st.op);
        }
    }
    return cur;
}

json trace_to_json(const std::vector<TraceStep>& trace) {
    json a = json::array();
    for (const auto& st : trace) {
        json j{{"op", st.op}};
        if (!st.resizes.empty()) {
            j["resizes"] = json::array();
            for (const auto& [w, t] : st.resizes)
                j["resizes"].push_back({{"window", to_string(w.kind)}, {"position", w.position}, {"t", rational_to_json(t)}});
        }
        if (!st.args.empty()) j["args"] = st.args;
        a.push_back(j);
    }
    return a;
}

std::vector<TraceStep> trace_from_json(const json& j) {
    std::vector<TraceStep> out;
    for (const auto& e : j) {
        TraceStep st;
        st.op = e.at("op").get<std::string>();
        if (e.contains("resizes"))
            for (const auto& r : e.at("resizes"))
                st.resizes.push_back({{window_kind_from(r.at("window").get<std::string>()), r.at("position").get<std::size_t>()},
                                      rational_from_json(r.at("t"))});
        if (e.contains("args")) st.args = e.at("args").get<std::vector<std::size_t>>();
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace mms
