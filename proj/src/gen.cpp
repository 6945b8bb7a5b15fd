#include "mms/gen.hpp"

#include <stdexcept>

namespace mms {

namespace {

Rational frac(Rng& rng, long num_lo, long num_hi, long den_max) {
    long num = rng.range(num_lo, num_hi);
    Rational q(num, rng.range(1, den_max));
    q.canonicalize();
    return q;
}

Mode make_mode(const std::string& id, Vec slope, Rational rate, Rational sw) {
    Mode m{id, std::move(slope), std::move(rate), std::move(sw)};
    m.cost_rate.canonicalize();
    m.switch_cost.canonicalize();
    for (auto& a : m.slope) a.canonicalize();
    return m;
}

Instance small_1d(Rng& rng) {
    Instance in;
    System& s = in.sys;
    s.dimension = 1;
    Rational lo = frac(rng, 0, 2, 2);
    Rational height = frac(rng, 1, 8, 4);
    s.v_min = {lo};
    s.v_max = {lo + height};
    // Start on an eighth point of the box or on its ceiling.
    long eighths = floor_z(height * 8).get_si();
    long k = rng.range(0, eighths + 1);
    Rational start(k, 8);
    start.canonicalize();
    s.v_0 = {k > eighths ? lo + height : lo + start};
    long n = rng.range(2, 4);
    for (long i = 0; i < n; ++i) {
        Rational slope;
        long kind = rng.range(0, 9);
        if (kind < 4) slope = frac(rng, 1, 8, 8);
        else if (kind < 8) slope = -frac(rng, 1, 8, 8);
        else slope = 0;
        s.modes.push_back(make_mode("m" + std::to_string(i + 1), {slope}, frac(rng, 0, 8, 8), frac(rng, 0, 8, 8)));
    }
    in.t_max = frac(rng, 1, 16, 4);
    return in;
}

Instance grid_1d(Rng& rng) {
    Instance in;
    System& s = in.sys;
    s.dimension = 1;
    long height = rng.chance(50) ? 2 : 4;
    s.v_min = {Rational(0)};
    s.v_max = {Rational(height)};
    s.v_0 = {Rational(rng.range(0, height))};
    static const long slopes[] = {-2, -1, 1, 2};
    long n = rng.range(2, 4);
    for (long i = 0; i < n; ++i) {
        long a;
        // The first two modes guarantee one up and one down direction.
        if (i == 0) a = rng.range(1, 2);
        else if (i == 1) a = -rng.range(1, 2);
        else a = rng.chance(20) ? 0 : slopes[rng.range(0, 3)];
        s.modes.push_back(make_mode("m" + std::to_string(i + 1), {Rational(a)}, Rational(rng.range(0, 5)),
                                    Rational(rng.range(0, 3))));
    }
    in.t_max = Rational(rng.range(1, height == 2 ? 5 : 8));
    return in;
}

Instance small_2d(Rng& rng) {
    Instance in;
    System& s = in.sys;
    s.dimension = 2;
    s.v_min = {Rational(0), Rational(0)};
    s.v_max = {Rational(rng.range(1, 3)), Rational(rng.range(1, 3))};
    s.v_0 = {Rational(rng.range(0, s.v_max[0].get_num().get_si())), Rational(rng.range(0, s.v_max[1].get_num().get_si()))};
    long n = rng.range(2, 4);
    for (long i = 0; i < n; ++i) {
        Vec slope{Rational(rng.range(-1, 1)), Rational(rng.range(-1, 1))};
        Rational sw = rng.chance(50) ? Rational(0) : Rational(rng.range(1, 3));
        s.modes.push_back(make_mode("m" + std::to_string(i + 1), slope, Rational(rng.range(0, 4)), sw));
    }
    in.t_max = Rational(rng.range(1, 4));
    return in;
}

}  // namespace

bool known_profile(const std::string& p) { return p == "1d-small" || p == "1d-grid" || p == "2d-small"; }

Instance generate(const std::string& profile, std::uint64_t seed) {
    Rng rng(seed);
    if (profile == "1d-small") return small_1d(rng);
    if (profile == "1d-grid") return grid_1d(rng);
    if (profile == "2d-small") return small_2d(rng);
    throw std::invalid_argument("unknown profile " + profile);
}

Schedule random_safe_schedule(const System& sys, Rng& rng, std::size_t length) {
    if (sys.dimension != 1) throw std::invalid_argument("one-dimensional system required");
    const Rational &lo = sys.v_min[0], &hi = sys.v_max[0];
    Rational v = sys.v_0[0];
    Schedule s;
    std::size_t guard = 0;
    while (s.actions.size() < length && guard++ < 50 * length) {
        const Mode& m = sys.modes[static_cast<std::size_t>(rng.range(0, static_cast<long>(sys.modes.size()) - 1))];
        const Rational& a = m.slope[0];
        Rational room;
        if (a > 0) room = (hi - v) / a;
        else if (a < 0) room = (lo - v) / a;
        else room = (hi - lo) / 2;
        if (room <= 0) continue;
        Rational part(rng.range(1, 7), 8);
        part.canonicalize();
        Rational d = rng.chance(45) ? room : room * part;
        s.actions.push_back({m.id, d});
        v += a * d;
    }
    return s;
}

Instance worked_example_instance(Schedule& schedule) {
    // Figure coordinates shifted so that t = 0 and v_min = 0, rounded to three decimals.
    static const char* pts[][2] = {
        {"0", "1.08"},      {"0.96", "2.48"},   {"3.251", "3.997"}, {"4.302", "3.33"},  {"5.657", "1.004"},
        {"6.25", "2.22"},   {"7.234", "0.964"}, {"7.5", "2"},       {"8.5", "3"},       {"12.5", "3.5"},
        {"12.936", "2.339"}, {"17.365", "0.863"}, {"18", "3.633"},
    };
    Instance in;
    System& s = in.sys;
    s.dimension = 1;
    s.v_min = {Rational(0)};
    s.v_max = {Rational(9, 2)};
    s.v_0 = {parse_rational(pts[0][1])};
    schedule = Schedule{};
    // The figure carries no costs. This table was picked so that the normalizer's
    // deterministic pairing order ends in the same shape as the final figure.
    static const int rate[12] = {0, 1, 3, 1, 0, 0, 0, 2, 1, 1, 3, 1};
    static const int sw[12] = {1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 1, 1};
    for (std::size_t p = 0; p + 1 < 13; ++p) {
        Rational dt = parse_rational(pts[p + 1][0]) - parse_rational(pts[p][0]);
        Rational dv = parse_rational(pts[p + 1][1]) - parse_rational(pts[p][1]);
        std::string id = "w" + std::to_string(p + 1);
        Rational slope = dv / dt;
        s.modes.push_back(make_mode(id, {slope}, Rational(rate[p]), Rational(sw[p])));
        schedule.actions.push_back({id, dt});
    }
    in.t_max = 18;
    return in;
}

System example1_system() {
    System s;
    s.dimension = 2;
    s.v_min = {Rational(0), Rational(0)};
    s.v_max = {Rational(1), Rational(1)};
    s.v_0 = {Rational(0), Rational(0)};
    s.modes.push_back(make_mode("M1", {Rational(1), Rational(1)}, Rational(1), Rational(0)));
    s.modes.push_back(make_mode("M2", {Rational(1), Rational(-1)}, Rational(0), Rational(0)));
    s.modes.push_back(make_mode("M3", {Rational(-1), Rational(1)}, Rational(0), Rational(0)));
    return s;
}

}  // namespace mms
