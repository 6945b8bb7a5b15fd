#include "helpers.hpp"
#include "oracles.hpp"

#include "mms/gen.hpp"
#include "mms/solvernd.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mms;
using th::act;
using th::q;

namespace {

std::vector<std::string> ids(const System& sys) {
    std::vector<std::string> out;
    for (const auto& m : sys.modes) out.push_back(m.id);
    return out;
}

System plane(Vec v0, const std::vector<mms::Mode>& modes, Rational hi = 1) {
    System s;
    s.dimension = 2;
    s.v_min = {q(0), q(0)};
    s.v_max = {hi, hi};
    s.v_0 = std::move(v0);
    s.modes = modes;
    return s;
}

}  // namespace

TEST_SUITE("solvernd") {

TEST_CASE("mode pruning") {
    System stuck = th::line(0, 1, 1, {{"u", 1, 0, 1}});
    CHECK(prune_unsafe_modes(stuck).first.modes.empty());

    auto [ex, ladder] = prune_unsafe_modes(example1_system());
    CHECK(ids(ex) == std::vector<std::string>{"M1", "M2", "M3"});
    REQUIRE(!ladder.levels.empty());
    // All three modes are free to switch, so M* is everything.
    CHECK(ladder.levels.front().size() == 3);

    // A corner start where only one direction opens the way for the others.
    System steps = plane({q(0), q(0)}, {th::mode("a", {q(1), q(0)}, 0, 1), th::mode("b", {q(0), q(-1)}, 0, 1),
                                        th::mode("c", {q(-1), q(1)}, 0, 1)});
    ModeLadder l = build_ladder(steps, steps.v_0);
    REQUIRE(l.levels.size() >= 2);
    CHECK(l.levels[0].empty());
    CHECK(std::find(l.levels[1].begin(), l.levels[1].end(), "a") != l.levels[1].end());
    CHECK(l.levels.back().size() == 3);
}

TEST_CASE("horizon pruning") {
    System ex = example1_system();
    CHECK(ids(prune_by_horizon(ex, q(1000))) == ids(prune_unsafe_modes(ex).first));

    // Every mode climbs, so no schedule of length 2 fits in a unit box.
    System climb = th::line(0, 1, 0, {{"u", 1, 0, 1}, {"v", 2, 0, 0}});
    CHECK(prune_by_horizon(climb, q(2)).modes.empty());
    CHECK(prune_by_horizon(climb, q(1, 2)).modes.size() == 2);
}

TEST_CASE("pruning loses no limit-safe schedule") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Instance in = generate("2d-small", seed);
        oracle::GridLimitSafe full(in.sys, in.t_max, q(1, 2));
        System a = prune_unsafe_modes(in.sys).first;
        System b = prune_by_horizon(in.sys, in.t_max);
        INFO("seed " << seed);
        for (const System* p : {&a, &b}) {
            if (p->modes.empty()) {
                CHECK_FALSE(full.best(-1));
                continue;
            }
            oracle::GridLimitSafe cut(*p, in.t_max, q(1, 2));
            CHECK(cut.best(-1).has_value() == full.best(-1).has_value());
            CHECK(cut.best(2) == full.best(2));
        }
    }
}

TEST_CASE("easy targets") {
    System sym = th::line(0, 2, 0, {{"u", 1, 0, 0}, {"d", -1, 0, 0}});
    auto t = find_easy_target(sym, q(4));
    REQUIRE(t);
    CHECK(t->border_coords.empty());
    CHECK(t->v_end == Vec{q(1)});
    CHECK(t->clearance == q(1));

    // The second coordinate only grows, at unit speed, for the whole horizon.
    System up = plane({q(0), q(0)}, {th::mode("a", {q(1), q(1)}, 0, 0), th::mode("b", {q(-1), q(1)}, 0, 0)});
    auto u = find_easy_target(up, q(1));
    REQUIRE(u);
    CHECK(u->border_coords == std::vector<std::size_t>{1});
    CHECK(u->v_end[1] == q(1));

    for (Rational tm : {q(1, 3), q(1), q(7)}) {
        auto e = find_easy_target(example1_system(), tm);
        REQUIRE(e);
        CHECK(e->border_coords.empty());
    }

    CHECK_FALSE(find_easy_target(th::line(0, 1, 0, {{"u", 1, 0, 0}}), q(2)));
}

TEST_CASE("limit-safe schedule for the two-dimensional example") {
    System ex = example1_system();
    auto r = limit_safe_schedule(ex, q(1));
    REQUIRE(r);
    CHECK(r->cost == 0);
    CHECK(total_cost(ex, r->schedule) == 0);
    CHECK(is_safe(ex, r->schedule));
    CHECK(r->schedule.horizon() == q(1));
    CHECK(r->construction_found);
    Schedule c = concretize(ex, r->schedule, q(1, 100));
    CHECK(is_eps_safe(ex, c, q(1, 100)));
    CHECK(total_cost(ex, c) == 0);

    json j = report_json(r, 2.0);
    CHECK(j["status"] == "OK");
    CHECK(j.contains("mode_ladder"));
    CHECK(j.contains("v_end"));
    CHECK(j["L"].is_null());
}

TEST_CASE("a pinned corner has no schedule") {
    System corner = plane({q(1), q(1)}, {th::mode("a", {q(1), q(0)}, 0, 1), th::mode("b", {q(1), q(1)}, 1, 2)});
    for (Rational tm : {q(1, 100), q(1), q(5)}) CHECK_FALSE(limit_safe_schedule(corner, tm));
    CHECK(report_json(std::optional<LimitSafeResult>{}, 0)["status"] == "NO_SCHEDULE");
}

TEST_CASE("limit-safe verdicts match the grid") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Instance in = generate("2d-small", seed);
        auto r = limit_safe_schedule(in.sys, in.t_max);
        oracle::GridLimitSafe g(in.sys, in.t_max, q(1, 2));
        INFO("seed " << seed);
        CHECK(r.has_value() == g.best(-1).has_value());
        if (!r) continue;
        CHECK(r->construction_found);
        CHECK(is_safe(in.sys, r->schedule));
        CHECK(r->schedule.horizon() == in.t_max);
        CHECK(total_cost(in.sys, r->schedule) == r->cost);
        // The construction is a genuine witness on its own.
        REQUIRE(r->forward);
        REQUIRE(r->backward);
        Schedule c = concretize(in.sys, r->schedule, q(1, 50));
        CHECK(is_eps_safe(in.sys, c, q(1, 50)));
        CHECK(total_cost(in.sys, c) == r->cost);
        CHECK(c.horizon() == in.t_max);
    }
}

TEST_CASE("reach between two states") {
    System ex = example1_system();
    Vec mid{q(1, 2), q(1, 2)};
    auto a = reach_limit_safe(ex, ex.v_0, mid, q(1));
    REQUIRE(a);
    CHECK(is_safe(ex, *a));
    CHECK(a->horizon() == q(1));
    CHECK(run_of(ex, *a).states.back() == mid);
    // A state not reachable in time.
    CHECK_FALSE(reach_limit_safe(ex, ex.v_0, mid, q(1, 4)));
}

TEST_CASE("optimal reach") {
    System line = th::line(0, 5, 0, {{"u", 1, 2, 0}, {"d", -1, 3, 0}});
    auto none = optimal_reach(line, {q(1)}, {q(1)}, q(1));
    REQUIRE(none);
    CHECK(none->actions.empty());

    auto three = optimal_reach(line, {q(0)}, {q(3)}, q(1));
    REQUIRE(three);
    CHECK(three->horizon() == q(3));
    CHECK(three->size() == 3);
    CHECK(total_cost(line, *three) == q(6));

    // Two modes in the plane against vertex enumeration of the same program.
    System two = plane({q(0), q(0)}, {th::mode("a", {q(2), q(1)}, 3, 0), th::mode("b", {q(1), q(3)}, 1, 0),
                                      th::mode("c", {q(1), q(1)}, 2, 0)}, q(10));
    Vec to{q(5), q(5)};
    auto r = optimal_reach(two, two.v_0, to, q(1));
    REQUIRE(r);
    CHECK(run_of(two, *r).states.back() == to);
    std::vector<std::vector<Rational>> g{{2, 1, 1}, {-2, -1, -1}, {1, 3, 1}, {-1, -3, -1}, {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
    std::vector<Rational> h{5, -5, 5, -5, 0, 0, 0};
    auto v = oracle::enumerate_vertices(g, h, {3, 1, 2});
    REQUIRE(v.feasible);
    CHECK(total_cost(two, *r) == v.best);

    System paid = th::line(0, 5, 0, {{"u", 1, 2, 1}});
    CHECK_THROWS(optimal_reach(paid, {q(0)}, {q(1)}, q(1)));
}

TEST_CASE("optimal limit-safe schedules") {
    auto ex = optimal_limit_safe(example1_system(), q(1), 0);
    REQUIRE(ex);
    CHECK(ex->cost == 0);
    CHECK(is_safe(example1_system(), ex->schedule));

    // No free modes and a moving start: at least one concrete action is needed.
    System moving = th::line(0, 2, 1, {{"u", 1, 1, 1}, {"d", -1, 1, 1}});
    CHECK_FALSE(optimal_limit_safe(moving, q(1, 2), 0));
    auto one = optimal_limit_safe(moving, q(1, 2), 1);
    REQUIRE(one);
    CHECK(one->cost == q(3, 2));
    CHECK_THROWS(optimal_limit_safe(moving, q(1), -1));
    CHECK(report_json(one, 1, 0)["L"] == 1);
}

TEST_CASE("optimal limit-safe equals the grid optimum") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Instance in = generate("2d-small", seed);
        oracle::GridLimitSafe g(in.sys, in.t_max, q(1, 12));
        for (int L = 0; L <= 3; ++L) {
            auto o = optimal_limit_safe(in.sys, in.t_max, L);
            auto b = g.best(L);
            INFO("seed " << seed << " L " << L);
            REQUIRE(o.has_value() == b.has_value());
            if (!o) continue;
            CHECK(o->cost == *b);
            CHECK(is_safe(in.sys, o->schedule));
            CHECK(o->schedule.horizon() == in.t_max);
        }
    }
}

TEST_CASE("rounding onto a coarse grid") {
    System sys = th::line(0, 10, 0, {{"u", 2, 0, 0}, {"d", -1, 0, 0}});
    std::vector<TimedAction> a;
    for (int i = 0; i < 5; ++i) {
        a.push_back(act("u", q(1, 3)));
        a.push_back(act("d", q(1, 7)));
    }
    Schedule s = finite_schedule(a);
    CHECK(rounding_step(sys, s, q(1, 5)) == q(1, 100));

    // Two actions: the step is 1/20.
    Schedule grid = finite_schedule({act("u", q(3, 20)), act("d", q(7, 20))});
    CHECK(rounding_step(sys, grid, q(1, 5)) == q(1, 20));
    Schedule same = round_to_space(sys, grid, q(1, 5));
    CHECK(to_json(same) == to_json(grid));

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Instance in = generate("1d-small", seed);
        Rng rng(seed + 3);
        Schedule r = random_safe_schedule(in.sys, rng, 2 + seed % 8);
        Rational eps = q(1, 1 + static_cast<long>(seed % 20));
        Schedule out = round_to_space(in.sys, r, eps);
        INFO("seed " << seed);
        CHECK(is_eps_safe(in.sys, out, eps));
        CHECK(out.horizon() == r.horizon());
        Rational d = rounding_step(in.sys, r, eps);
        if (d == 0) continue;
        for (std::size_t i = 0; i + 1 < out.size(); ++i) CHECK(is_integer(out.actions[i].duration / d));
    }
}

TEST_CASE("negation and reversal") {
    System ex = example1_system();
    System n = negated(ex);
    CHECK(n.modes[0].slope == Vec{q(-1), q(-1)});
    CHECK(n.v_0 == ex.v_0);
    AbstractSchedule s;
    AbstractStep one;
    one.abstract = false;
    one.action = act("M1", q(1, 4));
    AbstractStep two;
    two.times = {{"M2", q(1, 8)}};
    s.steps = {one, two};
    AbstractSchedule r = reversed(s);
    REQUIRE(r.steps.size() == 2);
    CHECK(r.steps[0].abstract);
    CHECK_FALSE(r.steps[1].abstract);
    CHECK(ladder_to_json(ModeLadder{{{"M1"}, {"M1", "M2"}}}).size() == 2);
}

}  // TEST_SUITE
