#include "helpers.hpp"
#include "transform_props.hpp"

#include "mms/gen.hpp"
#include "mms/transform.hpp"

#include <doctest.h>

using namespace mms;
using th::act;
using th::q;

namespace {

// Box [0,4] with two ups, two downs and a zero mode.
System toy(Rational v0) {
    return th::line(0, 4, v0,
                    {{"u1", 2, 1, 1}, {"u2", 1, 2, 1}, {"d1", -1, 0, 1}, {"d2", -2, 1, 2}, {"z", 0, 1, 0}});
}

std::vector<std::string> modes_of(const Schedule& s) {
    std::vector<std::string> m;
    for (const auto& a : s.actions) m.push_back(a.mode);
    return m;
}

// Up to the ceiling, a partial descent, back up to the ceiling, never at the floor.
bool no_floor_shape(const System& sys, const Schedule& s) {
    if (s.size() != 3) return false;
    auto v = props::states(sys, s);
    const Rational &lo = sys.v_min[0], &hi = sys.v_max[0];
    return v[0] > lo && v[1] == hi && v[2] > lo && v[2] < hi && v[3] == hi;
}

}  // namespace

TEST_SUITE("transform") {

TEST_CASE("leap types and sweeps") {
    System sys = toy(0);
    CHECK(sweep_time(sys, "u1") == q(2));
    CHECK(sweep_cost(sys, "u1") == q(3));
    CHECK_THROWS(sweep_time(sys, "z"));
    auto leaps = leap_types(sys);
    REQUIRE(leaps.size() == 4);
    CHECK(leaps[0].up == "u1");
    CHECK(leaps[0].down == "d1");
    CHECK(leaps[0].time == q(6));
    CHECK(leaps[0].cost == q(4));
}

TEST_CASE("the catalog has 44 admissible pairs") {
    int n = 0;
    for (char h : pattern_letters())
        for (char t : pattern_letters()) n += admissible(h, t);
    CHECK(n == 44);
    CHECK(std::string(head_name('e')) == "up+down");
    CHECK(std::string(tail_name('b')) == "partial-up+up");
    CHECK(head_segments('j').empty());
    CHECK(tail_segments('e') == std::vector<Seg>{Seg::UP_TOP});
}

TEST_CASE("rearrange inside a monotone window") {
    System sys = toy(0);
    Schedule s = finite_schedule({act("u1", q(1, 2)), act("u2", q(1)), act("u1", q(1))});
    Schedule out = rearrange(sys, s, 0, 2, {2, 0, 1});
    CHECK(modes_of(out) == std::vector<std::string>{"u1", "u1", "u2"});
    auto a = props::states(sys, s), b = props::states(sys, out);
    CHECK(a.back() == b.back());
    CHECK(a[1] != b[1]);
    CHECK(total_cost(sys, out) == total_cost(sys, s));

    Schedule same = rearrange(sys, s, 0, 2, {0, 1, 2});
    CHECK(modes_of(same) == modes_of(s));

    Schedule mixed = finite_schedule({act("u1", q(1)), act("d1", q(1))});
    CHECK_THROWS(rearrange(sys, mixed, 0, 1, {1, 0}));
    CHECK_THROWS(rearrange(sys, s, 0, 2, {0, 0, 1}));
}

TEST_CASE("shift swaps complete leaps") {
    System sys = toy(0);
    Schedule s = finite_schedule(
        {act("u1", q(2)), act("d1", q(4)), act("u2", q(4)), act("d2", q(2)), act("u1", q(1))});
    Schedule out = shift(sys, s, 0, 2, 4);
    CHECK(modes_of(out) == std::vector<std::string>{"u2", "d2", "u1", "d1", "u1"});
    CHECK(total_cost(sys, out) == total_cost(sys, s));
    CHECK(is_safe(sys, out));

    CHECK(modes_of(shift(sys, s, 0, 2, 0)) == modes_of(s));
    CHECK_THROWS(shift(sys, s, 0, 4, 2));  // target inside the block
    CHECK_THROWS(shift(sys, s, 0, 1, 4));  // V_0 != V_1
}

TEST_CASE("shift-down rotates the block to its lowest state") {
    System sys = toy(4);
    Schedule s = finite_schedule({act("d1", q(2)), act("u2", q(2)), act("d2", q(2)), act("u1", q(1))});
    Schedule out = shift_down(sys, s, 0, 1, 3);
    CHECK(modes_of(out) == std::vector<std::string>{"d2", "u2", "d1", "u1"});
    CHECK(is_safe(sys, out));
    CHECK(total_cost(sys, out) == total_cost(sys, s));

    // A block that never leaves the ceiling is relocated as is.
    Schedule z = finite_schedule({act("z", q(1)), act("d2", q(2)), act("u1", q(1))});
    CHECK(modes_of(shift_down(sys, z, 0, 0, 2)) == std::vector<std::string>{"d2", "z", "u1"});
    CHECK_THROWS(shift_down(sys, z, 0, 0, 1));  // V_1 is not the floor
}

TEST_CASE("resize an up-down pair") {
    System sys = toy(0);
    Schedule s = finite_schedule({act("u1", q(1)), act("d1", q(1))});
    Window w{WindowKind::UP_DOWN, 0};
    REQUIRE(pair_kind(sys, s, 0) == WindowKind::UP_DOWN);
    Schedule out = resize(sys, s, w, q(3, 10));
    CHECK(out.actions[0].duration == q(11, 10));
    CHECK(out.actions[1].duration == q(12, 10));
    CHECK(out.horizon() == s.horizon() + q(3, 10));
    CHECK(props::states(sys, out).back() == props::states(sys, s).back());

    Interval iv = resize_interval(sys, s, w);
    CHECK(iv.lo == q(-3, 2));
    CHECK(iv.hi == q(3));
    CHECK(modes_of(resize(sys, s, w, 0)) == modes_of(s));
    CHECK(resize(sys, s, w, 0).actions[0].duration == q(1));
    CHECK_THROWS(resize(sys, s, w, q(4)));
    CHECK(resize_cost_delta(sys, s, w, q(3)) == q(1));  // rate 1 on u1, x = 1/3
}

TEST_CASE("flexi windows") {
    System sys = toy(0);
    Schedule s = finite_schedule({act("u1", q(1, 2)), act("u2", q(1))});
    auto f = find_flexis(sys, s);
    REQUIRE(!f.empty());
    CHECK(f[0].window.kind == WindowKind::UP_UP);
    CHECK(f[0].max_interval.lo == q(-1, 2));
    CHECK(f[0].max_interval.hi == q(1, 2));

    Schedule pinned = finite_schedule({act("u1", q(2)), act("d1", q(4))});
    CHECK(find_flexis(sys, pinned).empty());
}

TEST_CASE("wedge pushes the middle action to an extreme") {
    System sys = toy(0);
    Schedule s = finite_schedule({act("u1", q(1)), act("u2", q(1)), act("d1", q(3))});
    Schedule out = wedge(sys, s, 0);
    auto v = props::states(sys, out);
    // Some action vanishes or an inner state lands on a border.
    bool extreme = v[1] == 4 || v[2] == 4 || v[1] == 0 || v[2] == 0;
    for (const auto& a : out.actions) extreme = extreme || a.duration == 0;
    CHECK(extreme);
    CHECK(v[3] == 0);
    CHECK(total_cost(sys, out) <= total_cost(sys, s));

    // Free continuous time: either end is as cheap, so an action is dropped.
    System free = th::line(0, 4, 0, {{"u1", 2, 0, 1}, {"u2", 1, 0, 1}, {"d1", -1, 0, 1}});
    Schedule f = wedge(free, s, 0);
    bool dropped = false;
    for (const auto& a : f.actions) dropped = dropped || a.duration == 0;
    CHECK(dropped);

    CHECK_THROWS(wedge(sys, finite_schedule({act("u1", q(1)), act("d1", q(1)), act("u1", q(1))}), 0));
}

TEST_CASE("classify single actions and non-normal schedules") {
    System sys = toy(0);
    auto up = classify_pattern(sys, finite_schedule({act("u1", q(2))}));
    REQUIRE(up);
    CHECK(up->name() == "j/e");

    auto bad = classify_pattern(sys, finite_schedule({act("u1", q(1, 2)), act("d1", q(1, 2)), act("u1", q(1, 2))}));
    CHECK_FALSE(bad);

    auto sec = classify(sys, finite_schedule({act("u1", q(2)), act("d1", q(4)), act("u1", q(2)), act("d1", q(4)),
                                              act("u1", q(1, 2))}));
    REQUIRE(sec);
    CHECK(sec->leaps == 2);
    CHECK(sec->pattern.name() == "j/a");
}

TEST_CASE("worked schedule normalizes to e/b with two leaps") {
    Schedule s;
    Instance w = worked_example_instance(s);
    REQUIRE(s.size() == 12);
    REQUIRE(is_safe(w.sys, s));
    CHECK(s.horizon() == w.t_max);
    Normalized n = normalize(w.sys, s);
    REQUIRE(n.sections);
    CHECK(n.sections->pattern.name() == "e/b");
    CHECK(n.sections->leaps == 2);
    CHECK(is_safe(w.sys, n.schedule));
    CHECK(n.schedule.horizon() == s.horizon());
    CHECK(total_cost(w.sys, n.schedule) <= total_cost(w.sys, s));
    // The log replays to the same schedule.
    Schedule r = replay(w.sys, s, trace_from_json(trace_to_json(n.trace)));
    CHECK(to_json(r) == to_json(n.schedule));
}

TEST_CASE("normal schedules are fixpoints") {
    System sys = toy(0);
    Schedule s = finite_schedule({act("u1", q(2)), act("d1", q(4)), act("u1", q(1, 2))});
    auto before = classify_pattern(sys, s);
    REQUIRE(before);
    Normalized n = normalize(sys, s);
    REQUIRE(n.sections);
    CHECK(n.sections->pattern == *before);
    CHECK(total_cost(sys, n.schedule) == total_cost(sys, s));
}

TEST_CASE("normalize on random safe schedules") {
    int no_floor = 0;
    for (int i = 0; i < 300; ++i) {
        Instance in = generate("1d-small", 1000 + static_cast<std::uint64_t>(i));
        Rng rng(77 + static_cast<std::uint64_t>(i));
        Schedule s = random_safe_schedule(in.sys, rng, 3 + static_cast<std::size_t>(i % 10));
        Normalized n = normalize(in.sys, s);
        INFO("case " << i);
        CHECK(is_safe(in.sys, n.schedule));
        CHECK(n.schedule.horizon() == s.horizon());
        CHECK(total_cost(in.sys, n.schedule) <= total_cost(in.sys, s));
        CHECK(to_json(replay(in.sys, s, n.trace)) == to_json(n.schedule));
        if (n.sections) {
            CHECK(n.sections->head_len <= 5);
            CHECK(n.sections->tail_len <= 5);
            CHECK(admissible(n.sections->pattern.head, n.sections->pattern.tail));
        } else if (!n.short_form) {
            // The one shape outside the catalog that surgery cannot remove.
            CHECK(no_floor_shape(in.sys, n.schedule));
            ++no_floor;
        }
    }
    MESSAGE("no-floor outputs: " << no_floor << " of 300");
}

TEST_CASE("random surgery keeps its contracts") {
    props::Stats st = props::run_until(0, 2000);
    for (const auto& f : st.failures) FAIL_CHECK(f);
    CHECK(st.failures.empty());
    for (const char* op : {"rearrange", "shift", "shift-down", "resize", "wedge"}) {
        INFO(op);
        CHECK(st.applied[op] > 0);
    }
}

TEST_CASE("one-dimensional operations reject other systems") {
    System two = example1_system();
    Schedule s = finite_schedule({act("M1", q(1, 2))});
    CHECK_THROWS(classify(two, s));
    CHECK_THROWS(find_flexis(two, s));
}

}  // TEST_SUITE
