#pragma once

// Randomized surgery on random safe 1D schedules. Each trial picks one
// operation that applies to the schedule and checks its contract with
// run_of and total_cost recomputed from scratch.

#include "mms/gen.hpp"
#include "mms/transform.hpp"

#include <array>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace props {

using mms::Rational;
using mms::Schedule;
using mms::System;

struct Stats {
    std::map<std::string, long> applied;
    std::vector<std::string> failures;
    long total() const {
        long n = 0;
        for (const auto& [k, v] : applied) n += v;
        return n;
    }
};

inline std::vector<Rational> states(const System& sys, const Schedule& s) {
    std::vector<Rational> v;
    for (const auto& x : mms::run_of(sys, s).states) v.push_back(x[0]);
    return v;
}

inline bool nonneg(const Schedule& s) {
    for (const auto& a : s.actions)
        if (a.duration < 0) return false;
    return true;
}

// Safe run with legal durations.
inline bool valid(const System& sys, const Schedule& s) { return nonneg(s) && mms::is_safe(sys, s); }

class Trial {
public:
    Trial(std::uint64_t seed, Stats& st) : rng_(seed), st_(st) {
        in_ = mms::generate(seed % 3 == 0 ? "1d-grid" : "1d-small", seed);
        s_ = mms::random_safe_schedule(in_.sys, rng_, static_cast<std::size_t>(rng_.range(3, 14)));
        v_ = states(in_.sys, s_);
        cost_ = mms::total_cost(in_.sys, s_);
        tag_ = "seed " + std::to_string(seed) + ": ";
    }

    // Tries the operations in a random order; false when none applies.
    bool run() {
        std::vector<int> order{0, 1, 2, 3, 4};
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng_.range(0, static_cast<long>(i) - 1))]);
        for (int op : order) {
            bool done = op == 0 ? rearrange() : op == 1 ? shift() : op == 2 ? shift_down() : op == 3 ? resize() : wedge();
            if (done) return true;
        }
        return false;
    }

private:
    const System& sys() const { return in_.sys; }
    const Rational& bot() const { return in_.sys.v_min[0]; }
    const Rational& top() const { return in_.sys.v_max[0]; }

    void fail(const std::string& what) { st_.failures.push_back(tag_ + what); }

    long pick(long lo, long hi) { return rng_.range(lo, hi); }

    bool rearrange() {
        const std::size_t k = s_.size();
        std::vector<std::pair<std::size_t, std::size_t>> windows;
        for (std::size_t i = 0; i < k; ++i) {
            auto tr = mms::trend_of(sys(), s_.actions[i].mode);
            if (tr == mms::Trend::FLAT) continue;
            std::size_t j = i;
            while (j + 1 < k && mms::trend_of(sys(), s_.actions[j + 1].mode) == tr) ++j;
            windows.push_back({i, j});
        }
        if (windows.empty()) return false;
        auto [i, j] = windows[static_cast<std::size_t>(pick(0, static_cast<long>(windows.size()) - 1))];
        std::vector<std::size_t> perm(j - i + 1);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t r = perm.size(); r > 1; --r) std::swap(perm[r - 1], perm[static_cast<std::size_t>(pick(0, static_cast<long>(r) - 1))]);
        Schedule out = mms::rearrange(sys(), s_, i, j, perm);
        ++st_.applied["rearrange"];
        auto w = states(sys(), out);
        if (mms::total_cost(sys(), out) != cost_) fail("rearrange changed the cost");
        if (w[j + 1] != v_[j + 1] || w.back() != v_.back()) fail("rearrange moved the window endpoint");
        if (!mms::is_safe(sys(), out)) fail("rearrange broke safety");
        return true;
    }

    bool shift() {
        const std::size_t k = s_.size();
        std::vector<std::array<std::size_t, 3>> opts;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j <= k; ++j) {
                if (v_[i] != v_[j]) continue;
                for (std::size_t l = 0; l <= k; ++l)
                    if ((l <= i || l >= j) && v_[l] == v_[i] && l != i && l != j) opts.push_back({i, j, l});
            }
        if (opts.empty()) return false;
        auto [i, j, l] = opts[static_cast<std::size_t>(pick(0, static_cast<long>(opts.size()) - 1))];
        Schedule out = mms::shift(sys(), s_, i, j, l);
        ++st_.applied["shift"];
        if (mms::total_cost(sys(), out) != cost_) fail("shift changed the cost");
        if (!mms::is_safe(sys(), out)) fail("shift broke safety");
        if (out.horizon() != s_.horizon() || states(sys(), out).back() != v_.back()) fail("shift moved the end");
        return true;
    }

    bool shift_down() {
        const std::size_t k = s_.size();
        std::vector<std::array<std::size_t, 3>> opts;
        for (std::size_t i = 0; i < k; ++i) {
            if (v_[i] != top()) continue;
            for (std::size_t j = i; j < k; ++j) {
                if (v_[j + 1] != top()) continue;
                for (std::size_t l = 0; l <= k; ++l)
                    if ((l <= i || l > j) && v_[l] == bot()) opts.push_back({i, j, l});
            }
        }
        if (opts.empty()) return false;
        auto [i, j, l] = opts[static_cast<std::size_t>(pick(0, static_cast<long>(opts.size()) - 1))];
        Schedule out = mms::shift_down(sys(), s_, i, j, l);
        ++st_.applied["shift-down"];
        if (mms::total_cost(sys(), out) != cost_) fail("shift-down changed the cost");
        if (!mms::is_safe(sys(), out)) fail("shift-down broke safety");
        if (out.horizon() != s_.horizon() || states(sys(), out).back() != v_.back()) fail("shift-down moved the end");
        return true;
    }

    std::vector<mms::Window> windows() const {
        std::vector<mms::Window> w;
        const std::size_t k = s_.size();
        if (k > 0 && sys().mode(s_.actions[0].mode).slope[0] == 0) w.push_back({mms::WindowKind::FLAT, 0});
        for (std::size_t i = 0; i + 1 < k; ++i)
            if (auto kind = mms::pair_kind(sys(), s_, i)) w.push_back({*kind, i});
        if (k > 0 && sys().mode(s_.actions[k - 1].mode).slope[0] != 0) w.push_back({mms::WindowKind::LAST, k - 1});
        return w;
    }

    bool resize() {
        auto ws = windows();
        if (ws.empty()) return false;
        mms::Window w = ws[static_cast<std::size_t>(pick(0, static_cast<long>(ws.size()) - 1))];
        mms::Interval iv = mms::resize_interval(sys(), s_, w);
        ++st_.applied["resize"];
        if (iv.lo > 0 || iv.hi < 0) fail("resize interval misses 0");
        const Rational delta(1, 1000000);
        for (const Rational& t : {iv.lo, iv.hi}) {
            Schedule out = mms::resize(sys(), s_, w, t);
            if (!valid(sys(), out)) fail(std::string("resize endpoint unsafe on ") + mms::to_string(w.kind));
            if (out.horizon() != s_.horizon() + t) fail("resize horizon drift");
            if (mms::total_cost(sys(), out) != cost_ + mms::resize_cost_delta(sys(), s_, w, t)) fail("resize cost delta wrong");
            if (w.kind != mms::WindowKind::FLAT && w.kind != mms::WindowKind::LAST) {
                auto v = states(sys(), out);
                if (v[w.position + 2] != v_[w.position + 2]) fail("pair resize moved the window end");
            }
        }
        // One step past either end must be illegal; the flat upper end is a
        // horizon cap, not a safety limit.
        if (valid(sys(), mms::resize_unchecked(sys(), s_, w, iv.lo - delta))) fail("resize interval not tight below");
        if (w.kind != mms::WindowKind::FLAT && valid(sys(), mms::resize_unchecked(sys(), s_, w, iv.hi + delta)))
            fail("resize interval not tight above");
        Rational mid = (iv.lo + iv.hi) / 2;
        Rational a = mms::resize_cost_delta(sys(), s_, w, iv.lo), b = mms::resize_cost_delta(sys(), s_, w, iv.hi),
                 c = mms::resize_cost_delta(sys(), s_, w, mid);
        if (c < mms::rmin(a, b) || c > mms::rmax(a, b)) fail("resize cost not linear");
        return true;
    }

    bool wedge() {
        const std::size_t k = s_.size();
        std::vector<std::size_t> opts;
        for (std::size_t i = 0; i + 2 < k; ++i) {
            auto t1 = mms::trend_of(sys(), s_.actions[i].mode), t2 = mms::trend_of(sys(), s_.actions[i + 1].mode),
                 t3 = mms::trend_of(sys(), s_.actions[i + 2].mode);
            if (t1 == mms::Trend::FLAT || t2 == mms::Trend::FLAT || t3 == mms::Trend::FLAT) continue;
            if (!((t1 == t2 && t2 != t3) || (t1 != t2 && t2 == t3))) continue;
            if (v_[i] == v_[i + 3]) opts.push_back(i);
        }
        if (opts.empty()) return false;
        std::size_t i = opts[static_cast<std::size_t>(pick(0, static_cast<long>(opts.size()) - 1))];
        Schedule out = mms::wedge(sys(), s_, i);
        ++st_.applied["wedge"];
        auto v = states(sys(), out);
        if (v[i] != v_[i] || v[i + 3] != v_[i + 3] || v.back() != v_.back()) fail("wedge moved an endpoint");
        if (out.horizon() != s_.horizon()) fail("wedge changed the horizon");
        if (!valid(sys(), out)) fail("wedge broke safety");
        if (mms::total_cost(sys(), out) > cost_) fail("wedge raised the cost");
        return true;
    }

    mms::Rng rng_;
    Stats& st_;
    mms::Instance in_;
    Schedule s_;
    std::vector<Rational> v_;
    Rational cost_;
    std::string tag_;
};

// Runs trials from seed `first` until `target` operations were applied.
inline Stats run_until(std::uint64_t first, long target) {
    Stats st;
    for (std::uint64_t seed = first; st.total() < target; ++seed) {
        Trial t(seed, st);
        t.run();
    }
    return st;
}

}  // namespace props
