#pragma once

#include "mms/model.hpp"

#include <string>
#include <vector>

namespace th {

using mms::Rational;

inline mms::Mode mode(const std::string& id, mms::Vec slope, Rational rate, Rational sw) {
    return mms::Mode{id, std::move(slope), std::move(rate), std::move(sw)};
}

struct M1 {
    std::string id;
    Rational slope, rate, sw;
};

// One-dimensional system on [lo, hi] starting at v0.
inline mms::System line(Rational lo, Rational hi, Rational v0, const std::vector<M1>& ms) {
    mms::System s;
    s.dimension = 1;
    s.v_min = {lo};
    s.v_max = {hi};
    s.v_0 = {v0};
    for (const auto& m : ms) s.modes.push_back(mode(m.id, {m.slope}, m.rate, m.sw));
    return s;
}

inline mms::TimedAction act(const std::string& m, Rational t) { return mms::TimedAction{m, std::move(t), false}; }

inline Rational q(long n, long d = 1) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

}  // namespace th
