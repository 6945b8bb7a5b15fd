#include "mms/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace mms {

Rational rational_from_json(const json& j) {
    if (j.is_number_integer()) {
        if (j.is_number_unsigned()) return Rational(mpz_class(std::to_string(j.get<unsigned long long>()), 10));
        return Rational(mpz_class(std::to_string(j.get<long long>()), 10));
    }
    if (j.is_string()) return parse_rational(j.get<std::string>());
    throw ModelError("numbers must be integers or strings (\"p/q\" or decimal), got " + j.dump());
}

json rational_to_json(const Rational& q) { return to_string(q); }

Vec vec_from_json(const json& j) {
    if (!j.is_array()) throw ModelError("expected an array of numbers");
    Vec v;
    for (const auto& x : j) v.push_back(rational_from_json(x));
    return v;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(rational_to_json(x));
    return a;
}

System system_from_json(const json& j) {
    try {
        System sys;
        sys.dimension = j.at("dimension").get<int>();
        sys.v_min = vec_from_json(j.at("v_min"));
        sys.v_max = vec_from_json(j.at("v_max"));
        sys.v_0 = vec_from_json(j.at("v_0"));
        for (const auto& m : j.at("modes")) {
            Mode mode;
            mode.id = m.at("id").get<std::string>();
            mode.slope = vec_from_json(m.at("slope"));
            mode.cost_rate = rational_from_json(m.at("cost_rate"));
            mode.switch_cost = rational_from_json(m.at("switch_cost"));
            sys.modes.push_back(std::move(mode));
        }
        return sys;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed model: ") + e.what());
    }
}

json to_json(const System& sys) {
    json j;
    j["dimension"] = sys.dimension;
    j["v_min"] = vec_to_json(sys.v_min);
    j["v_max"] = vec_to_json(sys.v_max);
    j["v_0"] = vec_to_json(sys.v_0);
    j["modes"] = json::array();
    for (const auto& m : sys.modes)
        j["modes"].push_back({{"id", m.id},
                              {"slope", vec_to_json(m.slope)},
                              {"cost_rate", rational_to_json(m.cost_rate)},
                              {"switch_cost", rational_to_json(m.switch_cost)}});
    return j;
}

bool is_abstract_schedule_json(const json& j) {
    if (!j.contains("actions")) return false;
    for (const auto& a : j.at("actions"))
        if (a.contains("abstract")) return true;
    return false;
}

namespace {

TimedAction action_from_json(const json& a) {
    TimedAction t;
    t.mode = a.at("mode").get<std::string>();
    const auto& d = a.at("duration");
    if (d.is_string() && (d.get<std::string>() == "inf" || d.get<std::string>() == "INFINITE")) {
        t.infinite = true;
        t.duration = 0;
    } else {
        t.duration = rational_from_json(d);
    }
    return t;
}

json action_to_json(const TimedAction& a) {
    return {{"mode", a.mode}, {"duration", a.infinite ? json("inf") : rational_to_json(a.duration)}};
}

}  // namespace

Schedule schedule_from_json(const json& j) {
    try {
        Schedule s;
        for (const auto& a : j.at("actions")) {
            if (a.contains("abstract")) throw ModelError("abstract entry in a concrete schedule");
            s.actions.push_back(action_from_json(a));
        }
        std::string kind = "finite";
        if (j.contains("horizon")) kind = j.at("horizon").at("kind").get<std::string>();
        if (kind == "finite") {
            s.kind = HorizonKind::FINITE;
            if (j.contains("horizon") && j.at("horizon").contains("t_max")) {
                Rational tmax = rational_from_json(j.at("horizon").at("t_max"));
                if (tmax != s.horizon()) throw ModelError("durations do not sum to t_max");
            }
        } else if (kind == "infinite_tail") {
            s.kind = HorizonKind::INFINITE_TAIL;
            if (s.actions.empty() || !s.actions.back().infinite)
                throw ModelError("infinite_tail schedules end with an infinite action");
        } else if (kind == "periodic") {
            s.kind = HorizonKind::PERIODIC;
            s.prefix_len = j.at("horizon").at("prefix_len").get<std::size_t>();
            if (s.prefix_len >= s.actions.size()) throw ModelError("periodic cycle is empty");
        } else {
            throw ModelError("unknown horizon kind " + kind);
        }
        for (std::size_t i = 0; i < s.actions.size(); ++i) {
            if (s.actions[i].infinite && (s.kind != HorizonKind::INFINITE_TAIL || i + 1 != s.actions.size()))
                throw ModelError("misplaced infinite duration");
            if (!s.actions[i].infinite && s.actions[i].duration < 0) throw ModelError("negative duration");
        }
        return s;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed schedule: ") + e.what());
    }
}

json to_json(const Schedule& s) {
    json j;
    switch (s.kind) {
        case HorizonKind::FINITE:
            j["horizon"] = {{"kind", "finite"}, {"t_max", rational_to_json(s.horizon())}};
            break;
        case HorizonKind::INFINITE_TAIL:
            j["horizon"] = {{"kind", "infinite_tail"}};
            break;
        case HorizonKind::PERIODIC:
            j["horizon"] = {{"kind", "periodic"}, {"prefix_len", s.prefix_len}};
            break;
    }
    j["actions"] = json::array();
    for (const auto& a : s.actions) j["actions"].push_back(action_to_json(a));
    return j;
}

AbstractSchedule abstract_from_json(const json& j) {
    try {
        AbstractSchedule s;
        for (const auto& a : j.at("actions")) {
            AbstractStep st;
            if (a.contains("abstract")) {
                st.abstract = true;
                for (auto it = a.at("abstract").begin(); it != a.at("abstract").end(); ++it)
                    st.times[it.key()] = rational_from_json(it.value());
            } else {
                st.abstract = false;
                st.action = action_from_json(a);
                if (st.action.infinite) throw ModelError("abstract schedules are finite");
            }
            s.steps.push_back(std::move(st));
        }
        if (j.contains("horizon") && j.at("horizon").contains("t_max")) {
            Rational tmax = rational_from_json(j.at("horizon").at("t_max"));
            if (tmax != s.horizon()) throw ModelError("durations do not sum to t_max");
        }
        return s;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed abstract schedule: ") + e.what());
    }
}

json to_json(const AbstractSchedule& s) {
    json j;
    j["horizon"] = {{"kind", "finite"}, {"t_max", rational_to_json(s.horizon())}};
    j["actions"] = json::array();
    for (const auto& st : s.steps) {
        if (st.abstract) {
            json lump = json::object();
            for (const auto& [id, t] : st.times) lump[id] = rational_to_json(t);
            j["actions"].push_back({{"abstract", lump}});
        } else {
            j["actions"].push_back(action_to_json(st.action));
        }
    }
    return j;
}

json run_to_json(const Run& r) {
    json j;
    j["safe"] = r.safe;
    j["eps_safe_margin"] = rational_to_json(r.eps_safe_margin);
    j["first_violation"] = r.first_violation < 0 ? json(nullptr) : json(r.first_violation);
    j["states"] = json::array();
    for (const auto& v : r.states) j["states"].push_back(vec_to_json(v));
    return j;
}

void write_trace(const System& sys, const Schedule& s, std::ostream& out) {
    out << "time";
    for (int i = 1; i <= sys.dimension; ++i) out << ",x_" << i;
    out << ",mode,cumulative_cost\n";
    Rational t = 0, cost = 0;
    Vec v = sys.v_0;
    auto row = [&](const std::string& mode) {
        out << to_decimal(t);
        for (const auto& x : v) out << ',' << to_decimal(x);
        out << ',' << mode << ',' << to_decimal(cost) << '\n';
    };
    row("");
    for (const auto& a : s.actions) {
        if (a.infinite) break;
        const auto& m = sys.mode(a.mode);
        t += a.duration;
        cost += m.switch_cost + m.cost_rate * a.duration;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += m.slope[i] * a.duration;
        row(a.mode);
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ModelError("malformed JSON in " + path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write " + path);
    out << text;
}

}  // namespace mms
