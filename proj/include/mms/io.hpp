#pragma once

#include "mms/model.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace mms {

using json = nlohmann::json;

// Numbers may be JSON integers, decimal strings or "p/q" strings.
Rational rational_from_json(const json& j);
json rational_to_json(const Rational& q);
Vec vec_from_json(const json& j);
json vec_to_json(const Vec& v);

System system_from_json(const json& j);
json to_json(const System& sys);

// True when any action entry carries an "abstract" lump.
bool is_abstract_schedule_json(const json& j);

Schedule schedule_from_json(const json& j);
json to_json(const Schedule& s);

AbstractSchedule abstract_from_json(const json& j);
json to_json(const AbstractSchedule& s);

json run_to_json(const Run& r);

// CSV columns: time, x_1..x_N, mode, cumulative_cost. Decimal and lossy; for plotting only.
void write_trace(const System& sys, const Schedule& s, std::ostream& out);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mms
