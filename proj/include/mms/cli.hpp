#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mms {

// Exit codes: 0 result, 2 INFEASIBLE / NO_SCHEDULE, 1 usage or model error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoSchedule = 2;

// args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mms
