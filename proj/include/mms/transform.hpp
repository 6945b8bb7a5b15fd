#pragma once

#include "mms/io.hpp"
#include "mms/model.hpp"

#include <optional>
#include <string>
#include <vector>

// One-dimensional schedule surgery. Indices are 0-based: action p takes the
// run from state V_p to V_{p+1}.
namespace mms {

enum class Trend { UP, DOWN, FLAT };
Trend trend_of(const System& sys, const std::string& mode);

// Time and cost of one full border-to-border sweep of a single mode.
Rational sweep_time(const System& sys, const std::string& mode);
Rational sweep_cost(const System& sys, const std::string& mode);

struct LeapType {
    std::string up, down;
    Rational time, cost;
};
// All (up, down) pairs, in mode order.
std::vector<LeapType> leap_types(const System& sys);

enum class WindowKind { UP_UP, UP_DOWN, DOWN_UP, DOWN_DOWN, FLAT, LAST };
const char* to_string(WindowKind k);

// FLAT windows sit at position 0 and LAST windows at k-1; pair windows cover
// actions (position, position + 1).
struct Window {
    WindowKind kind;
    std::size_t position;
};

struct Interval {
    Rational lo, hi;
};

struct Flexi {
    Window window;
    Interval max_interval;
};

struct PatternId {
    char head = 'j';
    char tail = 'j';
    std::string name() const;  // e.g. "e/b"
    bool operator==(const PatternId&) const = default;
};

bool admissible(char head, char tail);

// Segment shapes, named by trend and where each segment ends.
enum class Seg { FLAT, UP_INT, UP_TOP, DOWN_INT, DOWN_BOT };
std::vector<Seg> head_segments(char head);
std::vector<Seg> tail_segments(char tail);
// Head letters a..j, then tail letters a..j.
const std::string& pattern_letters();
const char* head_name(char h);
const char* tail_name(char t);

struct Sections {
    PatternId pattern;
    std::size_t head_len = 0;
    std::size_t leaps = 0;
    std::size_t tail_len = 0;
};

// Exact geometric matching; nullopt when the schedule is not in normal form.
std::optional<Sections> classify(const System& sys, const Schedule& s);
std::optional<PatternId> classify_pattern(const System& sys, const Schedule& s);

Schedule rearrange(const System& sys, const Schedule& s, std::size_t i, std::size_t j,
                   const std::vector<std::size_t>& perm);
// Moves actions [i, j) to state l; needs V_i = V_j = V_l and l outside (i, j).
Schedule shift(const System& sys, const Schedule& s, std::size_t i, std::size_t j, std::size_t l);
// Actions [i, j] run from v_max back to v_max; they are rotated to start at
// their lowest state and inserted at state l, which must sit at v_min.
Schedule shift_down(const System& sys, const Schedule& s, std::size_t i, std::size_t j, std::size_t l);

// Kind of the window at a position, or nullopt when it cannot be resized
// (flat action inside a pair, equal slopes, out of range).
std::optional<WindowKind> pair_kind(const System& sys, const Schedule& s, std::size_t i);
Interval resize_interval(const System& sys, const Schedule& s, const Window& w);
// Horizon change t; durations may become 0 and are kept.
Schedule resize(const System& sys, const Schedule& s, const Window& w, const Rational& t);
Schedule resize_unchecked(const System& sys, const Schedule& s, const Window& w, const Rational& t);
Rational resize_cost_delta(const System& sys, const Schedule& s, const Window& w, const Rational& t);

// Acts on actions i, i+1, i+2.
Schedule wedge(const System& sys, const Schedule& s, std::size_t i);

std::vector<Flexi> find_flexis(const System& sys, const Schedule& s);

struct TraceStep {
    std::string op;                   // cleanup, shrink-stretch, wedge, shift, shift-down
    std::vector<std::pair<Window, Rational>> resizes;
    std::vector<std::size_t> args;    // shift / shift-down indices
};

struct Normalized {
    Schedule schedule;
    std::optional<Sections> sections;  // nullopt when no catalog entry matched
    bool short_form = false;           // fewer than three actions
    std::vector<TraceStep> trace;
};

Normalized normalize(const System& sys, const Schedule& s);
Schedule replay(const System& sys, const Schedule& s, const std::vector<TraceStep>& trace);
json trace_to_json(const std::vector<TraceStep>& trace);
std::vector<TraceStep> trace_from_json(const json& j);

}  // namespace mms
