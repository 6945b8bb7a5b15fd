#include "mms/cli.hpp"

#include "mms/gen.hpp"
#include "mms/io.hpp"
#include "mms/solver1d.hpp"
#include "mms/solvernd.hpp"
#include "mms/transform.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mms {

namespace {

struct Outputs {
    std::string out_path;
    std::string trace_path;
};

void emit(const json& j, const Outputs& o, std::ostream& out) {
    std::string text = j.dump(2) + "\n";
    if (o.out_path.empty()) out << text;
    else write_text_file(o.out_path, text);
}

void maybe_trace(const System& sys, const Schedule& s, const Outputs& o) {
    if (o.trace_path.empty()) return;
    std::ofstream f(o.trace_path);
    if (!f) throw std::runtime_error("cannot write " + o.trace_path);
    write_trace(sys, s, f);
}

System load_system(const std::string& path) {
    System sys = system_from_json(read_json_file(path));
    require_valid(sys);
    return sys;
}

Rational required(const std::string& text, const char* flag) {
    if (text.empty()) throw CLI::ValidationError(std::string(flag) + " is required");
    return parse_rational(text);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

const char* kProfiles =
    "profiles:\n"
    "  1d-small  |M| <= 4, rationals with denominator <= 8\n"
    "  1d-grid   slopes in {-2,-1,1,2} plus zero modes, box [0,2] or [0,4], integer costs and t_max\n"
    "  2d-small  slopes in {-1,0,1}^2, integer box, start, costs, t_max in 1..4";

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-mode system scheduling toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Outputs o;
    app.add_option("--out", o.out_path, "write the JSON result here instead of stdout");
    app.add_option("--trace", o.trace_path, "write a CSV trace of the resulting schedule (decimal, not exact)");

    std::string model, sched, tmax, rho, eps, profile, sched_out, trace_log;
    int max_switches = -1;
    std::uint64_t seed = 0;
    std::size_t length = 8;
    std::string algo;

    auto* validate = app.add_subcommand("validate", "check a model file");
    validate->add_option("model", model)->required();

    auto* simulate = app.add_subcommand("simulate", "run a schedule and report its states");
    simulate->add_option("model", model)->required();
    simulate->add_option("schedule", sched)->required();
    simulate->add_option("--eps", eps, "also report eps-safety");

    auto* normalize_cmd = app.add_subcommand("normalize", "bring a 1D schedule into head/leaps/tail form");
    normalize_cmd->add_option("model", model)->required();
    normalize_cmd->add_option("schedule", sched)->required();
    normalize_cmd->add_option("--log", trace_log, "write the replayable operation log");

    auto* infinite = app.add_subcommand("solve-infinite", "optimal average cost over an infinite horizon (1D)");
    infinite->add_option("model", model)->required();

    auto* solve1 = app.add_subcommand("solve-1d", "finite-horizon 1D solvers");
    solve1->add_option("algorithm", algo, "exact | approx3 | fptas")
        ->required()
        ->check(CLI::IsMember({"exact", "approx3", "fptas"}));
    solve1->add_option("model", model)->required();
    solve1->add_option("--tmax", tmax)->required();
    solve1->add_option("--rho", rho, "relative error for fptas");

    auto* solven = app.add_subcommand("solve-nd", "limit-safe schedules in any dimension");
    solven->add_option("algorithm", algo, "limit-safe | optimal")
        ->required()
        ->check(CLI::IsMember({"limit-safe", "optimal"}));
    solven->add_option("model", model)->required();
    solven->add_option("--tmax", tmax)->required();
    solven->add_option("--max-switches", max_switches, "bound on concrete actions outside M* (optimal)");

    auto* concretize_cmd = app.add_subcommand("concretize", "turn an abstract schedule into an eps-safe one");
    concretize_cmd->add_option("model", model)->required();
    concretize_cmd->add_option("schedule", sched)->required();
    concretize_cmd->add_option("--eps", eps)->required();

    auto* round_cmd = app.add_subcommand("round", "round durations onto a coarse grid, staying eps-safe");
    round_cmd->add_option("model", model)->required();
    round_cmd->add_option("schedule", sched)->required();
    round_cmd->add_option("--eps", eps)->required();

    auto* gen_cmd = app.add_subcommand("gen", std::string("deterministic random instance\n") + kProfiles);
    gen_cmd->add_option("--profile", profile)->required();
    gen_cmd->add_option("--seed", seed)->required();
    gen_cmd->add_option("--schedule-out", sched_out, "also write a random safe schedule (1D profiles)");
    gen_cmd->add_option("--length", length, "length of that schedule");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        auto t0 = std::chrono::steady_clock::now();
        if (validate->parsed()) {
            System sys = system_from_json(read_json_file(model));
            auto problems = validate_system(sys);
            emit({{"valid", problems.empty()}, {"violations", problems}}, o, out);
            return problems.empty() ? kExitOk : kExitError;
        }
        if (simulate->parsed()) {
            System sys = load_system(model);
            json sj = read_json_file(sched);
            json j;
            if (is_abstract_schedule_json(sj)) {
                AbstractSchedule a = abstract_from_json(sj);
                j = run_to_json(run_of(sys, a));
                j["cost"] = rational_to_json(total_cost(sys, a));
                j["horizon"] = rational_to_json(a.horizon());
            } else {
                Schedule s = schedule_from_json(sj);
                j = run_to_json(run_of(sys, s));
                if (s.kind == HorizonKind::FINITE) {
                    j["cost"] = rational_to_json(total_cost(sys, s));
                    j["horizon"] = rational_to_json(s.horizon());
                } else {
                    j["average_cost"] = rational_to_json(average_cost(sys, s));
                }
                if (!eps.empty()) j["eps_safe"] = is_eps_safe(sys, s, parse_rational(eps));
                maybe_trace(sys, s, o);
            }
            emit(j, o, out);
            return kExitOk;
        }
        if (normalize_cmd->parsed()) {
            System sys = load_system(model);
            Schedule s = schedule_from_json(read_json_file(sched));
            Normalized n = normalize(sys, s);
            json j;
            j["schedule"] = to_json(n.schedule);
            j["cost_before"] = rational_to_json(total_cost(sys, s));
            j["cost_after"] = rational_to_json(total_cost(sys, n.schedule));
            j["short"] = n.short_form;
            if (n.sections) {
                j["pattern"] = n.sections->pattern.name();
                j["head"] = head_name(n.sections->pattern.head);
                j["tail"] = tail_name(n.sections->pattern.tail);
                j["leaps"] = n.sections->leaps;
                j["head_len"] = n.sections->head_len;
                j["tail_len"] = n.sections->tail_len;
            } else {
                j["pattern"] = n.short_form ? json("SHORT") : json(nullptr);
            }
            if (!trace_log.empty()) write_text_file(trace_log, trace_to_json(n.trace).dump(2) + "\n");
            maybe_trace(sys, n.schedule, o);
            emit(j, o, out);
            return kExitOk;
        }
        if (infinite->parsed()) {
            System sys = load_system(model);
            auto r = solve_infinite(sys);
            emit(report_json(r, elapsed_ms(t0)), o, out);
            return r ? kExitOk : kExitNoSchedule;
        }
        if (solve1->parsed()) {
            System sys = load_system(model);
            Rational t = required(tmax, "--tmax");
            std::optional<FiniteSolution> r;
            if (algo == "exact") r = solve_exact(sys, t);
            else if (algo == "approx3") r = approx3(sys, t);
            else r = fptas(sys, t, required(rho, "--rho"));
            emit(report_json(algo, r, elapsed_ms(t0)), o, out);
            if (r) maybe_trace(sys, r->schedule, o);
            return r ? kExitOk : kExitNoSchedule;
        }
        if (solven->parsed()) {
            System sys = load_system(model);
            Rational t = required(tmax, "--tmax");
            if (algo == "limit-safe") {
                auto r = limit_safe_schedule(sys, t);
                emit(report_json(r, elapsed_ms(t0)), o, out);
                return r ? kExitOk : kExitNoSchedule;
            }
            if (max_switches < 0) throw CLI::ValidationError("--max-switches is required for optimal");
            auto r = optimal_limit_safe(sys, t, max_switches);
            emit(report_json(r, max_switches, elapsed_ms(t0)), o, out);
            return r ? kExitOk : kExitNoSchedule;
        }
        if (concretize_cmd->parsed()) {
            System sys = load_system(model);
            AbstractSchedule a = abstract_from_json(read_json_file(sched));
            Schedule s = concretize(sys, a, parse_rational(eps));
            maybe_trace(sys, s, o);
            emit(to_json(s), o, out);
            return kExitOk;
        }
        if (round_cmd->parsed()) {
            System sys = load_system(model);
            Schedule s = round_to_space(sys, schedule_from_json(read_json_file(sched)), parse_rational(eps));
            maybe_trace(sys, s, o);
            emit(to_json(s), o, out);
            return kExitOk;
        }
        if (gen_cmd->parsed()) {
            if (!known_profile(profile)) throw CLI::ValidationError("unknown profile " + profile);
            Instance in = generate(profile, seed);
            json j = to_json(in.sys);
            j["t_max"] = rational_to_json(in.t_max);
            emit(j, o, out);
            if (!sched_out.empty()) {
                Rng rng(seed ^ 0x5deece66dULL);
                write_text_file(sched_out, to_json(random_safe_schedule(in.sys, rng, length)).dump(2) + "\n");
            }
            return kExitOk;
        }
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace mms
