#pragma once

#include "config.hpp"
#include "verify.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string_view>

namespace weightopt {

enum class Command { Solve, Optimize, Rearrange, Simulate, Verify };

inline const char* to_string(Command c) {
    switch (c) {
    case Command::Solve: return "solve";
    case Command::Optimize: return "optimize";
    case Command::Rearrange: return "rearrange";
    case Command::Simulate: return "simulate";
    case Command::Verify: return "verify";
    }
    return "unknown";
}

inline std::optional<Command> parse_command(std::string_view name) {
    for (Command c : {Command::Solve, Command::Optimize, Command::Rearrange, Command::Simulate, Command::Verify})
        if (name == to_string(c)) return c;
    return std::nullopt;
}

struct ExecOptions {
    // empty: use the config's output directory
    std::filesystem::path out_dir;
    bool quiet = false;
    std::optional<std::uint64_t> seed;
    std::ostream* log = &std::cout;
};

namespace detail {

inline io::Json grid_json(const Grid& g) {
    return {{"domain", to_string(g.kind)}, {"extents", g.extents}, {"shape", g.shape}};
}

inline std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

class Runner {
public:
    Runner(const RunConfig& cfg, const ExecOptions& opts)
        : cfg_(cfg), opts_(opts), grid_(cfg.grid()), k_(assemble_stiffness(grid_)),
          out_(opts.out_dir.empty() ? std::filesystem::path(cfg.output_dir) : opts.out_dir) {
        std::error_code ec;
        std::filesystem::create_directories(out_, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_.string() + ": " + ec.message());
    }

    int run(Command c) {
        switch (c) {
        case Command::Solve: return solve();
        case Command::Optimize: return optimize();
        case Command::Rearrange: return rearrange();
        case Command::Simulate: return simulate();
        case Command::Verify: return verify();
        }
        return 1;
    }

private:
    void write(const std::string& name, const std::string& text) { io::write_file((out_ / name).string(), text); }

    void say(const std::string& line) {
        if (!opts_.quiet && opts_.log) *opts_.log << line << '\n';
    }

    WeightField weight() const { return WeightField(grid_, cfg_.weight_values(grid_)); }

    int solve() {
        const WeightField m = weight();
        const EigenPair p = principal_eigenpair(m, k_, cfg_.solver);
        io::Json j;
        j["grid"] = grid_json(grid_);
        j["weight_integral"] = m.integral();
        j["eigenpair"] = io::to_json(p);
        if (cfg_.spectrum_count > 0) {
            const auto spec = signed_spectrum(m, k_, cfg_.spectrum_count);
            write("spectrum.csv", io::spectrum_csv(spec));
            j["spectrum_bound"] = spec.bound;
        }
        if (cfg_.dump_stiffness) {
            std::ostringstream ss;
            write_coordinate_triples(ss, k_);
            write("stiffness.txt", ss.str());
        }
        write("eigenpair.json", dump(j));
        write("u.csv", io::field_csv(grid_, p.u));
        say("lambda1 = " + io::format_double(p.lambda1) + "  mu1 = " + io::format_double(p.mu1) + "  (" +
            to_string(p.solver) + ", residual " + io::format_double(p.residual) + ")");
        return 0;
    }

    int optimize() {
        OptimizeOptions o = cfg_.optimize;
        if (opts_.seed) o.seed = *opts_.seed;
        const auto res = minimize_lambda1(cfg_.weight_class(grid_), grid_, o);
        io::Json j;
        j["grid"] = grid_json(grid_);
        j["seed"] = o.seed;
        j["result"] = io::to_json(res);
        write("result.json", dump(j));
        write("m.csv", io::field_csv(grid_, std::span<const double>(res.final_m)));
        write("u.csv", io::field_csv(grid_, res.final_pair.u));
        say("lambda1 = " + io::format_double(res.final_pair.lambda1) + "  best restart " +
            std::to_string(res.best_restart) + "/" + std::to_string(res.restarts_used) + "  " +
            to_string(res.monotone_x1.classification) + (res.converged ? "" : "  (not converged)"));
        return res.converged ? 0 : exit_code_for(ErrorCode::IterationLimit);
    }

    int rearrange() {
        const Vector mv = cfg_.weight_values(grid_);
        const std::span<const double> ms(mv.data(), static_cast<std::size_t>(mv.size()));
        const RearrangementClass cls = cfg_.weight_class(grid_);
        write("profile.csv", io::profile_csv(cls));
        const auto mono = monotone_x1_rearrangement(ms, grid_);
        write("monotone.csv", io::field_csv(grid_, std::span<const double>(mono)));

        auto lambda_of = [&](std::span<const double> f) {
            return principal_eigenpair(WeightField(grid_, f), k_, cfg_.solver).lambda1;
        };
        io::Json j;
        j["grid"] = grid_json(grid_);
        j["input_lambda1"] = lambda_of(ms);
        j["monotone_lambda1"] = lambda_of(mono);
        io::Json osc = io::Json::array();
        for (int k : cfg_.stripes) {
            const auto f = oscillating_sequence(cls, grid_, k);
            write("oscillating_" + std::to_string(k) + ".csv", io::field_csv(grid_, std::span<const double>(f)));
            osc.push_back({{"k", k}, {"lambda1", lambda_of(f)}});
        }
        j["oscillating"] = std::move(osc);
        write("rearrange.json", dump(j));
        say("lambda1 input " + io::format_double(j["input_lambda1"].get<double>()) + "  monotone " +
            io::format_double(j["monotone_lambda1"].get<double>()));
        return 0;
    }

    int simulate() {
        const WeightField m = weight();
        const auto& s = cfg_.simulate;
        if (!s.gamma && !s.gamma_factor)
            throw Error(ErrorCode::ValidationError, "simulate needs simulate.gamma or simulate.gamma_factor");
        const EigenPair p = principal_eigenpair(m, k_, cfg_.solver);
        const double gamma = s.gamma ? *s.gamma : *s.gamma_factor * p.lambda1;
        LogisticOptions lo;
        lo.t_end = s.t_end.value_or(gamma > 0.0 ? 50.0 / gamma : 10.0);
        lo.dt = s.dt.value_or(gamma > 0.0 ? std::min(1e-2, 0.1 / gamma) : 1e-2);
        const Vector v0 = Vector::Constant(static_cast<Eigen::Index>(grid_.cell_count()), s.v0);
        const Trajectory tr = simulate_logistic(m, gamma, v0, grid_, k_, lo);
        write("trajectory.csv", io::trajectory_csv(tr));
        write("final_state.csv", io::field_csv(grid_, tr.final_state));
        io::Json j;
        j["grid"] = grid_json(grid_);
        j["gamma"] = gamma;
        j["lambda1"] = p.lambda1;
        j["t_end"] = lo.t_end;
        j["dt"] = tr.dt_used;
        j["outcome"] = to_string(tr.outcome);
        j["predicted_outcome"] = to_string(predicted_outcome(gamma, p.lambda1));
        j["final_mass"] = tr.total_mass.back();
        j["final_log_slope"] = tr.final_log_slope;
        j["clamp_events"] = tr.clamp_events;
        j["most_negative_before_clamp"] = tr.most_negative_before_clamp;
        write("simulate.json", dump(j));
        say(std::string("outcome ") + to_string(tr.outcome) + "  (gamma " + io::format_double(gamma) + ", lambda1 " +
            io::format_double(p.lambda1) + ")");
        return 0;
    }

    int verify() {
        VerifyConfig v = cfg_.verify;
        if (opts_.seed) v.seed = *opts_.seed;
        const auto report = run_property_suite(v);
        io::Json j;
        j["seed"] = v.seed;
        j["trials"] = v.trials;
        io::Json props = io::Json::array();
        for (const auto& r : report.results) {
            props.push_back({{"name", r.name}, {"passed", r.passed}, {"trials", r.trials}, {"worst", r.worst},
                             {"detail", r.detail}});
            say(std::string(r.passed ? "PASS " : "FAIL ") + r.name + "  (" + r.detail + ")");
        }
        j["properties"] = std::move(props);
        j["all_passed"] = report.all_passed();
        write("verify.json", dump(j));
        return report.all_passed() ? 0 : 1;
    }

    const RunConfig& cfg_;
    const ExecOptions& opts_;
    Grid grid_;
    SparseMatrix k_;
    std::filesystem::path out_;
};

} // namespace detail

/// Runs one command and writes its artifacts. Returns the process exit code;
/// library errors propagate as Error.
inline int execute(const RunConfig& cfg, Command command, const ExecOptions& opts = {}) {
    detail::Runner runner(cfg, opts);
    return runner.run(command);
}

} // namespace weightopt
