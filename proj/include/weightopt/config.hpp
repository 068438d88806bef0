#pragma once

#include "io.hpp"
#include "logistic.hpp"
#include "optimize.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace weightopt {

inline constexpr int kConfigVersion = 1;

enum class WeightKind { Cells, BangBang, Profile };

struct WeightSpec {
    WeightKind kind = WeightKind::BangBang;
    std::vector<double> values;     // Cells
    double positive = 1.0;          // BangBang
    double negative = -1.0;         // BangBang
    double fraction = 0.5;          // BangBang, measure fraction of {m > 0}
    std::string profile_path;       // Profile
    std::optional<RearrangementClass> profile;
};

struct SimulateConfig {
    std::optional<double> gamma;
    // gamma = gamma_factor * lambda1(m) when gamma is not given
    std::optional<double> gamma_factor;
    double v0 = 0.01;
    std::optional<double> dt;
    std::optional<double> t_end;
};

struct VerifyConfig {
    int trials = 50;
    std::uint64_t seed = 0;
};

/// One fully validated run. Weight cells are laid out in flat order; for
/// bang-bang weights the positive cells come first.
struct RunConfig {
    int version = kConfigVersion;
    GridSpec domain;
    WeightSpec weight;
    SolverOptions solver;
    OptimizeOptions optimize;
    SimulateConfig simulate;
    std::vector<int> stripes;
    VerifyConfig verify;
    std::size_t spectrum_count = 0;
    bool dump_stiffness = false;
    std::string output_dir = "out";

    Grid grid() const { return build_grid(domain); }

    Vector weight_values(const Grid& g) const {
        const std::size_t n = g.cell_count();
        switch (weight.kind) {
        case WeightKind::Cells:
            return Eigen::Map<const Vector>(weight.values.data(), static_cast<Eigen::Index>(weight.values.size()));
        case WeightKind::BangBang: {
            const auto pos = static_cast<std::size_t>(std::llround(weight.fraction * static_cast<double>(n)));
            Vector v(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = i < pos ? weight.positive : weight.negative;
            return v;
        }
        case WeightKind::Profile: {
            const auto vals = canonical_arrangement(*weight.profile, g);
            return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
        }
        }
        return {};
    }

    RearrangementClass weight_class(const Grid& g) const {
        if (weight.kind == WeightKind::Profile) return *weight.profile;
        const Vector v = weight_values(g);
        return decreasing_rearrangement(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), g);
    }
};

namespace detail {

using io::Json;

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key))
        throw Error(ErrorCode::ParseError, "missing key \"" + path + key + "\"");
    return obj.at(key);
}

template <class T>
T get_as(const Json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::ParseError, "key \"" + key + "\" has the wrong type");
    }
}

template <class T>
std::optional<T> optional_key(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_as<T>(obj.at(key), path + key);
}

inline void validate(const std::string& what, bool ok) {
    if (!ok) throw Error(ErrorCode::ValidationError, what);
}

} // namespace detail

/// Parses and validates a JSON run configuration.
///
/// Relative profile paths resolve against base_dir. Syntax errors and
/// missing or mistyped keys raise ParseError; violated preconditions raise
/// ValidationError.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
    using detail::Json;
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(detail::line_of_offset(text, e.byte ? e.byte - 1 : 0)) + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, "line 1: top level must be an object");

    RunConfig cfg;
    cfg.version = detail::get_as<int>(detail::require(doc, "version", ""), "version");
    if (cfg.version != kConfigVersion)
        throw Error(ErrorCode::ParseError, "unsupported config version " + std::to_string(cfg.version));

    const Json& dom = detail::require(doc, "domain", "");
    const auto type = detail::get_as<std::string>(detail::require(dom, "type", "domain."), "domain.type");
    if (type == "interval")
        cfg.domain.kind = DomainKind::Interval;
    else if (type == "rectangle")
        cfg.domain.kind = DomainKind::Rectangle;
    else if (type == "box")
        cfg.domain.kind = DomainKind::Box;
    else
        throw Error(ErrorCode::ParseError, "key \"domain.type\": unknown domain '" + type + "'");
    cfg.domain.extents = detail::get_as<std::vector<double>>(detail::require(dom, "extents", "domain."), "domain.extents");
    cfg.domain.shape = detail::get_as<std::vector<int>>(detail::require(dom, "shape", "domain."), "domain.shape");

    Grid grid;
    try {
        grid = build_grid(cfg.domain);
    } catch (const Error& e) {
        throw Error(ErrorCode::ValidationError, std::string("domain: ") + e.what());
    }

    const Json& w = detail::require(doc, "weight", "");
    const auto kind = detail::get_as<std::string>(detail::require(w, "kind", "weight."), "weight.kind");
    if (kind == "cells") {
        cfg.weight.kind = WeightKind::Cells;
        cfg.weight.values = detail::get_as<std::vector<double>>(detail::require(w, "values", "weight."), "weight.values");
        detail::validate("weight.values has " + std::to_string(cfg.weight.values.size()) + " entries, grid has " +
                             std::to_string(grid.cell_count()) + " cells",
                         cfg.weight.values.size() == grid.cell_count());
    } else if (kind == "bang_bang") {
        cfg.weight.kind = WeightKind::BangBang;
        cfg.weight.positive = detail::get_as<double>(detail::require(w, "positive", "weight."), "weight.positive");
        cfg.weight.negative = detail::get_as<double>(detail::require(w, "negative", "weight."), "weight.negative");
        cfg.weight.fraction = detail::get_as<double>(detail::require(w, "fraction", "weight."), "weight.fraction");
        detail::validate("weight.positive must be > 0", cfg.weight.positive > 0.0);
        detail::validate("weight.negative must be < 0", cfg.weight.negative < 0.0);
        detail::validate("weight.fraction must lie in (0,1)", cfg.weight.fraction > 0.0 && cfg.weight.fraction < 1.0);
        const auto pos = std::llround(cfg.weight.fraction * static_cast<double>(grid.cell_count()));
        detail::validate("weight.fraction leaves no positive or no negative cell",
                         pos > 0 && pos < static_cast<long long>(grid.cell_count()));
    } else if (kind == "profile") {
        cfg.weight.kind = WeightKind::Profile;
        cfg.weight.profile_path = detail::get_as<std::string>(detail::require(w, "path", "weight."), "weight.path");
        std::filesystem::path p(cfg.weight.profile_path);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        cfg.weight.profile = io::parse_profile_csv(io::read_file(p.string()));
        try {
            (void)cfg.weight.profile->cell_counts(grid);
        } catch (const Error& e) {
            throw Error(ErrorCode::ValidationError, std::string("weight.path: ") + e.what());
        }
    } else {
        throw Error(ErrorCode::ParseError, "key \"weight.kind\": unknown kind '" + kind + "'");
    }
    {
        const WeightField m(grid, cfg.weight_values(grid));
        detail::validate("∫m ≥ 0 (integral of m is " + io::format_double(m.integral()) + ")", m.integral() < 0.0);
        detail::validate("m has no positive part", m.has_positive_part());
    }

    if (doc.contains("solver")) {
        const Json& s = doc.at("solver");
        if (auto method = detail::optional_key<std::string>(s, "method", "solver.")) {
            if (*method == "dense")
                cfg.solver.kind = SolverKind::Dense;
            else if (*method == "iterative")
                cfg.solver.kind = SolverKind::Iterative;
            else
                throw Error(ErrorCode::ParseError, "key \"solver.method\": expected dense or iterative");
        } else {
            cfg.solver.kind = grid.cell_count() <= kDenseCellLimit ? SolverKind::Dense : SolverKind::Iterative;
        }
        cfg.solver.tol = detail::optional_key<double>(s, "tol", "solver.").value_or(cfg.solver.tol);
        cfg.solver.max_iters = detail::optional_key<int>(s, "max_iters", "solver.").value_or(cfg.solver.max_iters);
        cfg.spectrum_count = detail::optional_key<std::size_t>(s, "spectrum", "solver.").value_or(0);
        cfg.dump_stiffness = detail::optional_key<bool>(s, "dump_stiffness", "solver.").value_or(false);
        detail::validate("solver.tol must be > 0", cfg.solver.tol > 0.0);
        detail::validate("solver.max_iters must be >= 1", cfg.solver.max_iters >= 1);
    } else {
        cfg.solver.kind = grid.cell_count() <= kDenseCellLimit ? SolverKind::Dense : SolverKind::Iterative;
    }
    if (cfg.solver.kind == SolverKind::Dense)
        detail::validate("dense solver needs at most " + std::to_string(kDenseCellLimit) + " cells",
                         grid.cell_count() <= kDenseCellLimit);

    if (doc.contains("optimize")) {
        const Json& o = doc.at("optimize");
        cfg.optimize.max_iters = detail::optional_key<int>(o, "max_iters", "optimize.").value_or(cfg.optimize.max_iters);
        cfg.optimize.restarts = detail::optional_key<int>(o, "restarts", "optimize.").value_or(cfg.optimize.restarts);
        cfg.optimize.seed = detail::optional_key<std::uint64_t>(o, "seed", "optimize.").value_or(cfg.optimize.seed);
        cfg.optimize.threads = detail::optional_key<unsigned>(o, "threads", "optimize.").value_or(0);
        detail::validate("optimize.max_iters must be >= 1", cfg.optimize.max_iters >= 1);
        detail::validate("optimize.restarts must be >= 1", cfg.optimize.restarts >= 1);
    }
    cfg.optimize.solver = cfg.solver;

    if (doc.contains("simulate")) {
        const Json& s = doc.at("simulate");
        cfg.simulate.gamma = detail::optional_key<double>(s, "gamma", "simulate.");
        cfg.simulate.gamma_factor = detail::optional_key<double>(s, "gamma_factor", "simulate.");
        cfg.simulate.v0 = detail::optional_key<double>(s, "v0", "simulate.").value_or(cfg.simulate.v0);
        cfg.simulate.dt = detail::optional_key<double>(s, "dt", "simulate.");
        cfg.simulate.t_end = detail::optional_key<double>(s, "t_end", "simulate.");
        detail::validate("simulate.gamma must be >= 0", !cfg.simulate.gamma || *cfg.simulate.gamma >= 0.0);
        detail::validate("simulate.gamma_factor must be > 0",
                         !cfg.simulate.gamma_factor || *cfg.simulate.gamma_factor > 0.0);
        detail::validate("simulate.v0 must be >= 0", cfg.simulate.v0 >= 0.0);
        detail::validate("simulate.dt must be > 0", !cfg.simulate.dt || *cfg.simulate.dt > 0.0);
        detail::validate("simulate.t_end must be > 0", !cfg.simulate.t_end || *cfg.simulate.t_end > 0.0);
    }

    if (doc.contains("rearrange")) {
        cfg.stripes = detail::optional_key<std::vector<int>>(doc.at("rearrange"), "stripes", "rearrange.")
                          .value_or(std::vector<int>{});
        for (int k : cfg.stripes)
            detail::validate("rearrange.stripes: " + std::to_string(k) + " does not divide shape[0]",
                             k >= 1 && grid.shape[0] % k == 0);
    }

    if (doc.contains("verify")) {
        const Json& v = doc.at("verify");
        cfg.verify.trials = detail::optional_key<int>(v, "trials", "verify.").value_or(cfg.verify.trials);
        cfg.verify.seed = detail::optional_key<std::uint64_t>(v, "seed", "verify.").value_or(cfg.verify.seed);
        detail::validate("verify.trials must be >= 1", cfg.verify.trials >= 1);
    }

    cfg.output_dir = detail::optional_key<std::string>(doc, "output", "").value_or(cfg.output_dir);
    return cfg;
}

} // namespace weightopt
