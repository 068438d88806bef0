#pragma once

#include "spectral.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace weightopt {

enum class Outcome { Persistent, Extinct, Undecided };

inline const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::Persistent: return "persistent";
    case Outcome::Extinct: return "extinct";
    case Outcome::Undecided: return "undecided";
    }
    return "unknown";
}

struct LogisticOptions {
    double dt = 1e-2;
    double t_end = 10.0;
    // persistent: mass stays above persistence_level * |Omega| * max(m)+ over the final window
    double persistence_level = 1e-3;
    // extinct: mass drops below extinction_ratio * initial mass
    double extinction_ratio = 1e-9;
    // fraction of the horizon used for the final-window tests
    double window = 0.1;
    // smallest admissible dt / dt_initial before giving up
    double min_dt_ratio = 1e-9;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> total_mass;
    std::vector<double> min_v;
    std::vector<double> max_v;
    Outcome outcome = Outcome::Undecided;
    // decay rate d log(mass)/dt fitted over the final window
    double final_log_slope = 0.0;
    std::size_t clamp_events = 0;
    double most_negative_before_clamp = 0.0;
    double dt_used = 0.0;
    Vector final_state;
};

namespace detail {

inline double log_slope(const std::vector<double>& t, const std::vector<double>& mass, std::size_t from) {
    // least squares slope of log(mass) against t
    double st = 0, sl = 0, stt = 0, stl = 0;
    std::size_t n = 0;
    for (std::size_t i = from; i < t.size(); ++i) {
        if (!(mass[i] > 0.0)) continue;
        const double l = std::log(mass[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
        ++n;
    }
    if (n < 2) return 0.0;
    const double denom = n * stt - st * st;
    return denom > 0.0 ? (n * stl - st * sl) / denom : 0.0;
}

} // namespace detail

/// Time-steps v_t = Delta v + gamma v (m - v) with zero-flux boundary.
///
/// IMEX step: (W/dt + K) v' = W (v/dt + gamma v (m - v)). The explicit
/// reaction keeps v >= 0 while dt * gamma * (max|m| + max v) < 1; dt is halved
/// whenever that bound would be violated.
///
/// Outcome over the final window of the horizon:
///   extinct    - mass below extinction_ratio * initial mass, or mass decaying
///                (negative log slope) and below the initial mass;
///   persistent - mass above persistence_level * |Omega| * max(m)+ throughout
///                and a nonnegative trend;
///   undecided  - anything else.
inline Trajectory simulate_logistic(const WeightField& m, double gamma, const Vector& v0, const Grid& grid,
                                    const SparseMatrix& k, const LogisticOptions& opts = {}) {
    check_length(grid, static_cast<std::size_t>(v0.size()), "initial state");
    if ((v0.array() < 0.0).any()) throw Error(ErrorCode::NegativeInitial, "initial state has negative entries");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::ValidationError, "gamma must be >= 0");
    if (!(opts.dt > 0.0) || !(opts.t_end > 0.0))
        throw Error(ErrorCode::ValidationError, "dt and t_end must be positive");

    const Vector w = cell_measure_vector(grid);
    const double m_abs = m.values().cwiseAbs().maxCoeff();

    double dt = opts.dt;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> solver;
    auto factor = [&](double h) {
        SparseMatrix a = k;
        a.diagonal() += w / h;
        solver = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(a);
        if (solver->info() != Eigen::Success) throw Error(ErrorCode::UnstableStep, "diffusion factorisation failed");
    };
    factor(dt);

    Trajectory tr;
    Vector v = v0;
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.total_mass.push_back(w.dot(v));
        tr.min_v.push_back(v.minCoeff());
        tr.max_v.push_back(v.maxCoeff());
    };
    record(0.0);

    double t = 0.0;
    while (t < opts.t_end * (1.0 - 1e-12)) {
        const double vmax = v.maxCoeff();
        while (dt * gamma * (m_abs + vmax) >= 1.0) {
            dt *= 0.5;
            if (dt < opts.dt * opts.min_dt_ratio)
                throw Error(ErrorCode::UnstableStep, "reaction step bound cannot be met");
            factor(dt);
        }
        // last step shortened to land on t_end
        const double step = std::min(dt, opts.t_end - t);
        if (step != dt) factor(step);
        const Vector reaction = gamma * v.cwiseProduct(m.values() - v);
        Vector next = solver->solve(w.cwiseProduct(v / step + reaction));
        for (Eigen::Index i = 0; i < next.size(); ++i) {
            if (next[i] < 0.0) {
                tr.most_negative_before_clamp = std::min(tr.most_negative_before_clamp, next[i]);
                next[i] = 0.0;
                ++tr.clamp_events;
            }
        }
        v = std::move(next);
        t += step;
        record(t);
    }
    tr.dt_used = dt;
    tr.final_state = v;

    const double initial = tr.total_mass.front();
    const double final_mass = tr.total_mass.back();
    const double t_window = opts.t_end * (1.0 - opts.window);
    const auto from = static_cast<std::size_t>(
        std::lower_bound(tr.times.begin(), tr.times.end(), t_window) - tr.times.begin());
    tr.final_log_slope = detail::log_slope(tr.times, tr.total_mass, from);
    const double level = opts.persistence_level * grid.domain_measure() * std::max(m.values().maxCoeff(), 0.0);
    const double window_min = *std::min_element(tr.total_mass.begin() + static_cast<std::ptrdiff_t>(from),
                                                tr.total_mass.end());

    if (!(initial > 0.0) || final_mass < opts.extinction_ratio * initial)
        tr.outcome = Outcome::Extinct;
    else if (tr.final_log_slope < 0.0 && final_mass < initial)
        tr.outcome = Outcome::Extinct;
    else if (window_min > level && tr.final_log_slope >= 0.0)
        tr.outcome = Outcome::Persistent;
    else
        tr.outcome = Outcome::Undecided;
    return tr;
}

inline Trajectory simulate_logistic(const WeightField& m, double gamma, const Vector& v0, const Grid& grid,
                                    const LogisticOptions& opts = {}) {
    return simulate_logistic(m, gamma, v0, grid, assemble_stiffness(grid), opts);
}

/// Outcome predicted by comparing gamma with lambda1(m); within 5% of the
/// threshold the prediction is undecided.
inline Outcome predicted_outcome(double gamma, double lambda1, double band = 0.05) {
    if (gamma > lambda1 * (1.0 + band)) return Outcome::Persistent;
    if (gamma < lambda1 * (1.0 - band)) return Outcome::Extinct;
    return Outcome::Undecided;
}

} // namespace weightopt
