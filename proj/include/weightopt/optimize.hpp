#pragma once

#include "rearrange.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <random>
#include <thread>
#include <vector>

namespace weightopt {

struct OptimizeOptions {
    int max_iters = 200;
    int restarts = 1;
    std::uint64_t seed = 0;
    SolverOptions solver;
    // 0 picks hardware_concurrency; results do not depend on it.
    unsigned threads = 0;
};

struct TraceEntry {
    int iteration = 0;
    double mu1 = 0.0;
    double lambda1 = 0.0;
    // cells that change when passing to the next iterate
    std::size_t changed_cells = 0;
    // sum w (m_next - m) u^2, the first-order gain of that move
    double linear_gain = 0.0;
};

enum class Monotonicity { Decreasing, Increasing, NotMonotone };

inline const char* to_string(Monotonicity m) {
    switch (m) {
    case Monotonicity::Decreasing: return "monotone_decreasing";
    case Monotonicity::Increasing: return "monotone_increasing";
    case Monotonicity::NotMonotone: return "not_monotone";
    }
    return "unknown";
}

struct LineMonotonicity {
    bool decreasing = true;
    bool increasing = true;
};

struct MonotoneReport {
    Monotonicity classification = Monotonicity::NotMonotone;
    std::vector<LineMonotonicity> lines;

    bool monotone() const { return classification != Monotonicity::NotMonotone; }
};

struct RestartSummary {
    int restart = 0;
    double mu1 = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct OptimizationResult {
    std::vector<double> final_m;
    EigenPair final_pair;
    std::vector<TraceEntry> trace;
    bool converged = false;
    int restarts_used = 0;
    int best_restart = 0;
    std::size_t comonotone_violations = 0;
    MonotoneReport monotone_x1;
    std::vector<RestartSummary> restarts;
};

/// Scans every x1-line. A constant field counts as monotone_decreasing.
inline MonotoneReport check_monotone_x1(std::span<const double> m, const Grid& grid) {
    check_length(grid, m.size(), "field");
    MonotoneReport rep;
    rep.lines.reserve(grid.axis1_lines.size());
    bool all_dec = true, all_inc = true;
    for (const auto& line : grid.axis1_lines) {
        LineMonotonicity lm;
        for (std::size_t j = 0; j + 1 < line.size(); ++j) {
            if (m[line[j]] < m[line[j + 1]]) lm.decreasing = false;
            if (m[line[j]] > m[line[j + 1]]) lm.increasing = false;
        }
        all_dec = all_dec && lm.decreasing;
        all_inc = all_inc && lm.increasing;
        rep.lines.push_back(lm);
    }
    rep.classification = all_dec ? Monotonicity::Decreasing
                                 : (all_inc ? Monotonicity::Increasing : Monotonicity::NotMonotone);
    return rep;
}

/// Pairs (i, j) with u_i > u_j but m_i < m_j. Values of u closer than
/// tie_tol (chained) are merged into one level first.
inline std::size_t comonotone_violations(std::span<const double> m, std::span<const double> u, double tie_tol) {
    const std::size_t n = m.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });

    std::vector<double> levels(m.begin(), m.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    auto rank = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
    };

    // Fenwick tree over m ranks of cells already passed (strictly higher u).
    std::vector<std::size_t> tree(levels.size() + 1, 0);
    auto add = [&](std::size_t r) {
        for (std::size_t i = r + 1; i < tree.size(); i += i & (~i + 1)) ++tree[i];
    };
    auto count_below = [&](std::size_t r) {
        std::size_t s = 0;
        for (std::size_t i = r; i > 0; i -= i & (~i + 1)) s += tree[i];
        return s;
    };

    std::size_t violations = 0;
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && u[order[end - 1]] - u[order[end]] <= tie_tol) ++end;
        for (std::size_t p = start; p < end; ++p) violations += count_below(rank(m[order[p]]));
        for (std::size_t p = start; p < end; ++p) add(rank(m[order[p]]));
        start = end;
    }
    return violations;
}

/// Class values laid out in flat cell order (largest first).
inline std::vector<double> canonical_arrangement(const RearrangementClass& cls, const Grid& grid) {
    return cls.expanded(grid);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Seeded random member of the class; restart r draws from its own stream.
inline std::vector<double> random_arrangement(const RearrangementClass& cls, const Grid& grid, std::uint64_t seed,
                                              std::uint64_t stream) {
    auto values = cls.expanded(grid);
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(stream)));
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(values[i - 1], values[j]);
    }
    return values;
}

/// Periodic arrangement of the class with k periods along x1.
///
/// Every period is a slab of shape[0]/k consecutive x1 positions across all
/// lines. Each value's cell count is spread over the periods as evenly as
/// possible; leftover units go to the periods with the most free cells,
/// spaced evenly among them. Inside a slab values are placed largest first,
/// filling x1 position by position.
inline std::vector<double> oscillating_sequence(const RearrangementClass& cls, const Grid& grid, int k) {
    RearrangementClass::require_uniform(grid);
    const int n1 = grid.shape[0];
    if (k < 1 || n1 % k != 0)
        throw Error(ErrorCode::IndivisibleStripes,
                    std::to_string(k) + " stripes do not divide " + std::to_string(n1) + " cells along x1");
    const auto counts = cls.cell_counts(grid);
    const std::size_t periods = static_cast<std::size_t>(k);
    const std::size_t nv = counts.size();

    std::vector<std::vector<std::size_t>> alloc(periods, std::vector<std::size_t>(nv, 0));
    std::vector<std::size_t> free(periods, grid.cell_count() / periods);
    for (std::size_t v = 0; v < nv; ++v) {
        const std::size_t base = counts[v] / periods;
        for (std::size_t j = 0; j < periods; ++j) {
            alloc[j][v] = base;
            free[j] -= base;
        }
    }
    for (std::size_t v = 0; v < nv; ++v) {
        std::size_t need = counts[v] % periods;
        // group periods by free capacity, largest first
        std::map<std::size_t, std::vector<std::size_t>, std::greater<>> by_free;
        for (std::size_t j = 0; j < periods; ++j)
            if (free[j] > 0) by_free[free[j]].push_back(j);
        for (auto& [cap, group] : by_free) {
            if (need == 0) break;
            const std::size_t take = std::min(need, group.size());
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t j = group[i * group.size() / take];
                ++alloc[j][v];
                --free[j];
            }
            need -= take;
        }
        if (need != 0) throw Error(ErrorCode::MeasureMismatch, "class does not tile the periods");
    }

    const std::size_t width = static_cast<std::size_t>(n1 / k);
    std::vector<double> out(grid.cell_count());
    for (std::size_t j = 0; j < periods; ++j) {
        std::size_t v = 0, used = 0;
        for (std::size_t p = 0; p < width; ++p) {
            for (const auto& line : grid.axis1_lines) {
                while (used == alloc[j][v]) {
                    ++v;
                    used = 0;
                }
                out[line[j * width + p]] = cls.profile()[v].value;
                ++used;
            }
        }
    }
    return out;
}

namespace detail {

struct RestartRun {
    std::vector<double> final_m;
    EigenPair pair;
    std::vector<TraceEntry> trace;
    bool converged = false;
};

inline RestartRun run_restart(const RearrangementClass& cls, const Grid& grid, const SparseMatrix& k,
                              std::vector<double> m, const OptimizeOptions& opts) {
    RestartRun run;
    SolverOptions sopts = opts.solver;
    const Vector w = cell_measure_vector(grid);
    for (int it = 0; it < opts.max_iters; ++it) {
        const WeightField weight(grid, std::span<const double>(m));
        EigenPair pair = principal_eigenpair(weight, k, sopts);
        auto next = hl_maximizer(cls, std::span<const double>(pair.u.data(), m.size()), grid);

        TraceEntry entry;
        entry.iteration = it;
        entry.mu1 = pair.mu1;
        entry.lambda1 = pair.lambda1;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (next[i] != m[i]) ++entry.changed_cells;
            entry.linear_gain += w[static_cast<Eigen::Index>(i)] * (next[i] - m[i]) * pair.u[i] * pair.u[i];
        }
        run.trace.push_back(entry);

        if (sopts.kind == SolverKind::Iterative) sopts.warm_start = pair.u;
        run.final_m = m;
        run.pair = std::move(pair);
        if (entry.changed_cells == 0) {
            run.converged = true;
            break;
        }
        m = std::move(next);
    }
    return run;
}

} // namespace detail

/// Minimises lambda1 (maximises mu1) over the rearrangement class.
///
/// Each step solves for the eigenfunction u of the current weight and moves
/// to the class member ordered like u; by convexity of mu1 and the
/// derivative sum w v u^2 this never decreases mu1. Restart 0 starts from
/// the canonical arrangement, later restarts from seeded permutations. The
/// result is the restart with largest mu1 (lowest index on ties).
inline OptimizationResult minimize_lambda1(const RearrangementClass& cls, const Grid& grid,
                                           const OptimizeOptions& opts = {}) {
    if (!(cls.source_integral() < 0.0) || !cls.has_positive_value())
        throw Error(ErrorCode::NotAdmissibleClass, "class needs a positive value and negative integral (got " +
                                                       std::to_string(cls.source_integral()) + ")");
    const SparseMatrix k = assemble_stiffness(grid);
    const int restarts = std::max(1, opts.restarts);

    auto start_for = [&](int r) {
        return r == 0 ? canonical_arrangement(cls, grid)
                      : random_arrangement(cls, grid, opts.seed, static_cast<std::uint64_t>(r));
    };

    std::vector<detail::RestartRun> runs(static_cast<std::size_t>(restarts));
    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(restarts));
    if (threads <= 1) {
        for (int r = 0; r < restarts; ++r) runs[r] = detail::run_restart(cls, grid, k, start_for(r), opts);
    } else {
        for (int first = 0; first < restarts; first += static_cast<int>(threads)) {
            std::vector<std::future<detail::RestartRun>> batch;
            const int last = std::min(restarts, first + static_cast<int>(threads));
            for (int r = first; r < last; ++r)
                batch.push_back(std::async(std::launch::async,
                                           [&, r] { return detail::run_restart(cls, grid, k, start_for(r), opts); }));
            for (int r = first; r < last; ++r) runs[r] = batch[r - first].get();
        }
    }

    OptimizationResult res;
    res.restarts_used = restarts;
    for (int r = 0; r < restarts; ++r) {
        const auto& run = runs[r];
        res.restarts.push_back({r, run.pair.mu1, static_cast<int>(run.trace.size()), run.converged});
        if (r == 0 || run.pair.mu1 > runs[res.best_restart].pair.mu1) res.best_restart = r;
    }
    auto& best = runs[res.best_restart];
    res.final_m = std::move(best.final_m);
    res.final_pair = std::move(best.pair);
    res.trace = std::move(best.trace);
    res.converged = best.converged;
    const auto& u = res.final_pair.u;
    res.comonotone_violations =
        comonotone_violations(res.final_m, std::span<const double>(u.data(), res.final_m.size()),
                              1e-10 * u.cwiseAbs().maxCoeff());
    res.monotone_x1 = check_monotone_x1(res.final_m, grid);
    return res;
}

} // namespace weightopt
