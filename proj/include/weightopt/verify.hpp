#pragma once

// Randomised self-check of the library's invariants, run by `weightopt verify`.

#include "config.hpp"
#include "logistic.hpp"
#include "optimize.hpp"
#include "rearrange.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace weightopt {

namespace sampling {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline Vector random_field(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = uniform(rng, lo, hi);
    return v;
}

/// Random weight with integral < 0 and a positive part.
inline Vector random_admissible_weight(Rng& rng, const Grid& grid) {
    for (;;) {
        Vector m = random_field(rng, grid.cell_count(), -1.0, 1.0);
        const double mean = integrate(grid, m) / grid.domain_measure();
        m.array() -= mean + uniform(rng, 0.05, 0.5);
        if (integrate(grid, m) < 0.0 && (m.array() > 0.0).any()) return m;
    }
}

/// Random vector in the discrete V_m.
inline Vector random_in_vm(Rng& rng, const WeightField& m) {
    return project_pm(m, random_field(rng, m.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace sampling

struct PropertyResult {
    std::string name;
    bool passed = true;
    int trials = 0;
    // largest observed violation measure (property specific, 0 is ideal)
    double worst = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<PropertyResult> results;

    bool all_passed() const {
        return std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.passed; });
    }
};

namespace detail {

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

class PropertyRun {
public:
    PropertyRun(std::string name, double tol) : tol_(tol) { res_.name = std::move(name); }

    // Records one observation; the property fails once any exceeds tol.
    void observe(double violation) {
        ++res_.trials;
        res_.worst = std::max(res_.worst, violation);
        if (!(violation <= tol_)) res_.passed = false;
    }

    void fail(const std::string& why) {
        res_.passed = false;
        if (res_.detail.empty()) res_.detail = why;
    }

    PropertyResult finish() {
        if (res_.detail.empty()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "tol %g", tol_);
            res_.detail = buf;
        }
        return res_;
    }

private:
    double tol_;
    PropertyResult res_;
};

} // namespace detail

inline VerifyReport run_property_suite(const VerifyConfig& cfg) {
    using namespace sampling;
    using detail::PropertyRun;
    using detail::rel_diff;
    Rng rng(cfg.seed ^ 0x5eedULL);
    const int trials = cfg.trials;
    VerifyReport report;
    auto guarded = [&](PropertyRun run, const std::function<void(PropertyRun&)>& body) {
        try {
            body(run);
        } catch (const std::exception& e) {
            run.fail(e.what());
        }
        report.results.push_back(run.finish());
    };
    auto random_grid = [&](bool allow_2d) {
        if (allow_2d && uniform_int(rng, 0, 2) == 0)
            return build_grid(rectangle_spec(uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0), uniform_int(rng, 3, 8),
                                             uniform_int(rng, 3, 8)));
        return build_grid(interval_spec(uniform(rng, 0.5, 2.0), uniform_int(rng, 4, 32)));
    };

    guarded(PropertyRun("grid.stiffness_symmetric_psd_kernel", 1e-12), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const SparseMatrix k = assemble_stiffness(g);
            const double scale = k.diagonal().maxCoeff();
            run.observe((SparseMatrix(k.transpose()) - k).norm() / scale);
            run.observe((k * Vector::Ones(k.rows())).cwiseAbs().maxCoeff() / scale);
            const Vector f = random_field(rng, g.cell_count());
            run.observe(std::max(0.0, -f.dot(k * f)) / scale);
        }
    });

    guarded(PropertyRun("grid.integrate_linear", 1e-12), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const Vector f = random_field(rng, g.cell_count()), h = random_field(rng, g.cell_count());
            const double a = uniform(rng, -3, 3), b = uniform(rng, -3, 3);
            const double lhs = integrate(g, Vector(a * f + b * h));
            const double rhs = a * integrate(g, f) + b * integrate(g, h);
            run.observe(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
    });

    guarded(PropertyRun("spectral.projection_properties", 1e-12), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const WeightField m(g, random_admissible_weight(rng, g));
            const WeightField q(g, random_admissible_weight(rng, g));
            const Vector f = random_field(rng, g.cell_count()), phi = random_field(rng, g.cell_count());
            const Vector wm = m.weighted();
            const double scale = wm.cwiseAbs().sum() * (1.0 + f.cwiseAbs().maxCoeff()) * (1.0 + phi.cwiseAbs().maxCoeff());
            // adjoint identity
            run.observe(std::abs(wm.dot(project_pm(m, f).cwiseProduct(phi)) - wm.dot(f.cwiseProduct(project_pm(m, phi)))) /
                        scale);
            // kernel is the constants
            run.observe(project_pm(m, Vector::Constant(f.size(), uniform(rng, -5, 5))).cwiseAbs().maxCoeff() / 5.0);
            // identity on L^2_m and idempotent
            const Vector pf = project_pm(m, f);
            run.observe((project_pm(m, pf) - pf).cwiseAbs().maxCoeff() / (1.0 + pf.cwiseAbs().maxCoeff()));
            // P_q P_m = id on L^2_q
            const Vector fq = project_pm(q, f);
            run.observe((project_pm(q, project_pm(m, fq)) - fq).cwiseAbs().maxCoeff() / (1.0 + fq.cwiseAbs().maxCoeff()));
        }
    });

    guarded(PropertyRun("spectral.gm_self_adjoint_and_saddle", 1e-10), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const SparseMatrix k = assemble_stiffness(g);
            const WeightField m(g, random_admissible_weight(rng, g));
            const SaddleSolver gm(k, m);
            const Vector f = random_in_vm(rng, m), h = random_in_vm(rng, m);
            const Vector gf = gm.apply_gm(f), gh = gm.apply_gm(h);
            run.observe(rel_diff(gf.dot(k * h), f.dot(k * gh)));
            // K u - W m f parallel to W m, and u in V_m
            const Vector wm = m.weighted();
            const Vector r = k * gf - wm.cwiseProduct(f);
            const Vector perp = r - (r.dot(wm) / wm.squaredNorm()) * wm;
            run.observe(perp.norm() / (1.0 + wm.cwiseProduct(f).norm()));
            run.observe(std::abs(wm.dot(gf)) / (wm.norm() * (1.0 + gf.norm())));
        }
    });

    guarded(PropertyRun("spectral.eigenpair_identities", 1e-10), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const SparseMatrix k = assemble_stiffness(g);
            const WeightField m(g, random_admissible_weight(rng, g));
            const EigenPair p = principal_eigenpair(m, k);
            const Vector wm = m.weighted();
            run.observe(rel_diff(wm.dot(p.u.cwiseProduct(p.u)), p.mu1));
            run.observe(std::abs(p.u.dot(k * p.u) - 1.0));
            run.observe(std::abs(wm.dot(p.u)) / wm.norm());
            if (!p.positive) run.fail("eigenfunction not positive");
            run.observe(rel_diff(p.mu1 * p.lambda1, 1.0));
            const Vector f = random_in_vm(rng, m);
            run.observe(std::max(0.0, rayleigh(m, k, f) - p.mu1) / p.mu1);
            SolverOptions it;
            it.kind = SolverKind::Iterative;
            run.observe(rel_diff(principal_eigenpair(m, k, it).mu1, p.mu1));
        }
    });

    guarded(PropertyRun("spectral.homogeneity_and_euler", 1e-10), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const SparseMatrix k = assemble_stiffness(g);
            const WeightField m(g, random_admissible_weight(rng, g));
            const EigenPair p = principal_eigenpair(m, k);
            run.observe(rel_diff(derivative_mu1(p, g, m.values()), p.mu1));
            for (double alpha : {0.5, 2.0, 10.0}) {
                const EigenPair q = principal_eigenpair(m.scaled(g, alpha), k);
                run.observe(rel_diff(q.mu1, alpha * p.mu1));
            }
        }
    });

    guarded(PropertyRun("spectral.derivative_matches_finite_difference", 1e-5), [&](PropertyRun& run) {
        for (int t = 0; t < std::max(1, trials / 5); ++t) {
            const Grid g = build_grid(interval_spec(1.0, 24));
            const SparseMatrix k = assemble_stiffness(g);
            const Vector mv = random_admissible_weight(rng, g);
            const WeightField m(g, mv);
            const Vector v = random_field(rng, g.cell_count());
            const double d = derivative_mu1(principal_eigenpair(m, k), g, v);
            double best = INFINITY;
            for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
                const double up = principal_eigenpair(WeightField(g, Vector(mv + h * v)), k).mu1;
                const double dn = principal_eigenpair(WeightField(g, Vector(mv - h * v)), k).mu1;
                best = std::min(best, rel_diff((up - dn) / (2 * h), d));
            }
            run.observe(best);
        }
    });

    guarded(PropertyRun("spectral.convexity", 1e-10), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(false);
            const SparseMatrix k = assemble_stiffness(g);
            const Vector a = random_admissible_weight(rng, g);
            const Vector b = t % 4 == 0 ? Vector(-random_field(rng, g.cell_count(), 0.1, 1.0))
                                        : random_admissible_weight(rng, g);
            const double ma = mu1_extended(WeightField(g, a), k).value;
            const double mb = mu1_extended(WeightField(g, b), k).value;
            for (double s : {0.25, 0.5, 0.75}) {
                const double mid = mu1_extended(WeightField(g, Vector(s * a + (1 - s) * b)), k).value;
                run.observe(std::max(0.0, mid - (s * ma + (1 - s) * mb)));
            }
        }
    });

    guarded(PropertyRun("spectral.signed_spectrum_inertia", 0.0), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const Vector mv = random_admissible_weight(rng, g);
            const WeightField m(g, mv);
            const auto spec = signed_spectrum(m, g, g.cell_count());
            const auto npos = static_cast<std::size_t>((mv.array() > 0.0).count());
            const auto nneg = static_cast<std::size_t>((mv.array() < 0.0).count());
            run.observe(spec.positive.size() == npos ? 0.0 : 1.0);
            run.observe(spec.negative.size() + 1 == nneg ? 0.0 : 1.0);
            run.observe(spec.basis_dim + 1 == g.cell_count() ? 0.0 : 1.0);
            run.observe(std::is_sorted(spec.positive.rbegin(), spec.positive.rend()) ? 0.0 : 1.0);
            run.observe(std::is_sorted(spec.negative.begin(), spec.negative.end()) ? 0.0 : 1.0);
            const double top = std::max(spec.positive.empty() ? 0.0 : spec.positive.front(),
                                        spec.negative.empty() ? 0.0 : -spec.negative.front());
            run.observe(top <= spec.bound * (1 + 1e-12) ? 0.0 : 1.0);
        }
    });

    guarded(PropertyRun("rearrange.hardy_littlewood_and_polya_szego", 1e-12), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = build_grid(interval_spec(1.0, uniform_int(rng, 2, 40)));
            const SparseMatrix k = assemble_stiffness(g);
            const Vector f = random_field(rng, g.cell_count(), 0.0, 1.0), h = random_field(rng, g.cell_count());
            const auto fs = monotone_x1_rearrangement(to_std(f), g), hs = monotone_x1_rearrangement(to_std(h), g);
            const Eigen::Map<const Vector> fsv(fs.data(), f.size()), hsv(hs.data(), h.size());
            run.observe(std::max(0.0, integrate(g, Vector(f.cwiseProduct(h))) - integrate(g, Vector(fsv.cwiseProduct(hsv)))));
            run.observe(std::max(0.0, fsv.dot(k * fsv) - f.dot(k * f)));
        }
    });

    guarded(PropertyRun("rearrange.majorization", 1e-12), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = build_grid(interval_spec(1.0, uniform_int(rng, 2, 24)));
            const auto n = g.cell_count();
            const auto f = to_std(random_field(rng, n));
            auto perm = f;
            std::shuffle(perm.begin(), perm.end(), rng);
            if (!(prec_check(perm, f, g).holds && prec_check(f, perm, g).holds && equimeasurable(f, perm, g)))
                run.fail("permutation not mutually majorized");
            // convex combination of permutations: majorized, within bounds
            std::vector<double> avg(n, 0.0);
            double total = 0.0;
            for (int j = 0; j < 4; ++j) {
                std::shuffle(perm.begin(), perm.end(), rng);
                const double c = uniform(rng, 0.1, 1.0);
                total += c;
                for (std::size_t i = 0; i < n; ++i) avg[i] += c * perm[i];
            }
            for (auto& x : avg) x /= total;
            const auto rep = prec_check(avg, f, g);
            run.observe(rep.holds ? 0.0 : std::max(1.0, -rep.worst_margin));
            const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
            for (double x : avg) run.observe(std::max({0.0, *lo - x - 1e-13, x - *hi - 1e-13}));
        }
    });

    guarded(PropertyRun("rearrange.monotone_and_hl_outputs", 0.0), [&](PropertyRun& run) {
        for (int t = 0; t < trials; ++t) {
            const Grid g = random_grid(true);
            const auto f = to_std(random_field(rng, g.cell_count()));
            const auto once = monotone_x1_rearrangement(f, g);
            run.observe(once == monotone_x1_rearrangement(once, g) ? 0.0 : 1.0);
            run.observe(equimeasurable(once, f, g) ? 0.0 : 1.0);
            const auto cls = decreasing_rearrangement(f, g);
            const auto u = to_std(random_field(rng, g.cell_count()));
            const auto hl = hl_maximizer(cls, u, g);
            run.observe(equimeasurable(hl, f, g) ? 0.0 : 1.0);
            run.observe(comonotone_violations(hl, u, 0.0) == 0 ? 0.0 : 1.0);
        }
    });

    guarded(PropertyRun("optimize.ascent_and_fixed_point", 1e-12), [&](PropertyRun& run) {
        for (int t = 0; t < std::max(1, trials / 5); ++t) {
            const Grid g = t % 2 ? build_grid(rectangle_spec(1.5, 1.0, 8, 6)) : build_grid(interval_spec(1.0, 32));
            const double frac = 0.125 * uniform_int(rng, 1, 3);
            const RearrangementClass cls({{uniform(rng, 0.5, 2.0), frac * g.domain_measure()},
                                          {-uniform(rng, 1.0, 3.0), (1 - frac) * g.domain_measure()}});
            OptimizeOptions opts;
            opts.restarts = 3;
            opts.seed = rng();
            opts.threads = 1;
            const auto res = minimize_lambda1(cls, g, opts);
            for (std::size_t i = 1; i < res.trace.size(); ++i)
                run.observe(std::max(0.0, res.trace[i - 1].mu1 - res.trace[i].mu1));
            run.observe(equimeasurable(res.final_m, cls.expanded(g), g) ? 0.0 : 1.0);
            if (res.converged) run.observe(res.comonotone_violations == 0 ? 0.0 : 1.0);
        }
    });

    guarded(PropertyRun("optimize.oscillation_raises_lambda1", 0.0), [&](PropertyRun& run) {
        const Grid g = build_grid(interval_spec(1.0, 64));
        const SparseMatrix k = assemble_stiffness(g);
        const RearrangementClass cls({{1.0, 0.25}, {-2.0, 0.75}});
        double prev = 0.0;
        for (int s : {1, 2, 4, 8}) {
            const auto m = oscillating_sequence(cls, g, s);
            const double l = principal_eigenpair(WeightField(g, std::span<const double>(m)), k).lambda1;
            run.observe(l > prev ? 0.0 : 1.0);
            prev = l;
        }
    });

    guarded(PropertyRun("logistic.conservation_and_nonnegativity", 1e-10), [&](PropertyRun& run) {
        const Grid g = build_grid(interval_spec(1.0, 64));
        const SparseMatrix k = assemble_stiffness(g);
        const WeightField m(g, random_admissible_weight(rng, g));
        LogisticOptions opts;
        opts.dt = 0.01;
        opts.t_end = 2.0;
        const Vector v0 = random_field(rng, g.cell_count(), 0.0, 1.0);
        const auto cons = simulate_logistic(m, 0.0, v0, g, k, opts);
        run.observe(rel_diff(cons.total_mass.back(), cons.total_mass.front()) / opts.t_end);
        const auto tr = simulate_logistic(m, 5.0, v0, g, k, opts);
        run.observe(static_cast<double>(tr.clamp_events));
    });

    return report;
}

} // namespace weightopt
