#pragma once

#include "grid.hpp"
#include "weight.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace weightopt {

enum class SolverKind { Dense, Iterative };

inline const char* to_string(SolverKind kind) { return kind == SolverKind::Dense ? "dense" : "iterative"; }

// Above this many cells the dense pencil is refused.
inline constexpr std::size_t kDenseCellLimit = 6000;

struct SolverOptions {
    SolverKind kind = SolverKind::Dense;
    double tol = 1e-12;
    int max_iters = 10000;
    // Iterative path only: starting vector, typically the previous eigenfunction.
    std::optional<Vector> warm_start;
};

struct EigenPair {
    double mu1 = 0.0;
    double lambda1 = 0.0;
    Vector u;
    double residual = 0.0;
    SolverKind solver = SolverKind::Dense;
    int iterations = 0;
    // mu1 - mu2 from the dense pencil; NaN on the iterative path.
    double gap = std::numeric_limits<double>::quiet_NaN();
    bool positive = false;
};

/// Positive and negative eigenvalues of the constrained pencil.
///
/// positive is mu_1 >= mu_2 >= ... > 0; negative is mu_{-1} <= mu_{-2} <= ... < 0,
/// i.e. the most negative value comes first.
struct SignedSpectrum {
    std::vector<double> positive;
    std::vector<double> negative;
    std::size_t basis_dim = 0;
    double bound = 0.0;
};

namespace detail {

inline void require_nonzero_integral(const WeightField& m) {
    if (m.integral() == 0.0) throw Error(ErrorCode::ZeroWeightIntegral, "integral of m is zero");
}

inline void require_admissible(const WeightField& m) {
    if (!(m.integral() < 0.0))
        throw Error(ErrorCode::NotAdmissible, "integral of m is " + std::to_string(m.integral()) + " >= 0");
    if (!m.has_positive_part()) throw Error(ErrorCode::NoPositivePart, "m <= 0 everywhere");
}

inline double quad_form(const SparseMatrix& k, const Vector& f) { return f.dot(k * f); }

inline double weighted_square(const WeightField& m, const Vector& f) {
    return (m.cell_measures().array() * m.values().array() * f.array().square()).sum();
}

// Entry of largest magnitude made positive.
inline void fix_sign(Vector& u) {
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u[imax] < 0.0) u = -u;
}

} // namespace detail

/// P_m f = f - (int m f / int m).
inline Vector project_pm(const WeightField& m, const Vector& f) {
    detail::require_nonzero_integral(m);
    if (static_cast<std::size_t>(f.size()) != m.size())
        throw Error(ErrorCode::LengthMismatch, "field and weight lengths differ");
    const double c = m.weighted().dot(f) / m.integral();
    return f.array() - c;
}

/// Householder basis of the hyperplane {f : (W m)^T f = 0}.
///
/// H = I - beta h h^T maps W m onto a multiple of e_1, so columns 2..n of H
/// are an orthonormal basis of the hyperplane. Reduced matrices B^T S B are
/// formed with rank-two updates instead of an explicit basis.
class ConstraintBasis {
public:
    explicit ConstraintBasis(const Vector& normal) : h_(normal) {
        const double norm = normal.norm();
        h_[0] += (normal[0] >= 0.0 ? norm : -norm);
        beta_ = 2.0 / h_.squaredNorm();
    }

    Eigen::Index dim() const { return h_.size() - 1; }

    // B^T S B for symmetric dense S.
    Eigen::MatrixXd reduce(const Eigen::MatrixXd& s) const {
        const Vector sh = s * h_;
        const double hsh = h_.dot(sh);
        Eigen::MatrixXd hsh_full = s;
        hsh_full.noalias() -= beta_ * h_ * sh.transpose();
        hsh_full.noalias() -= beta_ * sh * h_.transpose();
        hsh_full.noalias() += (beta_ * beta_ * hsh) * h_ * h_.transpose();
        const Eigen::Index n = dim();
        return hsh_full.bottomRightCorner(n, n);
    }

    // B^T diag(d) B.
    Eigen::MatrixXd reduce_diagonal(const Vector& d) const {
        const Vector dh = d.cwiseProduct(h_);
        const double hdh = h_.dot(dh);
        const Eigen::Index n = dim();
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
        out.diagonal() = d.tail(n);
        const auto ht = h_.tail(n);
        const auto dht = dh.tail(n);
        out.noalias() -= beta_ * ht * dht.transpose();
        out.noalias() -= beta_ * dht * ht.transpose();
        out.noalias() += (beta_ * beta_ * hdh) * ht * ht.transpose();
        return out;
    }

    // B y
    Vector expand(const Vector& y) const {
        Vector x(h_.size());
        x[0] = 0.0;
        x.tail(dim()) = y;
        x -= (beta_ * h_.tail(dim()).dot(y)) * h_;
        return x;
    }

private:
    Vector h_;
    double beta_ = 0.0;
};

/// Factorised saddle system [K, Wm; (Wm)^T, 0] for one weight.
///
/// solve(rhs) returns the u with K u + alpha W m = rhs and m^T W u = 0.
/// The factorisation is built once and reused by every solve().
class SaddleSolver {
public:
    SaddleSolver(const SparseMatrix& k, const WeightField& m) : m_(m), n_(k.rows()) {
        detail::require_nonzero_integral(m);
        const Vector wm = m.weighted();
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(k.nonZeros() + 2 * n_));
        for (int c = 0; c < k.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(k, c); it; ++it)
                triplets.emplace_back(it.row(), it.col(), it.value());
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (wm[i] == 0.0) continue;
            triplets.emplace_back(i, n_, wm[i]);
            triplets.emplace_back(n_, i, wm[i]);
        }
        SparseMatrix saddle(n_ + 1, n_ + 1);
        saddle.setFromTriplets(triplets.begin(), triplets.end());
        saddle.makeCompressed();
        lu_.analyzePattern(saddle);
        lu_.factorize(saddle);
        if (lu_.info() != Eigen::Success)
            throw Error(ErrorCode::SingularSystem, "saddle factorisation failed: " + lu_.lastErrorMessage());
    }

    const WeightField& weight() const { return m_; }

    Vector solve(const Vector& rhs) const {
        Vector full(n_ + 1);
        full.head(n_) = rhs;
        full[n_] = 0.0;
        const Vector sol = lu_.solve(full);
        if (!sol.allFinite()) throw Error(ErrorCode::SingularSystem, "saddle solve produced non-finite values");
        return sol.head(n_);
    }

    /// G_m f: the u in V_m with <u, phi>_K = <m f, phi> for all phi in V_m.
    Vector apply_gm(const Vector& f) const {
        return solve(m_.cell_measures().cwiseProduct(m_.values()).cwiseProduct(f));
    }

private:
    WeightField m_;
    Eigen::Index n_;
    // SparseLU::solve is logically const but not declared so.
    mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

inline Vector apply_gm(const WeightField& m, const SparseMatrix& k, const Vector& f) {
    return SaddleSolver(k, m).apply_gm(f);
}

/// f^T W (m f) / f^T K f.
inline double rayleigh(const WeightField& m, const SparseMatrix& k, const Vector& f) {
    const double denom = detail::quad_form(k, f);
    const double scale = (k.diagonal().array() * f.array().square()).sum();
    if (!(denom > 1e-13 * scale)) throw Error(ErrorCode::ConstantField, "f^T K f vanishes: field is constant");
    return detail::weighted_square(m, f) / denom;
}

namespace detail {

inline EigenPair finish_pair(const WeightField& m, const SparseMatrix& k, Vector u, EigenPair pair) {
    fix_sign(u);
    u /= std::sqrt(quad_form(k, u));
    pair.mu1 = weighted_square(m, u);
    pair.lambda1 = 1.0 / pair.mu1;
    const Vector r = k * u - pair.lambda1 * m.cell_measures().cwiseProduct(m.values()).cwiseProduct(u);
    pair.residual = r.norm() / (k * u).norm();
    pair.positive = (u.array() > 0.0).all();
    pair.u = std::move(u);
    return pair;
}

inline EigenPair dense_pair(const WeightField& m, const SparseMatrix& k) {
    if (m.size() > kDenseCellLimit)
        throw Error(ErrorCode::TooLarge, std::to_string(m.size()) + " cells exceed the dense limit");
    const ConstraintBasis basis(m.weighted());
    const Eigen::MatrixXd kr = basis.reduce(Eigen::MatrixXd(k));
    const Eigen::MatrixXd ar = basis.reduce_diagonal(m.cell_measures().cwiseProduct(m.values()));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ar, kr, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "dense pencil solve failed");
    const Eigen::Index last = es.eigenvalues().size() - 1;
    EigenPair pair;
    pair.solver = SolverKind::Dense;
    pair.iterations = 1;
    if (last >= 1) pair.gap = es.eigenvalues()[last] - es.eigenvalues()[last - 1];
    return finish_pair(m, k, basis.expand(es.eigenvectors().col(last)), std::move(pair));
}

inline Vector k_normalized(const SparseMatrix& k, Vector x) {
    const double nrm = std::sqrt(quad_form(k, x));
    return x / nrm;
}

// For s > 0, K - s W diag(m) is positive definite exactly when s < lambda1
// (its lowest eigenvalue is concave in s, vanishes at 0 and lambda1, and
// has positive slope at 0 when int m < 0).
class ShiftedFactor {
public:
    ShiftedFactor(const SparseMatrix& k, const WeightField& m, double shift) : shift_(shift) {
        SparseMatrix a = k;
        a.diagonal() -= shift * m.cell_measures().cwiseProduct(m.values());
        ldlt_.compute(a);
        definite_ = ldlt_.info() == Eigen::Success && ldlt_.vectorD().minCoeff() > 0.0;
    }

    bool definite() const { return definite_; }
    double shift() const { return shift_; }
    Vector solve(const Vector& rhs) const { return ldlt_.solve(rhs); }

private:
    double shift_;
    bool definite_ = false;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

// Shift s in (lambda1 / 1.05, lambda1), located by definiteness tests.
// upper_hint, when positive, is a Rayleigh bound lambda1 <= upper_hint.
inline std::unique_ptr<ShiftedFactor> bracket_shift(const SparseMatrix& k, const WeightField& m, double upper_hint) {
    constexpr double ratio = 1.05;
    double lo = 0.0, hi = 0.0;
    std::unique_ptr<ShiftedFactor> best;
    auto probe = [&](double s) {
        auto f = std::make_unique<ShiftedFactor>(k, m, s);
        if (f->definite()) {
            lo = s;
            best = std::move(f);
            return true;
        }
        hi = s;
        return false;
    };

    double s = upper_hint > 0.0 ? upper_hint / ratio : 1.0;
    if (probe(s)) {
        if (upper_hint > 0.0) hi = upper_hint;
        for (int it = 0; it < 1000 && hi == 0.0; ++it) probe(2.0 * lo);
    } else {
        for (int it = 0; it < 1000 && lo == 0.0; ++it) probe(0.5 * hi);
    }
    if (lo == 0.0 || hi == 0.0) throw Error(ErrorCode::SingularSystem, "could not bracket lambda1");
    while (hi / lo > ratio) probe(std::sqrt(lo * hi));
    return best;
}

// Shift-invert power iteration x <- (K - s W m)^{-1} W m x, re-projected on V_m.
// lambda1 - s is the smallest |lambda - s| over the pencil, so the principal
// mode dominates whatever the size of the negative spectrum.
inline EigenPair iterative_pair(const WeightField& m, const SparseMatrix& k, const SolverOptions& opts) {
    const Vector wm = m.cell_measures().cwiseProduct(m.values());
    const Vector fallback = (m.values().array() > 0.0).cast<double>();

    Vector start = fallback;
    double upper_hint = 0.0;
    if (opts.warm_start && static_cast<std::size_t>(opts.warm_start->size()) == m.size()) {
        const Vector w = project_pm(m, *opts.warm_start);
        const double den = quad_form(k, w);
        const double num = weighted_square(m, w);
        if (den > 0.0 && num > 0.0) {
            start = w;
            upper_hint = den / num;
        }
    }
    start = project_pm(m, start);
    if (!(quad_form(k, start) > 0.0)) start = project_pm(m, fallback);
    Vector x = k_normalized(k, start);

    const auto factor = bracket_shift(k, m, upper_hint);

    // The Rayleigh increment shrinks like the square of the eigenvector error,
    // so the iterate itself must also stop moving.
    const double step_tol = std::max(std::sqrt(opts.tol) * 1e-4, 1e-13);
    double mu = weighted_square(m, x);
    for (int it = 1; it <= opts.max_iters; ++it) {
        Vector next = k_normalized(k, project_pm(m, factor->solve(wm.cwiseProduct(x))));
        if (next.dot(x) < 0.0) next = -next;
        const Vector dx = next - x;
        const double step = std::sqrt(quad_form(k, dx));
        x = std::move(next);
        const double mu_next = weighted_square(m, x);
        const bool done = it > 1 && mu_next > 0.0 && std::abs(mu_next - mu) <= opts.tol * std::abs(mu_next) &&
                          step <= step_tol;
        mu = mu_next;
        if (done) {
            EigenPair pair;
            pair.solver = SolverKind::Iterative;
            pair.iterations = it;
            return finish_pair(m, k, std::move(x), std::move(pair));
        }
    }
    throw Error(ErrorCode::IterationLimit,
                "inverse iteration did not settle in " + std::to_string(opts.max_iters) + " iterations");
}

} // namespace detail

/// Principal eigenpair of -Delta u = lambda m u with Neumann boundary.
///
/// u is positive, normalised by u^T K u = 1, and lies in the discrete V_m;
/// mu1 = 1 / lambda1 = sum w m u^2.
inline EigenPair principal_eigenpair(const WeightField& m, const SparseMatrix& k, const SolverOptions& opts = {}) {
    detail::require_admissible(m);
    return opts.kind == SolverKind::Dense ? detail::dense_pair(m, k) : detail::iterative_pair(m, k, opts);
}

inline EigenPair principal_eigenpair(const WeightField& m, const Grid& grid, const SolverOptions& opts = {}) {
    return principal_eigenpair(m, assemble_stiffness(grid), opts);
}

/// Up to k largest positive and k most negative eigenvalues of the pencil.
///
/// Eigenvalues of magnitude below 1e-12 times the spectral radius are
/// treated as zero (cells with m = 0 produce them).
inline SignedSpectrum signed_spectrum(const WeightField& m, const SparseMatrix& stiffness, std::size_t k) {
    detail::require_nonzero_integral(m);
    if (m.size() > kDenseCellLimit)
        throw Error(ErrorCode::TooLarge, std::to_string(m.size()) + " cells exceed the dense limit");
    const ConstraintBasis basis(m.weighted());
    const Eigen::MatrixXd kr = basis.reduce(Eigen::MatrixXd(stiffness));
    const Eigen::MatrixXd ar = basis.reduce_diagonal(m.cell_measures().cwiseProduct(m.values()));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ar, kr, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "dense pencil solve failed");

    // sup |f^T W m f| / f^T K f <= max|m| * sup f^T W f / f^T K f
    const Eigen::MatrixXd wr = basis.reduce_diagonal(m.cell_measures());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ws(wr, kr, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);

    SignedSpectrum out;
    out.basis_dim = static_cast<std::size_t>(basis.dim());
    out.bound = m.values().cwiseAbs().maxCoeff() * ws.eigenvalues().maxCoeff();

    const Vector& ev = es.eigenvalues();
    const double radius = ev.cwiseAbs().maxCoeff();
    const double zero_tol = 1e-12 * radius;
    for (Eigen::Index i = ev.size() - 1; i >= 0 && out.positive.size() < k; --i)
        if (ev[i] > zero_tol) out.positive.push_back(ev[i]);
    for (Eigen::Index i = 0; i < ev.size() && out.negative.size() < k; ++i)
        if (ev[i] < -zero_tol) out.negative.push_back(ev[i]);
    return out;
}

inline SignedSpectrum signed_spectrum(const WeightField& m, const Grid& grid, std::size_t k) {
    return signed_spectrum(m, assemble_stiffness(grid), k);
}

/// Directional derivative of mu1 at m along v: sum w u_m^2 v.
inline double derivative_mu1(const EigenPair& pair, const Grid& grid, const Vector& v) {
    check_length(grid, static_cast<std::size_t>(v.size()), "direction");
    return (cell_measure_vector(grid).array() * pair.u.array().square() * v.array()).sum();
}

inline double derivative_mu1(const WeightField& m, const SparseMatrix& k, const Grid& grid, const Vector& v,
                             const SolverOptions& opts = {}) {
    return derivative_mu1(principal_eigenpair(m, k, opts), grid, v);
}

/// mu1 extended by zero to weights with no positive part.
struct ExtendedMu1 {
    double value = 0.0;
    bool degenerate = false;
};

inline ExtendedMu1 mu1_extended(const WeightField& m, const SparseMatrix& k, const SolverOptions& opts = {}) {
    if (!(m.integral() < 0.0))
        throw Error(ErrorCode::NotAdmissible, "integral of m is " + std::to_string(m.integral()) + " >= 0");
    if (!m.has_positive_part()) return {0.0, true};
    return {principal_eigenpair(m, k, opts).mu1, false};
}

} // namespace weightopt
