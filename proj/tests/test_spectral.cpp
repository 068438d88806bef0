#include "oracles.hpp"
#include "support.hpp"

#include <weightopt/spectral.hpp>
#include <weightopt/verify.hpp>

#include <cmath>
#include <vector>

using namespace weightopt;

namespace {

Vector oracle_weight(int n) {
    Vector m(n);
    for (int i = 0; i < n; ++i) m[i] = i < n / 2 ? 1.0 : -3.0;
    return m;
}

} // namespace

TEST(ProjectPm, DirectFormula) {
    const Grid g = build_grid(interval_spec(1.0, 4));
    const WeightField m(g, std::vector<double>{-1, -1, -1, -1});
    const Vector p = project_pm(m, Vector((Vector(4) << 1, 2, 3, 4).finished()));
    const Vector expected = (Vector(4) << -1.5, -0.5, 0.5, 1.5).finished();
    EXPECT_LT((p - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ProjectPm, ZeroExactlyOnConstants) {
    const Grid g = build_grid(interval_spec(1.0, 8));
    sampling::Rng rng(3);
    const WeightField m(g, sampling::random_admissible_weight(rng, g));
    EXPECT_LT(project_pm(m, Vector::Constant(8, 2.5)).cwiseAbs().maxCoeff(), 1e-14);
    const Vector f = sampling::random_field(rng, 8);
    EXPECT_GT(project_pm(m, f).cwiseAbs().maxCoeff(), 1e-3);
    const Vector pf = project_pm(m, f);
    EXPECT_LT((project_pm(m, pf) - pf).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ProjectPm, ZeroIntegral) {
    const Grid g = build_grid(interval_spec(1.0, 2));
    EXPECT_ERROR_CODE(project_pm(WeightField(g, std::vector<double>{1, -1}), Vector::Ones(2)),
                      ErrorCode::ZeroWeightIntegral);
}

TEST(ApplyGm, ZeroAndSaddleResidual) {
    const Grid g = build_grid(interval_spec(1.0, 16));
    const SparseMatrix k = assemble_stiffness(g);
    sampling::Rng rng(11);
    const WeightField m(g, sampling::random_admissible_weight(rng, g));
    EXPECT_LT(apply_gm(m, k, project_pm(m, Vector::Constant(16, 4.0))).cwiseAbs().maxCoeff(), 1e-12);

    const Vector f = sampling::random_in_vm(rng, m);
    const Vector u = apply_gm(m, k, f);
    const Vector wm = m.weighted();
    const Vector r = k * u - wm.cwiseProduct(f);
    const double alpha = r.dot(wm) / wm.squaredNorm();
    EXPECT_LT((r - alpha * wm).norm(), 1e-11);
    EXPECT_LT(std::abs(wm.dot(u)), 1e-12);
}

TEST(ApplyGm, SelfAdjointInDirichletProduct) {
    const Grid g = build_grid(rectangle_spec(1.0, 2.0, 5, 4));
    const SparseMatrix k = assemble_stiffness(g);
    sampling::Rng rng(5);
    const WeightField m(g, sampling::random_admissible_weight(rng, g));
    const SaddleSolver gm(k, m);
    const Vector f = sampling::random_in_vm(rng, m), h = sampling::random_in_vm(rng, m);
    const double a = gm.apply_gm(f).dot(k * h), b = f.dot(k * gm.apply_gm(h));
    EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
    // <G f, h>_K = <m f, h>
    EXPECT_NEAR(a, m.weighted().dot(f.cwiseProduct(h)), 1e-11 * std::abs(a));
}

TEST(PrincipalEigenpair, NoPositivePartAndNotAdmissible) {
    const Grid g = build_grid(interval_spec(1.0, 4));
    EXPECT_ERROR_CODE(principal_eigenpair(WeightField(g, std::vector<double>{-1, -2, -1, -1}), g),
                      ErrorCode::NoPositivePart);
    EXPECT_ERROR_CODE(principal_eigenpair(WeightField(g, std::vector<double>{1, 1, -1, -0.5}), g),
                      ErrorCode::NotAdmissible);
}

TEST(PrincipalEigenpair, MatchesTranscendentalOracle) {
    const double exact = oracle::half_plus_one_minus_three_lambda1();
    EXPECT_NEAR(exact, 4.1754, 1e-4);
    const Grid g = build_grid(interval_spec(1.0, 512));
    const EigenPair p = principal_eigenpair(WeightField(g, oracle_weight(512)), g);
    EXPECT_LT(std::abs(p.lambda1 - exact) / exact, 1e-3);
    EXPECT_TRUE(p.positive);
    EXPECT_LT(p.residual, 1e-10);
}

TEST(PrincipalEigenpair, ShootingOracleGeneralWeight) {
    const double exact = oracle::shooting_lambda1({{0.3, 1.0}, {0.5, -2.0}, {0.2, 0.5}});
    const int n = 500;
    const Grid g = build_grid(interval_spec(1.0, n));
    Vector m(n);
    for (int i = 0; i < n; ++i) m[i] = i < 150 ? 1.0 : (i < 400 ? -2.0 : 0.5);
    const EigenPair p = principal_eigenpair(WeightField(g, m), g);
    EXPECT_LT(std::abs(p.lambda1 - exact) / exact, 1e-3) << exact << " vs " << p.lambda1;
}

TEST(PrincipalEigenpair, IterativeMatchesDense2D) {
    const Grid g = build_grid(rectangle_spec(2.0, 1.0, 24, 12));
    sampling::Rng rng(17);
    const WeightField m(g, sampling::random_admissible_weight(rng, g));
    const EigenPair d = principal_eigenpair(m, g);
    SolverOptions it;
    it.kind = SolverKind::Iterative;
    const EigenPair i = principal_eigenpair(m, g, it);
    EXPECT_LT(std::abs(d.mu1 - i.mu1) / d.mu1, 1e-10);
    EXPECT_LT((d.u - i.u).cwiseAbs().maxCoeff() / d.u.cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_TRUE(std::isnan(i.gap));
    EXPECT_GT(d.gap, 0.0);
}

TEST(PrincipalEigenpair, Homogeneity) {
    const Grid g = build_grid(interval_spec(1.0, 40));
    sampling::Rng rng(23);
    const WeightField m(g, sampling::random_admissible_weight(rng, g));
    EXPECT_NEAR(principal_eigenpair(m.scaled(g, 2.0), g).mu1, 2.0 * principal_eigenpair(m, g).mu1,
                1e-10 * principal_eigenpair(m, g).mu1);
}

TEST(PrincipalEigenpair, DenseLimit) {
    const Grid g = build_grid(rectangle_spec(1.0, 1.0, 80, 80));
    Vector m = Vector::Constant(6400, -1.0);
    m[0] = 1.0;
    EXPECT_ERROR_CODE(principal_eigenpair(WeightField(g, m), g), ErrorCode::TooLarge);
}

TEST(SignedSpectrum, Examples) {
    const Grid g = build_grid(interval_spec(1.0, 12));
    const auto neg = signed_spectrum(WeightField(g, Vector(Vector::Constant(12, -1.0))), g, 5);
    EXPECT_TRUE(neg.positive.empty());
    EXPECT_EQ(neg.negative.size(), 5u);

    const WeightField m(g, oracle_weight(12));
    const auto s = signed_spectrum(m, g, 12);
    ASSERT_FALSE(s.positive.empty());
    EXPECT_EQ(s.positive.size(), 6u);
    EXPECT_EQ(s.negative.size(), 5u);
    EXPECT_NEAR(s.positive.front(), principal_eigenpair(m, g).mu1, 1e-10 * s.positive.front());
    EXPECT_ERROR_CODE(signed_spectrum(WeightField(g, Vector(Vector::Zero(12))), g, 2), ErrorCode::ZeroWeightIntegral);
}

TEST(Rayleigh, Examples) {
    const Grid g = build_grid(interval_spec(1.0, 30));
    const SparseMatrix k = assemble_stiffness(g);
    sampling::Rng rng(29);
    const WeightField m(g, sampling::random_admissible_weight(rng, g));
    const EigenPair p = principal_eigenpair(m, k);
    EXPECT_NEAR(rayleigh(m, k, p.u), p.mu1, 1e-12 * p.mu1);
    for (int t = 0; t < 20; ++t) EXPECT_LE(rayleigh(m, k, sampling::random_in_vm(rng, m)), p.mu1 + 1e-12);
    EXPECT_ERROR_CODE(rayleigh(m, k, Vector::Constant(30, 1.0)), ErrorCode::ConstantField);
}

TEST(Derivative, EulerLinearityAndFiniteDifference) {
    const Grid g = build_grid(interval_spec(1.0, 64));
    const SparseMatrix k = assemble_stiffness(g);
    sampling::Rng rng(31);
    const Vector mv = sampling::random_admissible_weight(rng, g);
    const WeightField m(g, mv);
    const EigenPair p = principal_eigenpair(m, k);
    EXPECT_NEAR(derivative_mu1(p, g, mv), p.mu1, 1e-10 * p.mu1);
    const Vector w = cell_measure_vector(g);
    EXPECT_NEAR(derivative_mu1(p, g, Vector::Constant(64, 3.0)), 3.0 * w.dot(p.u.cwiseProduct(p.u)), 1e-13);

    const Vector v = sampling::random_field(rng, 64);
    const double d = derivative_mu1(m, k, g, v);
    double best = INFINITY;
    for (double t : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const double fd = (principal_eigenpair(WeightField(g, Vector(mv + t * v)), k).mu1 -
                           principal_eigenpair(WeightField(g, Vector(mv - t * v)), k).mu1) /
                          (2 * t);
        best = std::min(best, std::abs(fd - d) / std::abs(d));
    }
    EXPECT_LT(best, 1e-5);
    EXPECT_ERROR_CODE(derivative_mu1(WeightField(g, Vector(Vector::Constant(64, -1.0))), k, g, v), ErrorCode::NoPositivePart);
}

TEST(ExtendedMu1, ZeroWithoutPositivePart) {
    const Grid g = build_grid(interval_spec(1.0, 10));
    const SparseMatrix k = assemble_stiffness(g);
    const auto e = mu1_extended(WeightField(g, Vector(Vector::Constant(10, -2.0))), k);
    EXPECT_EQ(e.value, 0.0);
    EXPECT_TRUE(e.degenerate);
    const auto a = mu1_extended(WeightField(g, oracle_weight(10)), k);
    EXPECT_GT(a.value, 0.0);
    EXPECT_FALSE(a.degenerate);
}
