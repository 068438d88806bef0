#include "oracles.hpp"
#include "support.hpp"

#include <weightopt/rearrange.hpp>
#include <weightopt/verify.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace weightopt;

namespace {

using V = std::vector<double>;

Grid line(int n) { return build_grid(interval_spec(1.0, n)); }

Grid nonuniform() {
    Grid g = line(3);
    g.cell_measures = {0.2, 0.3, 0.5};
    return g;
}

} // namespace

TEST(Distribution, Examples) {
    const Grid g = line(3);
    EXPECT_NEAR(distribution_function(V{3, 1, 2}, g, 1.5), 2.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(distribution_function(V{3, 1, 2}, g, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(distribution_function(V{3, 1, 2}, g, 3.0), 0.0);
}

TEST(DecreasingRearrangement, Examples) {
    const Grid g = line(3);
    const auto p = decreasing_rearrangement(V{3, 1, 2}, g).profile();
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[0].value, 3);
    EXPECT_EQ(p[1].value, 2);
    EXPECT_EQ(p[2].value, 1);
    for (const auto& e : p) EXPECT_NEAR(e.measure, 1.0 / 3.0, 1e-15);

    const auto c = decreasing_rearrangement(V{4, 4, 4}, g).profile();
    ASSERT_EQ(c.size(), 1u);
    EXPECT_NEAR(c[0].measure, 1.0, 1e-15);

    sampling::Rng rng(1);
    const Grid g2 = build_grid(rectangle_spec(1.0, 1.0, 5, 4));
    const auto f = sampling::to_std(sampling::random_field(rng, 20));
    const RearrangementClass cls = decreasing_rearrangement(f, g2);
    double s = 0;
    for (const auto& e : cls.profile()) s += e.value * e.measure;
    EXPECT_NEAR(s, integrate(g2, f), 1e-14);
    EXPECT_ERROR_CODE(decreasing_rearrangement(V{1, 2, 3}, nonuniform()), ErrorCode::NonUniformGrid);
}

TEST(Equimeasurable, Examples) {
    const Grid g = line(3);
    EXPECT_TRUE(equimeasurable(V{1, 2, 3}, V{3, 1, 2}, g));
    EXPECT_FALSE(equimeasurable(V{1, 2, 3}, V{1, 2, 2}, g));
    EXPECT_FALSE(equimeasurable(V{1, 2, 3}, V{2, 4, 6}, g));
    EXPECT_ERROR_CODE(equimeasurable(V{1, 2, 3}, V{3, 2, 1}, nonuniform()), ErrorCode::NonUniformGrid);
}

TEST(Majorization, Examples) {
    const Grid g = line(2);
    EXPECT_TRUE(prec_check(V{1, 1}, V{2, 0}, g).holds);
    EXPECT_TRUE(prec_check(V{2, 0}, V{2, 0}, g).holds);
    const auto r = prec_check(V{2, 1}, V{2, 0}, g);
    EXPECT_FALSE(r.totals_match);
    EXPECT_FALSE(r.holds);
    EXPECT_FALSE(prec_check(V{2, 0}, V{1, 1}, g).holds);
}

TEST(HlMaximizer, SortAndAssign) {
    const Grid g = line(4);
    const RearrangementClass cls({{2, 0.25}, {1, 0.25}, {-1, 0.25}, {-5, 0.25}});
    EXPECT_EQ(hl_maximizer(cls, V{0.9, 0.1, 0.5, 0.4}, g), (V{2, -5, 1, -1}));
    EXPECT_EQ(hl_maximizer(RearrangementClass({{1, 0.5}, {-1, 0.5}}), V{0.5, 0.5}, line(2)), (V{1, -1}));
}

TEST(HlMaximizer, AttainsBruteForceMaximum) {
    const Grid g = line(4);
    sampling::Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const auto vals = sampling::to_std(sampling::random_field(rng, 4));
        const auto u = sampling::to_std(sampling::random_field(rng, 4));
        const auto m = hl_maximizer(decreasing_rearrangement(vals, g), u, g);
        double s = 0;
        for (int i = 0; i < 4; ++i) s += 0.25 * m[i] * u[i];
        EXPECT_NEAR(s, oracle::brute_force_max_pairing(vals, u, 0.25), 1e-14);
    }
}

TEST(HlMaximizer, ClassMeasureMismatch) {
    EXPECT_ERROR_CODE(hl_maximizer(RearrangementClass({{1, 0.5}, {-1, 0.25}}), V{1, 2, 3, 4}, line(4)),
                      ErrorCode::MeasureMismatch);
}

TEST(MonotoneRearrangement, Examples) {
    EXPECT_EQ(monotone_x1_rearrangement(V{1, 3, 2}, line(3)), (V{3, 2, 1}));
    EXPECT_EQ(monotone_x1_rearrangement(V{1, 3, 2}, line(3), Direction::Increasing), (V{1, 2, 3}));
    const Grid g = build_grid(rectangle_spec(1.0, 1.0, 2, 2));
    EXPECT_EQ(monotone_x1_rearrangement(V{1, 3, 2, 0}, g), (V{3, 1, 2, 0}));
    EXPECT_ERROR_CODE(monotone_x1_rearrangement(V{1, 3, 2}, nonuniform()), ErrorCode::NonUniformGrid);
}

TEST(MonotoneRearrangement, CommutesWithMonotoneMaps) {
    const Grid g = build_grid(rectangle_spec(2.0, 1.0, 9, 4));
    sampling::Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        auto f = sampling::to_std(sampling::random_field(rng, g.cell_count()));
        auto cubed = f;
        for (auto& x : cubed) x = x * x * x;
        auto star = monotone_x1_rearrangement(f, g);
        for (auto& x : star) x = x * x * x;
        EXPECT_EQ(monotone_x1_rearrangement(cubed, g), star);
    }
}

TEST(RearrangementClass, Validation) {
    const Grid g = line(4);
    EXPECT_ERROR_CODE(RearrangementClass({{1, -0.5}}), ErrorCode::MeasureMismatch);
    EXPECT_ERROR_CODE(RearrangementClass({{1, 0.3}, {-1, 0.7}}).cell_counts(g), ErrorCode::MeasureMismatch);
    const RearrangementClass merged({{1, 0.25}, {-1, 0.5}, {1, 0.25}});
    ASSERT_EQ(merged.profile().size(), 2u);
    EXPECT_DOUBLE_EQ(merged.profile()[0].measure, 0.5);
    EXPECT_DOUBLE_EQ(merged.source_integral(), 0.0);
}
