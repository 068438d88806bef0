#include "support.hpp"

#include <weightopt/config.hpp>
#include <weightopt/verify.hpp>

#include <filesystem>
#include <string>

using namespace weightopt;

namespace {

std::string bang_bang(double pos, double neg, double frac, const std::string& extra = "") {
    return R"({"version": 1, "domain": {"type": "interval", "extents": [1.0], "shape": [64]},
  "weight": {"kind": "bang_bang", "positive": )" +
           std::to_string(pos) + ", \"negative\": " + std::to_string(neg) + ", \"fraction\": " + std::to_string(frac) +
           "}" + extra + "}";
}

template <class F>
std::string message_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(ParseConfig, BangBangIntegral) {
    const RunConfig cfg = parse_config(bang_bang(1.0, -2.0, 0.25));
    const Grid g = cfg.grid();
    EXPECT_NEAR(WeightField(g, cfg.weight_values(g)).integral(), -1.25, 1e-14);
    EXPECT_EQ(cfg.solver.kind, SolverKind::Dense);
    EXPECT_EQ(cfg.weight_values(g)[15], 1.0);
    EXPECT_EQ(cfg.weight_values(g)[16], -2.0);
}

TEST(ParseConfig, PositiveIntegralRejected) {
    const std::string msg = message_of([] { parse_config(bang_bang(1.0, -1.0, 0.9)); });
    EXPECT_NE(msg.find("∫m ≥ 0"), std::string::npos) << msg;
    EXPECT_ERROR_CODE(parse_config(bang_bang(1.0, -1.0, 0.9)), ErrorCode::ValidationError);
}

TEST(ParseConfig, MissingShapeNamesKey) {
    const std::string text = R"({"version": 1, "domain": {"type": "interval", "extents": [1.0]},
  "weight": {"kind": "bang_bang", "positive": 1, "negative": -2, "fraction": 0.25}})";
    EXPECT_ERROR_CODE(parse_config(text), ErrorCode::ParseError);
    EXPECT_NE(message_of([&] { parse_config(text); }).find("shape"), std::string::npos);
}

TEST(ParseConfig, SyntaxErrorReportsLine) {
    const std::string text = "{\n  \"version\": 1,\n  \"domain\": {\n    \"type\": interval\n  }\n}";
    const std::string msg = message_of([&] { parse_config(text); });
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(ParseConfig, OtherDiagnostics) {
    EXPECT_ERROR_CODE(parse_config(R"({"version": 2})"), ErrorCode::ParseError);
    EXPECT_ERROR_CODE(parse_config(bang_bang(1.0, -2.0, 0.25, R"(, "rearrange": {"stripes": [3]})")),
                      ErrorCode::ValidationError);
    EXPECT_ERROR_CODE(parse_config(bang_bang(1.0, -2.0, 0.25, R"(, "solver": {"method": "magic"})")),
                      ErrorCode::ParseError);
    EXPECT_ERROR_CODE(parse_config(bang_bang(1.0, -2.0, 0.25, R"(, "optimize": {"restarts": "many"})")),
                      ErrorCode::ParseError);
    EXPECT_ERROR_CODE(parse_config(bang_bang(1.0, -2.0, 0.001)), ErrorCode::ValidationError);
    const std::string cells = R"({"version": 1, "domain": {"type": "interval", "extents": [1.0], "shape": [4]},
  "weight": {"kind": "cells", "values": [1, -1, -1]}})";
    EXPECT_ERROR_CODE(parse_config(cells), ErrorCode::ValidationError);
}

TEST(ParseConfig, ProfileRelativeToConfig) {
    const auto dir = std::filesystem::temp_directory_path() / "weightopt_profile_test";
    std::filesystem::create_directories(dir);
    io::write_file((dir / "p.csv").string(), "value,measure\n2,0.25\n-1,0.75\n");
    const std::string text = R"({"version": 1, "domain": {"type": "interval", "extents": [1.0], "shape": [8]},
  "weight": {"kind": "profile", "path": "p.csv"}, "optimize": {"restarts": 2, "seed": 4}})";
    const RunConfig cfg = parse_config(text, dir);
    const Grid g = cfg.grid();
    EXPECT_EQ(cfg.weight_class(g).profile().size(), 2u);
    EXPECT_EQ(cfg.optimize.restarts, 2);
    EXPECT_EQ(cfg.optimize.seed, 4u);
    EXPECT_ERROR_CODE(parse_config(text, dir / "missing"), ErrorCode::IoError);
}

TEST(FieldCsv, RoundTrip) {
    sampling::Rng rng(8);
    for (const GridSpec& spec : {interval_spec(1.0, 7), rectangle_spec(2.0, 1.0, 6, 3),
                                 GridSpec{DomainKind::Box, {1.0, 0.5, 0.25}, {3, 2, 2}}}) {
        const Grid g = build_grid(spec);
        const Vector f = sampling::random_field(rng, g.cell_count(), -1e3, 1e3);
        const auto back = io::parse_field_csv(io::field_csv(g, f));
        EXPECT_EQ(back.spec.shape, spec.shape);
        EXPECT_EQ(back.spec.extents, spec.extents);
        EXPECT_EQ(back.spec.kind, spec.kind);
        EXPECT_EQ(back.values, sampling::to_std(f));
    }
}

TEST(FieldCsv, HeatmapLayoutAndErrors) {
    const Grid g = build_grid(rectangle_spec(2.0, 1.0, 3, 2));
    const std::string text = io::field_csv(g, std::vector<double>{1, 2, 3, 4, 5, 6});
    EXPECT_EQ(text, "# field dim=2 shape=3,2 extents=2,1\n1,2,3\n4,5,6\n");
    EXPECT_ERROR_CODE(io::parse_field_csv("1,2\n"), ErrorCode::ParseError);
    const std::string msg = message_of([] { io::parse_field_csv("# field dim=1 shape=2 extents=1\n1,x\n"); });
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(ProfileCsv, RoundTrip) {
    const RearrangementClass cls({{2.0, 0.125}, {-1.0, 0.5}, {0.5, 0.375}});
    const auto back = io::parse_profile_csv(io::profile_csv(cls));
    ASSERT_EQ(back.profile().size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.profile()[i].value, cls.profile()[i].value);
        EXPECT_EQ(back.profile()[i].measure, cls.profile()[i].measure);
    }
}
