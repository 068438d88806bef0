#pragma once

#include "grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace weightopt {

struct ProfileEntry {
    double value = 0.0;
    double measure = 0.0;

    friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
};

/// Step-function form of the decreasing rearrangement m0* on (0, |Omega|).
///
/// Entries are sorted by strictly decreasing value. On a uniform grid every
/// measure is an integer multiple of the cell measure, so the class is the
/// multiset of cell values and its members are the permutations of it.
class RearrangementClass {
public:
    RearrangementClass() = default;

    explicit RearrangementClass(std::vector<ProfileEntry> entries) {
        std::sort(entries.begin(), entries.end(),
                  [](const ProfileEntry& a, const ProfileEntry& b) { return a.value > b.value; });
        for (const auto& e : entries) {
            if (!(e.measure > 0.0) || !std::isfinite(e.measure) || !std::isfinite(e.value))
                throw Error(ErrorCode::MeasureMismatch, "profile measures must be positive and finite");
            if (!profile_.empty() && profile_.back().value == e.value)
                profile_.back().measure += e.measure;
            else
                profile_.push_back(e);
        }
        for (const auto& e : profile_) {
            total_measure_ += e.measure;
            source_integral_ += e.value * e.measure;
        }
    }

    const std::vector<ProfileEntry>& profile() const { return profile_; }
    double total_measure() const { return total_measure_; }
    double source_integral() const { return source_integral_; }
    bool has_positive_value() const { return !profile_.empty() && profile_.front().value > 0.0; }

    /// Number of cells each profile entry occupies on the grid.
    std::vector<std::size_t> cell_counts(const Grid& grid) const {
        require_uniform(grid);
        const double w = grid.cell_measures.front();
        std::vector<std::size_t> counts;
        counts.reserve(profile_.size());
        std::size_t total = 0;
        for (const auto& e : profile_) {
            const double c = std::round(e.measure / w);
            if (std::abs(c * w - e.measure) > 1e-9 * std::max(e.measure, w))
                throw Error(ErrorCode::MeasureMismatch,
                            "profile measure " + std::to_string(e.measure) + " is not a multiple of the cell measure");
            counts.push_back(static_cast<std::size_t>(c));
            total += static_cast<std::size_t>(c);
        }
        if (total != grid.cell_count())
            throw Error(ErrorCode::MeasureMismatch, "class covers " + std::to_string(total) + " cells, grid has " +
                                                        std::to_string(grid.cell_count()));
        return counts;
    }

    /// Class values sorted decreasingly, one per cell.
    std::vector<double> expanded(const Grid& grid) const {
        const auto counts = cell_counts(grid);
        std::vector<double> out;
        out.reserve(grid.cell_count());
        for (std::size_t i = 0; i < profile_.size(); ++i) out.insert(out.end(), counts[i], profile_[i].value);
        return out;
    }

    static void require_uniform(const Grid& grid) {
        if (!grid.is_uniform()) throw Error(ErrorCode::NonUniformGrid, "rearrangements need equal cell measures");
    }

private:
    std::vector<ProfileEntry> profile_;
    double total_measure_ = 0.0;
    double source_integral_ = 0.0;
};

/// Measure of {f > t}.
inline double distribution_function(std::span<const double> f, const Grid& grid, double t) {
    check_length(grid, f.size(), "field");
    double d = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > t) d += grid.cell_measures[i];
    return d;
}

inline RearrangementClass decreasing_rearrangement(std::span<const double> f, const Grid& grid) {
    RearrangementClass::require_uniform(grid);
    check_length(grid, f.size(), "field");
    const double w = grid.cell_measures.front();
    std::vector<ProfileEntry> entries;
    entries.reserve(f.size());
    for (double v : f) entries.push_back({v, w});
    return RearrangementClass(std::move(entries));
}

namespace detail {

inline std::vector<double> sorted_descending(std::span<const double> f) {
    std::vector<double> s(f.begin(), f.end());
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

} // namespace detail

/// True iff f and g are rearrangements of each other (same value multiset).
inline bool equimeasurable(std::span<const double> f, std::span<const double> g, const Grid& grid) {
    RearrangementClass::require_uniform(grid);
    check_length(grid, f.size(), "f");
    check_length(grid, g.size(), "g");
    return detail::sorted_descending(f) == detail::sorted_descending(g);
}

struct MajorizationReport {
    bool holds = false;
    double worst_margin = 0.0;
    bool totals_match = false;
};

/// g majorized by f: every prefix integral of g* is at most that of f*, and
/// the totals agree. Tolerance 1e-12 relative to max(1, int |f|).
inline MajorizationReport prec_check(std::span<const double> g, std::span<const double> f, const Grid& grid) {
    RearrangementClass::require_uniform(grid);
    check_length(grid, f.size(), "f");
    check_length(grid, g.size(), "g");
    const double w = grid.cell_measures.front();
    const auto fs = detail::sorted_descending(f);
    const auto gs = detail::sorted_descending(g);

    double scale = 0.0;
    for (double v : f) scale += w * std::abs(v);
    const double tol = 1e-12 * std::max(1.0, scale);

    MajorizationReport rep;
    rep.worst_margin = INFINITY;
    double pf = 0.0, pg = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        pf += w * fs[i];
        pg += w * gs[i];
        rep.worst_margin = std::min(rep.worst_margin, pf - pg);
    }
    rep.totals_match = std::abs(pf - pg) <= tol;
    rep.holds = rep.totals_match && rep.worst_margin >= -tol;
    return rep;
}

/// Member of the class maximising sum w m u: largest values go to the cells
/// with largest u, ties in u broken by ascending cell index.
inline std::vector<double> hl_maximizer(const RearrangementClass& cls, std::span<const double> u, const Grid& grid) {
    check_length(grid, u.size(), "u");
    if (std::abs(cls.total_measure() - grid.domain_measure()) > 1e-9 * grid.domain_measure())
        throw Error(ErrorCode::MeasureMismatch, "class measure " + std::to_string(cls.total_measure()) +
                                                    " differs from |Omega| = " +
                                                    std::to_string(grid.domain_measure()));
    const auto values = cls.expanded(grid);
    std::vector<std::size_t> order(u.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    std::vector<double> m(u.size());
    for (std::size_t r = 0; r < order.size(); ++r) m[order[r]] = values[r];
    return m;
}

enum class Direction { Decreasing, Increasing };

/// Sorts every x1-line independently.
inline std::vector<double> monotone_x1_rearrangement(std::span<const double> f, const Grid& grid,
                                                     Direction direction = Direction::Decreasing) {
    RearrangementClass::require_uniform(grid);
    check_length(grid, f.size(), "field");
    std::vector<double> out(f.begin(), f.end());
    std::vector<double> line_vals;
    for (const auto& line : grid.axis1_lines) {
        line_vals.clear();
        for (std::size_t idx : line) line_vals.push_back(f[idx]);
        if (direction == Direction::Decreasing)
            std::sort(line_vals.begin(), line_vals.end(), std::greater<>());
        else
            std::sort(line_vals.begin(), line_vals.end());
        for (std::size_t j = 0; j < line.size(); ++j) out[line[j]] = line_vals[j];
    }
    return out;
}

} // namespace weightopt
