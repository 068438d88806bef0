#pragma once

#include "error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace weightopt {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class DomainKind { Interval, Rectangle, Box };

inline std::string to_string(DomainKind kind) {
    switch (kind) {
    case DomainKind::Interval: return "interval";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::Box: return "box";
    }
    return "unknown";
}

inline int dimension_of(DomainKind kind) {
    switch (kind) {
    case DomainKind::Interval: return 1;
    case DomainKind::Rectangle: return 2;
    case DomainKind::Box: return 3;
    }
    return 0;
}

struct GridSpec {
    DomainKind kind = DomainKind::Interval;
    std::vector<double> extents;
    std::vector<int> shape;
};

/// Uniform tensor grid on (0,a1) x ... x (0,aN), cell centred.
///
/// Cells are stored with x1 varying fastest: flat = i1 + n1*(i2 + n2*i3).
/// Each entry of axis1_lines is one full line of cells ordered by increasing
/// x1, so lines are contiguous index ranges.
struct Grid {
    DomainKind kind = DomainKind::Interval;
    int dim = 1;
    std::vector<double> extents;
    std::vector<int> shape;
    std::vector<double> spacing;
    std::vector<double> cell_measures;
    std::vector<std::vector<std::size_t>> axis1_lines;

    std::size_t cell_count() const { return cell_measures.size(); }

    double domain_measure() const {
        return std::accumulate(extents.begin(), extents.end(), 1.0, std::multiplies<>());
    }

    // All cells of a uniform grid carry this measure.
    double cell_measure() const {
        return std::accumulate(spacing.begin(), spacing.end(), 1.0, std::multiplies<>());
    }

    bool is_uniform() const {
        if (cell_measures.empty()) return false;
        const double w = cell_measures.front();
        for (double c : cell_measures)
            if (c != w) return false;
        return true;
    }

    std::size_t flat_index(std::span<const int> multi) const {
        std::size_t idx = 0;
        for (int a = dim - 1; a >= 0; --a)
            idx = idx * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(multi[a]);
        return idx;
    }

    std::array<int, 3> multi_index(std::size_t flat) const {
        std::array<int, 3> out{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
            out[a] = static_cast<int>(flat % static_cast<std::size_t>(shape[a]));
            flat /= static_cast<std::size_t>(shape[a]);
        }
        return out;
    }

    std::array<double, 3> cell_center(std::size_t flat) const {
        const auto idx = multi_index(flat);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a)
            x[a] = (idx[a] + 0.5) * spacing[a];
        return x;
    }
};

inline Grid build_grid(const GridSpec& spec) {
    const int dim = dimension_of(spec.kind);
    if (static_cast<int>(spec.extents.size()) != dim || static_cast<int>(spec.shape.size()) != dim)
        throw Error(ErrorCode::InvalidSpec, to_string(spec.kind) + " needs " + std::to_string(dim) +
                                                " extents and cell counts");
    for (int a = 0; a < dim; ++a) {
        if (!(spec.extents[a] > 0.0) || !std::isfinite(spec.extents[a]))
            throw Error(ErrorCode::InvalidSpec, "extent along axis " + std::to_string(a + 1) + " must be positive");
        if (spec.shape[a] < 2)
            throw Error(ErrorCode::InvalidSpec, "cell count along axis " + std::to_string(a + 1) + " must be >= 2");
    }

    Grid g;
    g.kind = spec.kind;
    g.dim = dim;
    g.extents = spec.extents;
    g.shape = spec.shape;
    g.spacing.resize(dim);
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) {
        g.spacing[a] = spec.extents[a] / spec.shape[a];
        n *= static_cast<std::size_t>(spec.shape[a]);
    }
    g.cell_measures.assign(n, g.cell_measure());

    const std::size_t line_len = static_cast<std::size_t>(spec.shape[0]);
    g.axis1_lines.resize(n / line_len);
    for (std::size_t l = 0; l < g.axis1_lines.size(); ++l) {
        auto& line = g.axis1_lines[l];
        line.resize(line_len);
        std::iota(line.begin(), line.end(), l * line_len);
    }
    return g;
}

inline GridSpec interval_spec(double length, int n) { return {DomainKind::Interval, {length}, {n}}; }

inline GridSpec rectangle_spec(double a, double b, int na, int nb) {
    return {DomainKind::Rectangle, {a, b}, {na, nb}};
}

/// Neumann stiffness matrix: sum over axes of D^T diag(face_weight) D.
///
/// D is the forward difference between neighbouring cells along one axis;
/// only interior faces contribute, which is the zero-flux condition.
inline SparseMatrix assemble_stiffness(const Grid& grid) {
    const std::size_t n = grid.cell_count();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * (1 + 2 * grid.dim) * 2);

    for (int a = 0; a < grid.dim; ++a) {
        double transverse = 1.0;
        for (int b = 0; b < grid.dim; ++b)
            if (b != a) transverse *= grid.spacing[b];
        const double face_weight = transverse / grid.spacing[a];

        std::size_t stride = 1;
        for (int b = 0; b < a; ++b) stride *= static_cast<std::size_t>(grid.shape[b]);

        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = grid.multi_index(i);
            if (idx[a] + 1 >= grid.shape[a]) continue;
            const std::size_t j = i + stride;
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            triplets.emplace_back(ii, ii, face_weight);
            triplets.emplace_back(jj, jj, face_weight);
            triplets.emplace_back(ii, jj, -face_weight);
            triplets.emplace_back(jj, ii, -face_weight);
        }
    }
    SparseMatrix k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    k.setFromTriplets(triplets.begin(), triplets.end());
    k.makeCompressed();
    return k;
}

inline void check_length(const Grid& grid, std::size_t len, const char* what) {
    if (len != grid.cell_count())
        throw Error(ErrorCode::LengthMismatch, std::string(what) + " has " + std::to_string(len) +
                                                   " entries, grid has " + std::to_string(grid.cell_count()) +
                                                   " cells");
}

/// Midpoint rule: sum of cell_measure * f over cells.
inline double integrate(const Grid& grid, std::span<const double> f) {
    check_length(grid, f.size(), "field");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += grid.cell_measures[i] * f[i];
    return s;
}

inline double integrate(const Grid& grid, const Vector& f) {
    return integrate(grid, std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
}

inline Vector cell_measure_vector(const Grid& grid) {
    return Eigen::Map<const Vector>(grid.cell_measures.data(), static_cast<Eigen::Index>(grid.cell_count()));
}

// Debug dump: one "row col value" triple per stored entry.
inline void write_coordinate_triples(std::ostream& os, const SparseMatrix& k) {
    os.precision(17);
    for (int c = 0; c < k.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(k, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace weightopt
