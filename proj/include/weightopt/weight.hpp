#pragma once

#include "grid.hpp"

#include <span>
#include <vector>

namespace weightopt {

/// Cell-wise weight m together with its integral and sign flags.
///
/// The flags are derived from the values at construction and cannot be set
/// independently. Admissible means: integral < 0 and m > 0 on some cell.
class WeightField {
public:
    WeightField(const Grid& grid, Vector values) : values_(std::move(values)) {
        check_length(grid, static_cast<std::size_t>(values_.size()), "weight");
        integral_ = integrate(grid, values_);
        cell_measures_ = cell_measure_vector(grid);
        has_positive_part_ = (values_.array() > 0.0).any();
        has_negative_part_ = (values_.array() < 0.0).any();
    }

    WeightField(const Grid& grid, std::span<const double> values)
        : WeightField(grid, Vector(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())))) {}

    const Vector& values() const { return values_; }
    const Vector& cell_measures() const { return cell_measures_; }
    double integral() const { return integral_; }
    bool has_positive_part() const { return has_positive_part_; }
    bool has_negative_part() const { return has_negative_part_; }
    bool is_admissible() const { return integral_ < 0.0 && has_positive_part_; }
    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

    // W m, the constraint vector of the discrete V_m.
    Vector weighted() const { return cell_measures_.cwiseProduct(values_); }

    WeightField scaled(const Grid& grid, double alpha) const { return WeightField(grid, Vector(alpha * values_)); }

private:
    Vector values_;
    Vector cell_measures_;
    double integral_ = 0.0;
    bool has_positive_part_ = false;
    bool has_negative_part_ = false;
};

} // namespace weightopt
