#pragma once

#include <span>
#include <string>
#include <vector>

#include "lsn/models.hpp"
#include "lsn/network.hpp"
#include "lsn/symmetry.hpp"

namespace lsn {

enum class ErrorMode {
    GlobalL2,         // ||u_hat - u*||_2 / ||u*||_2
    PointwiseMasked,  // rms of (u_hat - u*)/u* over |u*| > eps
};

/// Relative test error between network values and reference values.
/// Throws when the lists differ in length, the global norm vanishes, or the
/// mask removes every point.
double relative_test_error(std::span<const double> u_hat, std::span<const double> u_star,
                           ErrorMode mode, double mask_eps = 1e-8);

/// Mean squared Lie residual over the points, summed over laws.
double conservation_error(const Mlp& mlp, const PdeModel& model,
                          std::span<const ConservationLaw> laws, std::span<const Point> points);

/// Baseline error divided by method error (Table-style "factor").
double improvement_factor(double err_baseline, double err_method);
/// One-decimal rendering of a factor, e.g. 3.4375 -> "3.4".
std::string format_factor(double factor);

struct ErrorReport {
    double relative_error = 0.0;            // GlobalL2
    double relative_error_pointwise = 0.0;  // PointwiseMasked, eps = 1e-8
    double conservation_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t grid_nx = 0, grid_nt = 0;
};

/// Evaluate a trained network against the model oracle on an nx-by-nt grid.
/// Requires model.has_oracle().
ErrorReport evaluate_on_grid(const Mlp& mlp, const PdeModel& model,
                             std::span<const ConservationLaw> laws, std::size_t nx,
                             std::size_t nt);

/// Per-point error fields (x, t, u*, u_hat, abs_err) as CSV.
void error_field_csv(std::ostream& out, const Mlp& mlp, const PdeModel& model, std::size_t nx,
                     std::size_t nt);

}  // namespace lsn
