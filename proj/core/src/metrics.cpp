#include "lsn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "lsn/sampling.hpp"

namespace lsn {

double relative_test_error(std::span<const double> u_hat, std::span<const double> u_star,
                           ErrorMode mode, double mask_eps) {
    if (u_hat.size() != u_star.size())
        throw std::invalid_argument("relative_test_error: length mismatch");
    if (u_hat.empty()) throw std::invalid_argument("relative_test_error: empty inputs");

    if (mode == ErrorMode::GlobalL2) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < u_hat.size(); ++i) {
            const double d = u_hat[i] - u_star[i];
            num += d * d;
            den += u_star[i] * u_star[i];
        }
        if (den == 0.0) throw std::invalid_argument("relative_test_error: reference norm is zero");
        return std::sqrt(num / den);
    }

    double acc = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < u_hat.size(); ++i) {
        if (std::abs(u_star[i]) <= mask_eps) continue;
        const double q = (u_hat[i] - u_star[i]) / u_star[i];
        acc += q * q;
        ++kept;
    }
    if (kept == 0) throw std::invalid_argument("relative_test_error: every point masked");
    return std::sqrt(acc / static_cast<double>(kept));
}

double conservation_error(const Mlp& mlp, const PdeModel& model,
                          std::span<const ConservationLaw> laws, std::span<const Point> points) {
    if (points.empty()) throw std::invalid_argument("conservation_error: no points");
    ad::DerivSet spec = model.required_partials();
    for (const ConservationLaw& law : laws) spec = spec | law.required_partials();

    double total = 0.0;
    ad::Tape tape(spec, mlp.params());
    for (const ConservationLaw& law : laws) {
        law.validate_for(model);
        double acc = 0.0;
        for (const Point& pt : points) {
            tape.reset();
            ad::Var u = mlp.forward_jet(tape, pt.x, pt.t);
            const double r = lie_residual(tape, law, model, u, pt.x, pt.t).value();
            acc += r * r;
        }
        total += acc / static_cast<double>(points.size());
    }
    return total;
}

double improvement_factor(double err_baseline, double err_method) {
    if (!(err_method > 0.0)) throw std::invalid_argument("improvement_factor: zero denominator");
    return err_baseline / err_method;
}

std::string format_factor(double factor) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", factor);
    return buf;
}

ErrorReport evaluate_on_grid(const Mlp& mlp, const PdeModel& model,
                             std::span<const ConservationLaw> laws, std::size_t nx,
                             std::size_t nt) {
    if (!model.has_oracle())
        throw std::invalid_argument("evaluate_on_grid: model has no reference solution");
    const std::vector<Point> grid = test_grid(model.domain, nx, nt);
    std::vector<double> u_hat(grid.size()), u_star(grid.size());
    double max_abs = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        u_hat[i] = mlp.forward_scalar(grid[i].x, grid[i].t);
        u_star[i] = model.exact(grid[i].x, grid[i].t);
        max_abs = std::max(max_abs, std::abs(u_hat[i] - u_star[i]));
    }

    ErrorReport rep;
    rep.relative_error = relative_test_error(u_hat, u_star, ErrorMode::GlobalL2);
    rep.relative_error_pointwise = relative_test_error(u_hat, u_star, ErrorMode::PointwiseMasked);
    rep.max_abs_error = max_abs;
    rep.grid_nx = nx;
    rep.grid_nt = nt;
    if (!laws.empty()) {
        // Eq-style conservation error on an interior grid (boundary rows of the
        // tensor grid sit outside some laws' domain, e.g. x = 0 for BS G2)
        std::vector<Point> inner;
        inner.reserve(grid.size());
        for (std::size_t i = 1; i + 1 < nx; ++i)
            for (std::size_t j = 1; j + 1 < nt; ++j)
                inner.push_back(grid[i * nt + j]);
        rep.conservation_error = conservation_error(mlp, model, laws, inner);
    }
    return rep;
}

void error_field_csv(std::ostream& out, const Mlp& mlp, const PdeModel& model, std::size_t nx,
                     std::size_t nt) {
    if (!model.has_oracle())
        throw std::invalid_argument("error_field_csv: model has no reference solution");
    out << "x,t,u_star,u_hat,abs_err\n";
    char buf[160];
    for (const Point& p : test_grid(model.domain, nx, nt)) {
        const double uh = mlp.forward_scalar(p.x, p.t);
        const double us = model.exact(p.x, p.t);
        std::snprintf(buf, sizeof buf, "%.10e,%.10e,%.10e,%.10e,%.10e\n", p.x, p.t, us, uh,
                      std::abs(uh - us));
        out << buf;
    }
}

}  // namespace lsn
