#include "lsn/sampling.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "lsn/rng.hpp"

namespace lsn {

namespace {
void check_domain(const Domain& d) {
    if (!(d.x_min < d.x_max) || !(d.t_max > 0.0))
        throw std::invalid_argument("domain: x_min < x_max and t_max > 0 required");
}

double draw_axis(Rng& rng, SampleDist dist, double lo, double hi, bool half_open_hi) {
    const double mid = 0.5 * (lo + hi);
    const double sd = 0.25 * (hi - lo);
    for (;;) {
        const double v = dist == SampleDist::Gaussian ? mid + sd * rng.normal()
                                                      : rng.uniform(lo, hi);
        if (half_open_hi ? (v > lo && v <= hi) : (v > lo && v < hi)) return v;
    }
}
}  // namespace

std::vector<Point> sample_interior(const Domain& domain, std::size_t n, SampleDist dist,
                                   std::uint64_t seed) {
    check_domain(domain);
    if (n < 1) throw std::invalid_argument("sample_interior: n >= 1 required");
    Rng rng(seed);
    std::vector<Point> pts(n);
    for (Point& p : pts) {
        p.x = draw_axis(rng, dist, domain.x_min, domain.x_max, false);
        p.t = draw_axis(rng, dist, 0.0, domain.t_max, true);
    }
    return pts;
}

std::pair<std::vector<Point>, std::vector<double>> sample_boundary_initial(const Domain& domain,
                                                                           std::size_t n_boundary,
                                                                           std::size_t n_initial,
                                                                           std::uint64_t seed) {
    check_domain(domain);
    if (n_boundary < 1 || n_initial < 1)
        throw std::invalid_argument("sample_boundary_initial: counts >= 1 required");
    Rng rng(seed);
    std::vector<Point> boundary(n_boundary);
    for (Point& p : boundary) {
        p.x = rng.coin() ? domain.x_max : domain.x_min;
        p.t = rng.uniform(0.0, domain.t_max);
    }
    std::vector<double> initial(n_initial);
    for (double& x : initial) x = rng.uniform(domain.x_min, domain.x_max);
    return {std::move(boundary), std::move(initial)};
}

CollocationSet make_collocation(const Domain& domain, std::size_t n_interior,
                                std::size_t n_boundary, std::size_t n_initial, SampleDist dist,
                                std::uint64_t seed) {
    CollocationSet s;
    s.seed = seed;
    s.interior = sample_interior(domain, n_interior, dist, derive_seed(seed, 1));
    auto [b, i] = sample_boundary_initial(domain, n_boundary, n_initial, derive_seed(seed, 2));
    s.boundary = std::move(b);
    s.initial = std::move(i);
    return s;
}

std::vector<Point> test_grid(const Domain& domain, std::size_t n_x, std::size_t n_t) {
    check_domain(domain);
    if (n_x < 2 || n_t < 2) throw std::invalid_argument("test_grid: n_x, n_t >= 2 required");
    std::vector<Point> pts;
    pts.reserve(n_x * n_t);
    for (std::size_t i = 0; i < n_x; ++i) {
        const double fx = static_cast<double>(i) / static_cast<double>(n_x - 1);
        const double x = domain.x_min + fx * (domain.x_max - domain.x_min);
        for (std::size_t j = 0; j < n_t; ++j) {
            const double ft = static_cast<double>(j) / static_cast<double>(n_t - 1);
            pts.push_back(Point{x, ft * domain.t_max});
        }
    }
    return pts;
}

void points_to_csv(std::ostream& out, const CollocationSet& set) {
    char buf[80];
    out << "region,x,t\n";
    for (const Point& p : set.interior) {
        std::snprintf(buf, sizeof buf, "interior,%.17g,%.17g\n", p.x, p.t);
        out << buf;
    }
    for (const Point& p : set.boundary) {
        std::snprintf(buf, sizeof buf, "boundary,%.17g,%.17g\n", p.x, p.t);
        out << buf;
    }
    for (double x : set.initial) {
        std::snprintf(buf, sizeof buf, "initial,%.17g,0\n", x);
        out << buf;
    }
}

}  // namespace lsn
