#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "lsn/models.hpp"

namespace lsn {

enum class SampleDist { Gaussian, Uniform };

/// Training collocation data: interior points of Omega x (0, T], spatial
/// boundary points (y in {x_min, x_max}) with times in [0, T], and initial
/// points x at t = 0. Fully determined by (domain, counts, dist, seed).
struct CollocationSet {
    std::vector<Point> interior;
    std::vector<Point> boundary;
    std::vector<double> initial;
    std::uint64_t seed = 0;
};

/// Interior sampler. Gaussian mode draws each axis from a normal centred at
/// the domain midpoint with sd = range/4, rejection-resampled per axis until
/// strictly inside (open in x, (0, T] in t); uniform mode draws each axis
/// uniformly, with the same rejection rule.
std::vector<Point> sample_interior(const Domain& domain, std::size_t n, SampleDist dist,
                                   std::uint64_t seed);

/// Boundary times uniform on [0, T] with the side a fair coin between x_min
/// and x_max; initial abscissae uniform on [x_min, x_max].
std::pair<std::vector<Point>, std::vector<double>> sample_boundary_initial(const Domain& domain,
                                                                           std::size_t n_boundary,
                                                                           std::size_t n_initial,
                                                                           std::uint64_t seed);

CollocationSet make_collocation(const Domain& domain, std::size_t n_interior,
                                std::size_t n_boundary, std::size_t n_initial, SampleDist dist,
                                std::uint64_t seed);

/// Tensor grid of n_x * n_t equally spaced points, domain corners included.
std::vector<Point> test_grid(const Domain& domain, std::size_t n_x, std::size_t n_t);

/// CSV export with columns region,x,t (regions: interior, boundary, initial).
void points_to_csv(std::ostream& out, const CollocationSet& set);

}  // namespace lsn
