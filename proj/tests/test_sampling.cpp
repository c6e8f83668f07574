#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lsn/sampling.hpp"

using namespace lsn;

TEST_CASE("interior containment and determinism") {
    const Domain dom{0.0, 20.0, 1.0};
    for (SampleDist dist : {SampleDist::Gaussian, SampleDist::Uniform}) {
        const auto a = sample_interior(dom, 1000, dist, 42);
        const auto b = sample_interior(dom, 1000, dist, 42);
        const auto c = sample_interior(dom, 1000, dist, 43);
        REQUIRE(a.size() == 1000);
        bool identical = true, differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].x > 0.0);
            CHECK(a[i].x < 20.0);
            CHECK(a[i].t > 0.0);
            CHECK(a[i].t <= 1.0);
            identical = identical && a[i].x == b[i].x && a[i].t == b[i].t;
            differs = differs || a[i].x != c[i].x;
        }
        CHECK(identical);
        CHECK(differs);
    }
}

TEST_CASE("gaussian interior mean sits at the midpoint") {
    const Domain dom{0.0, 20.0, 1.0};
    const std::size_t n = 100000;
    const auto pts = sample_interior(dom, n, SampleDist::Gaussian, 7);
    double mx = 0.0, mt = 0.0;
    for (const Point& p : pts) {
        mx += p.x;
        mt += p.t;
    }
    mx /= n;
    mt /= n;
    // sd of the +-2sd-truncated normal is 0.87962566103423975 * (range/4)
    const double sex = 0.87962566103423975 * 5.0 / std::sqrt(double(n));
    const double set = 0.87962566103423975 * 0.25 / std::sqrt(double(n));
    CHECK(std::abs(mx - 10.0) <= 3.0 * sex);
    CHECK(std::abs(mt - 0.5) <= 3.0 * set);
}

TEST_CASE("boundary and initial samples") {
    const Domain dom{0.0, 20.0, 1.0};
    auto [boundary, initial] = sample_boundary_initial(dom, 2000, 500, 11);
    REQUIRE(boundary.size() == 2000);
    REQUIRE(initial.size() == 500);
    std::size_t left = 0;
    for (const Point& p : boundary) {
        CHECK((p.x == 0.0 || p.x == 20.0));
        CHECK(p.t >= 0.0);
        CHECK(p.t <= 1.0);
        if (p.x == 0.0) ++left;
    }
    // binomial(2000, 1/2): 4 sigma ~ 89.4
    CHECK(std::abs(double(left) - 1000.0) <= 4.0 * std::sqrt(2000.0 * 0.25));
    for (double x : initial) {
        CHECK(x >= 0.0);
        CHECK(x <= 20.0);
    }
}

TEST_CASE("test grid shape, corners, spacing") {
    const Domain dom{0.0, 20.0, 1.0};
    const auto grid = test_grid(dom, 50, 50);
    REQUIRE(grid.size() == 2500);
    CHECK(grid.front().x == 0.0);
    CHECK(grid.front().t == 0.0);
    CHECK(grid.back().x == 20.0);
    CHECK(grid.back().t == 1.0);
    // uniform spacing along each axis
    const double dx = grid[50].x - grid[0].x;
    for (std::size_t i = 1; i < 50; ++i)
        CHECK(std::abs((grid[50 * i].x - grid[50 * (i - 1)].x) - dx) <= 1e-15 * 20.0);
    const double dt = grid[1].t - grid[0].t;
    for (std::size_t j = 1; j < 50; ++j)
        CHECK(std::abs((grid[j].t - grid[j - 1].t) - dt) <= 1e-15);

    CHECK_THROWS_AS((void)test_grid(dom, 1, 50), std::invalid_argument);
}

TEST_CASE("csv export") {
    const Domain dom{0.0, 2.0, 1.0};
    const CollocationSet s = make_collocation(dom, 2, 2, 2, SampleDist::Uniform, 5);
    std::ostringstream out;
    points_to_csv(out, s);
    const std::string text = out.str();
    CHECK(text.rfind("region,x,t\n", 0) == 0);
    CHECK(text.find("interior,") != std::string::npos);
    CHECK(text.find("boundary,") != std::string::npos);
    CHECK(text.find("initial,") != std::string::npos);
}
