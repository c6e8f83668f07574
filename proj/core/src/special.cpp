#include "lsn/special.hpp"

#include <cmath>

namespace lsn {

namespace testing {
std::atomic<double> cdf_fault_shift{0.0};
std::atomic<double> jet_mul_xx_skew{0.0};
}  // namespace testing

namespace {

// Rational Chebyshev coefficients for erf/erfc (W. J. Cody, Math. Comp. 23,
// 1969; same sets as netlib CALERF). Relative error of each branch is below
// 6e-19 in exact arithmetic, so the double result is correct to roundoff.
constexpr double kA[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                          3.77485237685302021e02, 3.20937758913846947e03,
                          1.85777706184603153e-1};
constexpr double kB[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                          1.28261652607737228e03, 2.84423683343917062e03};
constexpr double kC[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                          6.61191906371416295e01, 2.98635138197400131e02,
                          8.81952221241769090e02, 1.71204761263407058e03,
                          2.05107837782607147e03, 1.23033935479799725e03,
                          2.15311535474403846e-8};
constexpr double kD[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                          5.37181101862009858e02, 1.62138957456669019e03,
                          3.29079923573345963e03, 4.36261909014324716e03,
                          3.43936767414372164e03, 1.23033935480374942e03};
constexpr double kP[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                          1.25781726111229246e-1, 1.60837851487422766e-2,
                          6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr double kQ[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                          5.27905102951428412e-1, 6.05183413124413191e-2,
                          2.33520497626869185e-3};

constexpr double kThresh = 0.46875;
constexpr double kXBig = 26.543;
constexpr double kInvSqrtPi = 5.6418958354775628695e-1;

double erf_small(double x) {
    const double z = x * x;
    double num = kA[4] * z;
    double den = z;
    for (int i = 0; i < 3; ++i) {
        num = (num + kA[i]) * z;
        den = (den + kB[i]) * z;
    }
    return x * (num + kA[3]) / (den + kB[3]);
}

// erfc(y) for y in [kThresh, kXBig]
double erfc_positive(double y) {
    double result;
    if (y <= 4.0) {
        double num = kC[8] * y;
        double den = y;
        for (int i = 0; i < 7; ++i) {
            num = (num + kC[i]) * y;
            den = (den + kD[i]) * y;
        }
        result = (num + kC[7]) / (den + kD[7]);
    } else {
        if (y >= kXBig) return 0.0;
        const double z = 1.0 / (y * y);
        double num = kP[5] * z;
        double den = z;
        for (int i = 0; i < 4; ++i) {
            num = (num + kP[i]) * z;
            den = (den + kQ[i]) * z;
        }
        result = z * (num + kP[4]) / (den + kQ[4]);
        result = (kInvSqrtPi - result) / y;
    }
    // split exp(-y^2) to keep the argument rounding error out of the tail
    const double ysq = std::trunc(y * 16.0) / 16.0;
    const double del = (y - ysq) * (y + ysq);
    return std::exp(-ysq * ysq) * std::exp(-del) * result;
}

}  // namespace

double erfc_cody(double x) {
    const double y = std::abs(x);
    double result;
    if (y <= kThresh) {
        result = 1.0 - erf_small(x);
        return result;
    }
    result = erfc_positive(y);
    if (x < 0.0) result = 2.0 - result;
    return result;
}

double normal_cdf(double z) {
    const double fault = testing::cdf_fault_shift.load(std::memory_order_relaxed);
    if (fault != 0.0) z += fault;
    return 0.5 * erfc_cody(-z * 0.7071067811865475244008444);
}

double normal_pdf(double z) {
    return 0.3989422804014326779399461 * std::exp(-0.5 * z * z);
}

}  // namespace lsn
