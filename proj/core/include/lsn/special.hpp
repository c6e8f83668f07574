#pragma once

#include <atomic>

namespace lsn {

/// Complementary error function, Cody-style rational approximation.
/// Absolute error below 1e-15 over the full double range.
double erfc_cody(double x);

/// Standard normal CDF, Phi(z) = erfc(-z/sqrt(2))/2. Absolute error <= 1e-14.
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

namespace testing {

/// Fault-injection hooks. Production values are exactly zero; the selftest
/// flips them to prove the analytic checks can fail. Not for normal use.
///
/// The CDF fault shifts the argument, Phi(z) -> Phi(z + shift): a plain
/// value offset perturbs the call price by a multiple of x - K e^{-r tau},
/// which solves the pricing equation itself and would stay invisible to the
/// residual checks.
extern std::atomic<double> cdf_fault_shift;    // argument shift in normal_cdf
extern std::atomic<double> jet_mul_xx_skew;    // perturbs the Leibniz xx coefficient

struct ScopedFault {
    std::atomic<double>* knob;
    double previous;
    ScopedFault(std::atomic<double>& k, double value) : knob(&k), previous(k.load()) {
        k.store(value);
    }
    ~ScopedFault() { knob->store(previous); }
};

}  // namespace testing

}  // namespace lsn
