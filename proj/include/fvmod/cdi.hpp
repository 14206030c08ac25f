#pragma once

#include "fvmod/measure.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace fvmod {

// Coming-down-from-infinity analytics:
//   psi(q) = Lambda({0}) q^2/2 + integral (e^{-qx} - 1 + qx) x^{-2} Lambda_0(dx)
//   u(t)   = integral_t^inf dq / psi(q)
//   v(t)   = inf{ s > 0 : u(s) < t }   (cadlag inverse; the small-time block-count speed)

enum class CdiVerdict { comes_down, stays_infinite, inconclusive };

const char* to_string(CdiVerdict v);

struct StaysInfiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double psi(const LambdaMeasure& m, double q);

struct SchweinsbergReport {
    CdiVerdict verdict = CdiVerdict::inconclusive;
    double partial_sum = 0.0;          // sum_{n=2}^{b_max} gamma_n^{-1}
    double fitted_exponent = 0.0;      // decay exponent of gamma_n^{-1} over the last decade
    double exponent_stderr = 0.0;
    double log_gap_growth = 0.0;       // growth of 1/(slope-1) across decades; ~ln 10 flags the
                                       // boundary family gamma_n ~ n log n
    std::vector<double> partial_sum_trace;  // partial sums at geometric checkpoints
};
SchweinsbergReport schweinsberg_verdict(const LambdaMeasure& m, int b_max);

// Tabulated psi and u on a shared logarithmic q-grid, plus a fitted
// power-law tail beyond the cutoff. Built once per measure; immutable.
class SpeedTable {
public:
    SpeedTable(const LambdaMeasure& m, int b_max_verdict = 2000);

    CdiVerdict verdict() const { return verdict_; }
    double q_cutoff() const { return q_cutoff_; }
    double tail_exponent() const { return tail_exponent_; }
    double tail_coefficient() const { return tail_coefficient_; }

    double psi_at(double q) const;
    double u_of_t(double t) const;   // throws StaysInfiniteError unless verdict is comes_down
    double v_of_t(double t) const;   // bisection on u (strictly decreasing)

    const std::vector<double>& q_grid() const { return q_; }
    const std::vector<double>& psi_grid() const { return psi_; }
    const std::vector<double>& u_grid() const { return u_; }

    const LambdaMeasure& measure() const { return measure_; }

private:
    LambdaMeasure measure_;
    CdiVerdict verdict_ = CdiVerdict::inconclusive;
    bool atom_only_ = false;     // closed forms, no quadrature error
    std::vector<double> q_;      // log-spaced grid
    std::vector<double> psi_;
    std::vector<double> u_;      // u at grid points (tail integral included)
    double q_cutoff_ = 0.0;
    double tail_exponent_ = 0.0;
    double tail_coefficient_ = 0.0;

    void require_comes_down() const;
};

// Convenience one-shot wrappers (build a SpeedTable internally).
double u_of_t(const LambdaMeasure& m, double t);
double v_of_t(const LambdaMeasure& m, double t);

} // namespace fvmod
