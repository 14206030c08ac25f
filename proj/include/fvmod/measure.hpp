#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fvmod {

// Finite measure Lambda on [0,1]: an atom at 0 ("Kingman mass") plus an
// absolutely continuous part on (0,1]. No atom at 1 is representable.
//
// Density variants:
//   none  -- pure atom
//   beta  -- x^{1-beta} (1-x)^{beta-1} / B(2-beta, beta), beta in (1,2)
//   table -- piecewise linear between strictly increasing knots in (0,1],
//            zero below the first knot and above the last one

struct DensityTable {
    std::vector<double> x;
    std::vector<double> value;

    double at(double xx) const;
    double mass() const;
    // Exact per-segment value of integral (1-x)^m * density(x) dx.
    double integral_one_minus_x_pow(int m) const;
};

enum class DensityKind { none, beta, table };

class LambdaMeasure {
public:
    LambdaMeasure() = default;

    static LambdaMeasure kingman(double mass);
    static LambdaMeasure beta(double beta_param, double weight = 1.0);
    static LambdaMeasure mix(double kingman_mass, double beta_param, double beta_weight = 1.0);
    static LambdaMeasure from_table(DensityTable table, double kingman_mass = 0.0);

    // Grammar: "kingman:<mass>" | "beta:<b>" | "mix:<mass>+beta:<b>" | "table:<path.csv>"
    static LambdaMeasure parse(const std::string& spec);

    double kingman_mass() const { return kingman_mass_; }
    DensityKind density_kind() const { return kind_; }
    double beta_param() const { return beta_param_; }
    double beta_weight() const { return beta_weight_; }
    const DensityTable& table() const { return table_; }

    double total_mass() const { return total_mass_; }
    double density_mass() const { return total_mass_ - kingman_mass_; }
    bool has_density() const { return kind_ != DensityKind::none; }

    double density_at(double x) const;

    // Scaled copy (c > 0); all rate functionals scale linearly with it.
    LambdaMeasure scaled(double c) const;

    std::string describe() const { return spec_; }

private:
    double kingman_mass_ = 0.0;
    DensityKind kind_ = DensityKind::none;
    double beta_param_ = 0.0;
    double beta_weight_ = 0.0;  // total mass of the beta density part
    DensityTable table_;
    double total_mass_ = 0.0;
    std::string spec_;

    void finalize();
};

// Merger rates. lambda_{b,k} = integral x^{k-2} (1-x)^{b-k} Lambda(dx).
struct MergerRateTable {
    int b = 0;
    std::vector<double> rates;  // lambda_{b,k}, k = 2..b, at rates[k-2]
    double lambda_total = 0.0;  // lambda_b = sum_k C(b,k) lambda_{b,k}
    double gamma = 0.0;         // gamma_b = sum_k (k-1) C(b,k) lambda_{b,k}
};

double lambda_bk(const LambdaMeasure& m, int b, int k);
// Generic quadrature route (endpoint singularity removed by substitution);
// kept separate so the closed forms can be validated against it.
double lambda_bk_quadrature(const LambdaMeasure& m, int b, int k);

MergerRateTable rate_table(const LambdaMeasure& m, int b);

// lambda_b and gamma_b for all b <= b_max via the one-step recursions
//   lambda_{b+1} = lambda_b + b * lambda_{b+1,2}
//   gamma_{b+1}  = gamma_b + sum_{j=2}^{b+1} lambda_{j,2}
// (binomial identities of the defining integral; no factorials involved).
struct RateArrays {
    std::vector<double> lambda_total;  // [b], valid for b >= 2
    std::vector<double> gamma;         // [b]
    std::vector<double> lambda_b2;     // [b], lambda_{b,2}
};
RateArrays build_rate_arrays(const LambdaMeasure& m, int b_max);

// Condition-A style diagnostic: m^{beta-1} * sum_{b=m+1}^{b_max} lambda_b^{-1}.
struct ConditionADiagnostic {
    std::vector<std::pair<int, double>> values;  // per m = 2..m_max
    bool plausibly_bounded = false;  // non-increasing over the last half of the m range
    bool tail_truncated = true;      // the sum stops at b_max; this is a diagnostic, not a proof
};
ConditionADiagnostic check_condition_A(const LambdaMeasure& m, double beta_hyp,
                                       int m_max, int b_max);

// Density envelope check against A x^{1-beta} on (0, eps].
struct DensityBoundsReport {
    bool lower_holds = false;
    bool upper_holds = false;
    bool has_density = false;  // false for atom-only measures: Condition 3 fails by convention
    double min_ratio = 0.0;    // min density / (A x^{1-beta}) over the grid
    double max_ratio = 0.0;    // max of the same ratio
};
DensityBoundsReport check_density_bounds(const LambdaMeasure& m, double beta_hyp,
                                         double A, double eps, int grid);

// log C(n,k) via lgamma.
double log_choose(int n, int k);

} // namespace fvmod
