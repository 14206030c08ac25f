#include "fvmod/measure.hpp"

#include "fvmod/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fvmod {

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

} // namespace

double log_choose(int n, int k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double DensityTable::at(double xx) const {
    if (x.empty() || xx < x.front() || xx > x.back()) return 0.0;
    auto it = std::upper_bound(x.begin(), x.end(), xx);
    if (it == x.begin()) return value.front();
    size_t i = static_cast<size_t>(it - x.begin());
    if (i >= x.size()) return value.back();
    double t = (xx - x[i - 1]) / (x[i] - x[i - 1]);
    return value[i - 1] + t * (value[i] - value[i - 1]);
}

double DensityTable::mass() const {
    double total = 0.0;
    for (size_t i = 0; i + 1 < x.size(); ++i) {
        total += 0.5 * (value[i] + value[i + 1]) * (x[i + 1] - x[i]);
    }
    return total;
}

double DensityTable::integral_one_minus_x_pow(int m) const {
    // On each segment the density is a0 + a1*x; substituting u = 1-x gives
    // integral ((a0+a1) - a1 u) u^m du, which is exact in two power terms.
    double total = 0.0;
    for (size_t i = 0; i + 1 < x.size(); ++i) {
        double x0 = x[i], x1 = x[i + 1];
        double a1 = (value[i + 1] - value[i]) / (x1 - x0);
        double a0 = value[i] - a1 * x0;
        double ua = 1.0 - x1, ub = 1.0 - x0;  // ua < ub
        double p1 = (std::pow(ub, m + 1) - std::pow(ua, m + 1)) / (m + 1);
        double p2 = (std::pow(ub, m + 2) - std::pow(ua, m + 2)) / (m + 2);
        total += (a0 + a1) * p1 - a1 * p2;
    }
    return total;
}

void LambdaMeasure::finalize() {
    if (kingman_mass_ < 0.0 || !std::isfinite(kingman_mass_)) {
        throw std::invalid_argument("kingman mass must be finite and nonnegative");
    }
    double dm = 0.0;
    switch (kind_) {
        case DensityKind::none:
            break;
        case DensityKind::beta:
            if (!(beta_param_ > 1.0 && beta_param_ < 2.0)) {
                throw std::invalid_argument("beta parameter must lie in (1,2)");
            }
            if (!(beta_weight_ > 0.0) || !std::isfinite(beta_weight_)) {
                throw std::invalid_argument("beta weight must be positive and finite");
            }
            dm = beta_weight_;
            break;
        case DensityKind::table: {
            if (table_.x.size() < 2 || table_.x.size() != table_.value.size()) {
                throw std::invalid_argument("density table needs at least two knots");
            }
            for (size_t i = 0; i < table_.x.size(); ++i) {
                if (!std::isfinite(table_.x[i]) || !std::isfinite(table_.value[i])) {
                    throw std::invalid_argument("density table entries must be finite");
                }
                if (table_.x[i] <= 0.0 || table_.x[i] > 1.0) {
                    throw std::invalid_argument("density table knots must lie in (0,1]");
                }
                if (table_.value[i] < 0.0) {
                    throw std::invalid_argument("density table values must be nonnegative");
                }
                if (i > 0 && table_.x[i] <= table_.x[i - 1]) {
                    throw std::invalid_argument("density table knots must be strictly increasing");
                }
            }
            dm = table_.mass();
            if (!std::isfinite(dm)) {
                throw std::invalid_argument("density table has non-finite total mass");
            }
            break;
        }
    }
    total_mass_ = kingman_mass_ + dm;
}

LambdaMeasure LambdaMeasure::kingman(double mass) {
    LambdaMeasure m;
    m.kingman_mass_ = mass;
    m.kind_ = DensityKind::none;
    m.spec_ = "kingman:" + std::to_string(mass);
    m.finalize();
    return m;
}

LambdaMeasure LambdaMeasure::beta(double beta_param, double weight) {
    LambdaMeasure m;
    m.kind_ = DensityKind::beta;
    m.beta_param_ = beta_param;
    m.beta_weight_ = weight;
    m.spec_ = "beta:" + std::to_string(beta_param);
    m.finalize();
    return m;
}

LambdaMeasure LambdaMeasure::mix(double kingman_mass, double beta_param, double beta_weight) {
    LambdaMeasure m;
    m.kingman_mass_ = kingman_mass;
    m.kind_ = DensityKind::beta;
    m.beta_param_ = beta_param;
    m.beta_weight_ = beta_weight;
    m.spec_ = "mix:" + std::to_string(kingman_mass) + "+beta:" + std::to_string(beta_param);
    m.finalize();
    return m;
}

LambdaMeasure LambdaMeasure::from_table(DensityTable table, double kingman_mass) {
    LambdaMeasure m;
    m.kingman_mass_ = kingman_mass;
    m.kind_ = DensityKind::table;
    m.table_ = std::move(table);
    m.spec_ = "table:<inline>";
    m.finalize();
    return m;
}

namespace {

DensityTable load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open density table: " + path);
    DensityTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty density table: " + path);
    // Tolerate an optional UTF-8 BOM and whitespace in the header.
    std::string header = line;
    header.erase(std::remove_if(header.begin(), header.end(),
                                [](unsigned char c) { return std::isspace(c) || c >= 0x80; }),
                 header.end());
    if (header != "x,density") {
        throw std::invalid_argument("density table must have header 'x,density': " + path);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b)) {
            throw std::invalid_argument("bad density table row: " + line);
        }
        t.x.push_back(std::stod(a));
        t.value.push_back(std::stod(b));
    }
    return t;
}

} // namespace

LambdaMeasure LambdaMeasure::parse(const std::string& spec) {
    auto starts = [&](const char* p) { return spec.rfind(p, 0) == 0; };
    try {
        if (starts("kingman:")) {
            return kingman(std::stod(spec.substr(8)));
        }
        if (starts("beta:")) {
            return LambdaMeasure::beta(std::stod(spec.substr(5)));
        }
        if (starts("mix:")) {
            auto plus = spec.find('+');
            if (plus == std::string::npos || spec.compare(plus + 1, 5, "beta:") != 0) {
                throw std::invalid_argument("mix spec must look like mix:<mass>+beta:<b>");
            }
            double mass = std::stod(spec.substr(4, plus - 4));
            double b = std::stod(spec.substr(plus + 6));
            auto m = mix(mass, b);
            m.spec_ = spec;
            return m;
        }
        if (starts("table:")) {
            auto m = from_table(load_table_csv(spec.substr(6)));
            m.spec_ = spec;
            return m;
        }
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw std::invalid_argument("bad measure spec '" + spec + "': " + e.what());
    }
    throw std::invalid_argument("unknown measure spec: " + spec);
}

double LambdaMeasure::density_at(double x) const {
    if (x <= 0.0 || x > 1.0) return 0.0;
    switch (kind_) {
        case DensityKind::none:
            return 0.0;
        case DensityKind::beta:
            return beta_weight_ * std::exp((1.0 - beta_param_) * std::log(x) +
                                           (beta_param_ - 1.0) * std::log1p(-x) -
                                           log_beta(2.0 - beta_param_, beta_param_));
        case DensityKind::table:
            return table_.at(x);
    }
    return 0.0;
}

LambdaMeasure LambdaMeasure::scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("scale factor must be positive");
    LambdaMeasure m = *this;
    m.kingman_mass_ *= c;
    m.beta_weight_ *= c;
    for (double& v : m.table_.value) v *= c;
    m.finalize();
    return m;
}

namespace {

void require_bk(int b, int k) {
    if (k < 2) throw std::invalid_argument("merger size k must be >= 2");
    if (k > b) throw std::invalid_argument("merger size k must be <= b");
}

// Density-part lambda_{b,k} for the beta variant, closed form
// B(k-beta, b-k+beta) / B(2-beta, beta).
double beta_lambda_bk(double beta_param, double weight, int b, int k) {
    return weight * std::exp(log_beta(k - beta_param, b - k + beta_param) -
                             log_beta(2.0 - beta_param, beta_param));
}

double table_lambda_bk(const DensityTable& t, int b, int k) {
    if (k == 2 && b == 2) return t.mass();
    double total = 0.0;
    for (size_t i = 0; i + 1 < t.x.size(); ++i) {
        double x0 = t.x[i], x1 = t.x[i + 1];
        double a1 = (t.value[i + 1] - t.value[i]) / (x1 - x0);
        double a0 = t.value[i] - a1 * x0;
        total += integrate([&](double x) {
            double w = (k == 2) ? 1.0 : std::pow(x, k - 2);
            double v = (b == k) ? 1.0 : std::pow(1.0 - x, b - k);
            return w * v * (a0 + a1 * x);
        }, x0, x1);
    }
    return total;
}

} // namespace

double lambda_bk(const LambdaMeasure& m, int b, int k) {
    require_bk(b, k);
    // The atom at 0 contributes the integrand value at x=0, which is
    // 1 for k=2 and 0 otherwise.
    double rate = (k == 2) ? m.kingman_mass() : 0.0;
    switch (m.density_kind()) {
        case DensityKind::none:
            break;
        case DensityKind::beta:
            rate += beta_lambda_bk(m.beta_param(), m.beta_weight(), b, k);
            break;
        case DensityKind::table:
            rate += table_lambda_bk(m.table(), b, k);
            break;
    }
    return rate;
}

double lambda_bk_quadrature(const LambdaMeasure& m, int b, int k) {
    require_bk(b, k);
    double rate = (k == 2) ? m.kingman_mass() : 0.0;
    switch (m.density_kind()) {
        case DensityKind::none:
            break;
        case DensityKind::beta: {
            // Substitute x = y^{1/(2-beta)}: the integrand
            // x^{k-2}(1-x)^{b-k} rho(x) dx becomes smooth on [0,1].
            double beta = m.beta_param();
            double s = 1.0 / (2.0 - beta);
            double lognorm = log_beta(2.0 - beta, beta);
            rate += m.beta_weight() * integrate([&](double y) {
                if (y <= 0.0) return 0.0;
                double x = std::pow(y, s);
                if (x >= 1.0) return 0.0;
                // exponent of y: s(k - beta) - 1
                double lg = (s * (k - beta) - 1.0) * std::log(y) +
                            (b - k + beta - 1.0) * std::log1p(-x) - lognorm;
                return s * std::exp(lg);
            }, 0.0, 1.0);
            break;
        }
        case DensityKind::table:
            rate += table_lambda_bk(m.table(), b, k);
            break;
    }
    return rate;
}

MergerRateTable rate_table(const LambdaMeasure& m, int b) {
    if (b < 2) throw std::invalid_argument("rate table needs b >= 2");
    if (b > 1000) {
        throw std::invalid_argument(
            "rate table limited to b <= 1000; use build_rate_arrays for larger b");
    }
    MergerRateTable t;
    t.b = b;
    t.rates.resize(b - 1);
    double choose = static_cast<double>(b) * (b - 1) / 2.0;  // C(b,2), updated per k
    for (int k = 2; k <= b; ++k) {
        double rate = lambda_bk(m, b, k);
        t.rates[k - 2] = rate;
        t.lambda_total += choose * rate;
        t.gamma += (k - 1) * choose * rate;
        choose *= static_cast<double>(b - k) / (k + 1);
    }
    return t;
}

RateArrays build_rate_arrays(const LambdaMeasure& m, int b_max) {
    if (b_max < 2) throw std::invalid_argument("b_max must be >= 2");
    RateArrays a;
    a.lambda_total.assign(b_max + 1, 0.0);
    a.gamma.assign(b_max + 1, 0.0);
    a.lambda_b2.assign(b_max + 1, 0.0);

    double lgbeta = 0.0;
    if (m.density_kind() == DensityKind::beta) lgbeta = std::lgamma(m.beta_param());
    for (int b = 2; b <= b_max; ++b) {
        double v = m.kingman_mass();
        switch (m.density_kind()) {
            case DensityKind::none:
                break;
            case DensityKind::beta:
                v += m.beta_weight() *
                     std::exp(std::lgamma(b - 2.0 + m.beta_param()) - std::lgamma(b) - lgbeta);
                break;
            case DensityKind::table:
                v += m.table().integral_one_minus_x_pow(b - 2);
                break;
        }
        a.lambda_b2[b] = v;
    }

    a.lambda_total[2] = m.total_mass();
    a.gamma[2] = a.lambda_b2[2];
    double prefix = a.lambda_b2[2];
    for (int b = 2; b < b_max; ++b) {
        a.lambda_total[b + 1] = a.lambda_total[b] + b * a.lambda_b2[b + 1];
        prefix += a.lambda_b2[b + 1];
        a.gamma[b + 1] = a.gamma[b] + prefix;
    }
    return a;
}

ConditionADiagnostic check_condition_A(const LambdaMeasure& m, double beta_hyp,
                                       int m_max, int b_max) {
    if (!(beta_hyp > 1.0)) throw std::invalid_argument("beta hypothesis must exceed 1");
    if (m_max < 2) throw std::invalid_argument("m_max must be >= 2");
    if (b_max < 10 * m_max) throw std::invalid_argument("b_max must be at least 10 * m_max");

    RateArrays a = build_rate_arrays(m, b_max);
    std::vector<double> suffix(b_max + 2, 0.0);
    for (int b = b_max; b >= 2; --b) {
        suffix[b] = suffix[b + 1] + 1.0 / a.lambda_total[b];
    }
    ConditionADiagnostic d;
    for (int mm = 2; mm <= m_max; ++mm) {
        d.values.emplace_back(mm, std::pow(mm, beta_hyp - 1.0) * suffix[mm + 1]);
    }
    d.plausibly_bounded = true;
    size_t half = d.values.size() / 2;
    for (size_t i = half + 1; i < d.values.size(); ++i) {
        if (d.values[i].second > d.values[i - 1].second * (1.0 + 1e-9)) {
            d.plausibly_bounded = false;
            break;
        }
    }
    d.tail_truncated = true;
    return d;
}

DensityBoundsReport check_density_bounds(const LambdaMeasure& m, double beta_hyp,
                                         double A, double eps, int grid) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
    if (grid < 10) throw std::invalid_argument("grid must have at least 10 points");
    if (!(A > 0.0)) throw std::invalid_argument("A must be positive");

    DensityBoundsReport r;
    r.has_density = m.has_density();
    if (!r.has_density) {
        // Atom-only measures have no density to dominate A x^{1-beta}.
        r.lower_holds = false;
        r.upper_holds = true;
        return r;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i = 0; i < grid; ++i) {
        // Geometric grid over six decades below eps.
        double x = eps * std::pow(10.0, -6.0 * i / (grid - 1));
        double ratio = m.density_at(x) / (A * std::pow(x, 1.0 - beta_hyp));
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    r.min_ratio = lo;
    r.max_ratio = hi;
    r.lower_holds = lo >= 1.0 - 1e-12;
    r.upper_holds = hi <= 1.0 + 1e-12;
    return r;
}

} // namespace fvmod
