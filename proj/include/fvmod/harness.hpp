#pragma once

#include "fvmod/ancestry.hpp"
#include "fvmod/cdi.hpp"
#include "fvmod/coalescent.hpp"
#include "fvmod/lookdown.hpp"
#include "fvmod/measure.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fvmod {

enum class ExperimentMode { global, local_left, local_right, rho_origin, nv_check, law_check };

const char* to_string(ExperimentMode m);
ExperimentMode experiment_mode_from_string(const std::string& s);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string measure_spec = "kingman:1";
    ExperimentMode mode = ExperimentMode::global;
    int n = 100;
    int d = 1;
    double horizon = 1.0;
    int eps_k_min = 4;   // eps = 2^{-k}; k >= 2 keeps eps <= 1/e
    int eps_k_max = 10;
    int t_grid = 16;     // points per eps row in [eps, horizon] (global mode)
    std::vector<double> c_values;
    int replicas = 1;
    uint64_t seed = 1;
    double fixed_t = 1.0;      // local_left
    double fixed_s = 0.0;      // local_right
    double alpha_star = 0.25;  // nv_check, in (0, 1/2)
    int n0 = 10000;            // nv_check start count
    std::vector<double> s_values;  // nv_check
    std::vector<double> r_values;  // law_check
    int levels = 0;            // dislocation truncation; 0 means all n
    std::string init = "point:0";
    double beta_override = 0.0;  // required for table measures

    void validate() const;  // throws ConfigError
    double target_beta() const;
    double target_constant() const;  // per-mode modulus constant (NaN for nv/law)
    std::vector<double> eps_grid() const;

    std::string to_json_string() const;
    static ExperimentConfig from_json_string(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
};

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

// One output record. `kind` distinguishes per-cell data from per-replica
// summaries and cross-replica aggregates; unused columns stay NaN/-1.
struct ResultRow {
    std::string kind;
    int replica = -1;
    double eps = kNoValue;
    double t = kNoValue;
    double c = kNoValue;
    double value = kNoValue;
    double target = kNoValue;
    int pass = -1;
};

std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// Fixed header, deterministic formatting: identical config+seed gives a
// byte-identical file, independent of FVMOD_THREADS.
void write_results(const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                   const std::string& path);

struct KsResult {
    double d = 0.0;
    double p = 1.0;
};
KsResult two_sample_ks(std::vector<double> a, std::vector<double> b);

// Worker pool size: FVMOD_THREADS if set, hardware concurrency otherwise.
int worker_count();
void parallel_replicas(int replicas, const std::function<void(int)>& body);

std::vector<double> make_initial_positions(const std::string& init, int n, int d,
                                           uint64_t seed, uint64_t replica);

} // namespace fvmod
