// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Each criterion pins its own thresholds; nothing is calibrated at run time.

#include "fvmod/ancestry.hpp"
#include "fvmod/cdi.hpp"
#include "fvmod/coalescent.hpp"
#include "fvmod/harness.hpp"
#include "fvmod/lookdown.hpp"
#include "fvmod/measure.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace fvmod;

namespace {

// ---- minimal SHA-256 for the determinism criterion ------------------------

struct Sha256 {
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    static constexpr uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};

    static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void block(const uint8_t* p) {
        uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
                   (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + s1 + ch + k[i] + w[i];
            uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + mj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    std::string digest(const std::string& data) {
        std::string msg = data;
        uint64_t bits = uint64_t(data.size()) * 8;
        msg.push_back('\x80');
        while (msg.size() % 64 != 56) msg.push_back('\0');
        for (int i = 7; i >= 0; --i) msg.push_back(char((bits >> (8 * i)) & 0xff));
        for (size_t off = 0; off < msg.size(); off += 64) {
            block(reinterpret_cast<const uint8_t*>(msg.data() + off));
        }
        char buf[65];
        for (int i = 0; i < 8; ++i) std::snprintf(buf + 8 * i, 9, "%08x", h[i]);
        return std::string(buf, 64);
    }
};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path + ">";
    std::stringstream ss;
    ss << in.rdbuf();
    return Sha256{}.digest(ss.str());
}

// ---- harness ---------------------------------------------------------------

struct Outcome {
    int id;
    std::string name;
    bool pass;
    double seconds;
    double budget;  // 0 = no stated budget
    std::string detail;
};

std::vector<Outcome> outcomes;

void run_criterion(int id, const std::string& name, double budget,
                   const std::function<bool(std::string&)>& body) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
        ok = false;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget > 0 && secs >= budget) {
        ok = false;
        detail += " [over runtime budget]";
    }
    outcomes.push_back({id, name, ok, secs, budget, detail});
    std::printf("criterion %02d [%s] %-28s %7.1fs  %s\n", id, ok ? "PASS" : "FAIL",
                name.c_str(), secs, detail.c_str());
    std::fflush(stdout);
}

double row_value(const std::vector<ResultRow>& rows, const std::string& kind,
                 double t = std::numeric_limits<double>::quiet_NaN(),
                 double c = std::numeric_limits<double>::quiet_NaN()) {
    for (const auto& r : rows) {
        if (r.kind != kind) continue;
        if (!std::isnan(t) && r.t != t) continue;
        if (!std::isnan(c) && r.c != c) continue;
        return r.value;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::string fmt1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---- criteria --------------------------------------------------------------

bool c01_rate_oracle(std::string& detail) {
    auto b15 = LambdaMeasure::beta(1.5);
    double closed = lambda_bk(b15, 3, 2);
    double quad = lambda_bk_quadrature(b15, 3, 2);
    bool ok = std::abs(closed - 0.75) <= 1e-8 * 0.75 && std::abs(quad - 0.75) <= 1e-8 * 0.75;
    double worst = 0.0;
    for (double beta : {1.1, 1.5, 1.9}) {
        auto m = LambdaMeasure::beta(beta);
        for (int b = 2; b < 30; ++b) {
            for (int k = 2; k <= b; ++k) {
                double lhs = lambda_bk(m, b, k);
                double rhs = lambda_bk(m, b + 1, k) + lambda_bk(m, b + 1, k + 1);
                worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, lhs));
            }
        }
    }
    ok = ok && worst <= 1e-9;
    detail = "lambda_32 closed=" + fmt1(closed) + " quad=" + fmt1(quad) +
             " worst recursion residual=" + fmt1(worst);
    return ok;
}

bool c02_kingman_speed(std::string& detail) {
    SpeedTable s(LambdaMeasure::kingman(1.0));
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
        double t = 1e-3 * std::pow(10.0, 3.0 * i / 200.0);
        worst = std::max(worst, std::abs(s.v_of_t(t) - 2.0 / t) / (2.0 / t));
    }
    bool ok = worst <= 1e-6;
    int violations = 0;
    for (const char* spec : {"kingman:1", "kingman:2.5", "beta:1.1", "beta:1.5", "beta:1.9",
                             "mix:0.5+beta:1.5"}) {
        auto m = LambdaMeasure::parse(spec);
        SpeedTable sp(m);
        for (int i = 0; i <= 60; ++i) {
            double t = 1e-3 * std::pow(10.0, 4.0 * i / 60.0);
            if (sp.v_of_t(t) < 2.0 / (m.total_mass() * t)) ++violations;
        }
    }
    ok = ok && violations == 0;
    detail = "kingman worst rel err=" + fmt1(worst) + ", bound violations=" +
             std::to_string(violations);
    return ok;
}

bool c03_kingman_hitting(std::string& detail) {
    auto m = LambdaMeasure::kingman(1.0);
    CoalescentSampler sampler(m, 2000);
    const int reps = 10000;
    std::vector<double> ts(reps);
    parallel_replicas(reps, [&](int rep) {
        auto p = sampler.sample_block_counting(2000, 50.0, 12345, rep);
        ts[rep] = hitting_time_Tm(p, 10);
    });
    double mean = oracles::mean(ts);
    double se = oracles::stderr_of_mean(ts);
    double target = 2.0 / 10.0 - 2.0 / 2000.0;
    bool ok = std::abs(mean - target) <= 3 * se;
    detail = "mean=" + fmt1(mean) + " target=" + fmt1(target) + " |diff|/se=" +
             fmt1(std::abs(mean - target) / se);
    return ok;
}

bool c04_law_equivalence(std::string& detail) {
    int pass_cells = 0;
    std::string ps;
    for (const char* spec : {"kingman:1", "beta:1.5"}) {
        ExperimentConfig cfg;
        cfg.measure_spec = spec;
        cfg.mode = ExperimentMode::law_check;
        cfg.n = 100;
        cfg.replicas = 5000;
        cfg.seed = 20240801;
        cfg.r_values = {0.1, 0.5};
        auto rows = run_experiment(cfg);
        for (const auto& r : rows) {
            if (r.kind == "ks_p") {
                if (r.value > 0.01) ++pass_cells;
                ps += std::string(spec) + "@r=" + fmt1(r.t) + ":p=" + fmt1(r.value) + " ";
            }
        }
    }
    detail = ps + "(" + std::to_string(pass_cells) + "/4 cells, need >=3)";
    return pass_cells >= 3;
}

bool c05_projectivity(std::string& detail) {
    auto m = LambdaMeasure::mix(0.5, 1.5);
    int mismatches = 0;
    for (int rep = 0; rep < 100; ++rep) {
        LookdownOptions opt;
        opt.replica = rep;
        opt.positions = false;
        auto path = simulate(m, 20, 1, std::vector<double>(20, 0.0), {}, 0.5, 777, opt);
        std::vector<int> big(20), small(10);
        for (int i = 0; i < 20; ++i) big[i] = i + 1;
        for (int i = 0; i < 10; ++i) small[i] = i + 1;
        for (const auto& e : path.events.events) {
            big = apply_event(big, e);
            EventLog one;
            one.events.push_back(e);
            auto r = restrict_events(one, 10);
            if (!r.events.empty()) small = apply_event(small, r.events[0]);
            for (int i = 0; i < 10; ++i) {
                if (big[i] != small[i]) ++mismatches;
            }
        }
    }
    detail = "mismatching level states over 100 coupled replicas: " + std::to_string(mismatches);
    return mismatches == 0;
}

bool c06_speed_of_descent(std::string& detail) {
    ExperimentConfig cfg;
    cfg.measure_spec = "beta:1.5";
    cfg.mode = ExperimentMode::nv_check;
    cfg.n0 = 100000;
    cfg.horizon = 1.0;
    cfg.s_values = {1e-3, 1e-2};
    cfg.alpha_star = 0.25;
    cfg.replicas = 200;
    cfg.seed = 6;
    auto rows = run_experiment(cfg);
    bool ok = true;
    std::string parts;
    for (double s : cfg.s_values) {
        double freq = row_value(rows, "nv_freq", s);
        double med = row_value(rows, "nv_median", s);
        bool cell = freq >= 0.9 && med >= 0.5 && med <= 2.0;
        ok = ok && cell;
        parts += "s=" + fmt1(s) + ":freq=" + fmt1(freq) + ",median=" + fmt1(med) +
                 (cell ? " ok; " : " OUT-OF-BAND; ");
    }
    detail = parts + "(need freq>=0.9 and median in [0.5,2])";
    return ok;
}

bool c07_modulus_upper(std::string& detail) {
    ExperimentConfig cfg;
    cfg.measure_spec = "kingman:1";
    cfg.mode = ExperimentMode::global;
    cfg.n = 2000;
    cfg.d = 1;
    cfg.horizon = 1.0;
    cfg.eps_k_min = 4;
    cfg.eps_k_max = 10;
    cfg.t_grid = 32;
    cfg.c_values = {2.5};
    cfg.replicas = 200;
    cfg.seed = 7;
    auto rows = run_experiment(cfg);
    double frac = row_value(rows, "viol_fraction", std::numeric_limits<double>::quiet_NaN(), 2.5);
    double med = row_value(rows, "sup_median");
    detail = "fraction of replicas with any H > 2.5 h(eps): " + fmt1(frac) +
             " (need <=0.05); median sup ratio=" + fmt1(med) + " target=2";
    return frac <= 0.05;
}

bool c08_modulus_lower(std::string& detail) {
    ExperimentConfig cfg;
    cfg.measure_spec = "kingman:1";
    cfg.mode = ExperimentMode::local_left;
    cfg.n = 2000;
    cfg.d = 1;
    cfg.horizon = 1.0;
    cfg.fixed_t = 1.0;
    cfg.eps_k_min = 4;
    cfg.eps_k_max = 12;
    cfg.c_values = {0.5 * std::sqrt(2.0)};
    cfg.replicas = 200;
    cfg.seed = 8;
    auto rows = run_experiment(cfg);

    double c = cfg.c_values[0];
    // per-replica sup over the eps grid and its restriction to k <= k_max
    int exceed = 0;
    std::vector<std::vector<double>> sup_by_kmax(13);
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        double sup = 0.0;
        std::vector<double> sup_k(13, 0.0);
        for (const auto& r : rows) {
            if (r.kind != "cell" || r.replica != rep) continue;
            int k = static_cast<int>(std::lround(-std::log2(r.eps)));
            for (int km = k; km <= 12; ++km) sup_k[km] = std::max(sup_k[km], r.value);
            sup = std::max(sup, r.value);
        }
        if (sup > c) ++exceed;
        for (int km = 8; km <= 12; ++km) sup_by_kmax[km].push_back(sup_k[km]);
    }
    double frac = static_cast<double>(exceed) / cfg.replicas;
    std::string trend = "median sup-ratio as k_max grows 8..12:";
    for (int km = 8; km <= 12; ++km) trend += " " + fmt1(oracles::median_of(sup_by_kmax[km]));
    detail = "fraction of replicas with sup > 0.5*sqrt(2): " + fmt1(frac) +
             " (need >=0.95); " + trend;
    return frac >= 0.95;
}

bool c09_containment(std::string& detail) {
    auto m = LambdaMeasure::kingman(1.0);
    double c = 1.5 * std::sqrt(2.0);
    const int reps = 200;
    std::vector<double> eps_list;
    std::vector<double> ck = {1.0};
    for (int k = 6; k <= 10; ++k) {
        eps_list.push_back(std::ldexp(1.0, -k));
        ck.push_back(1.0 - std::ldexp(1.0, -k));
    }
    std::vector<int> ok_rep(reps, 0);
    parallel_replicas(reps, [&](int rep) {
        LookdownOptions opt;
        opt.record_events = false;
        opt.replica = rep;
        auto path = simulate(m, 2000, 1, std::vector<double>(2000, 0.0), ck, 1.0, 9, opt);
        bool all = true;
        for (double eps : eps_list) {
            all = all && containment_check(path, 1.0, eps, c, 2000);
        }
        ok_rep[rep] = all ? 1 : 0;
    });
    int passed = 0;
    for (int v : ok_rep) passed += v;
    double frac = static_cast<double>(passed) / reps;
    detail = "containment pass rate over eps 2^-10..2^-6: " + fmt1(frac) + " (need >=0.95)";
    return frac >= 0.95;
}

bool c10_rho_origin(std::string& detail) {
    ExperimentConfig cfg;
    cfg.measure_spec = "beta:1.5";
    cfg.mode = ExperimentMode::rho_origin;
    cfg.n = 1000;
    cfg.d = 1;
    cfg.horizon = std::ldexp(1.0, -6);
    cfg.eps_k_min = 6;
    cfg.eps_k_max = 12;
    cfg.replicas = 200;
    cfg.seed = 10;
    cfg.init = "point:0";
    auto rows = run_experiment(cfg);
    bool ok = true;
    std::string meds = "medians k=6..12:";
    for (int k = 6; k <= 12; ++k) {
        double med = row_value(rows, "rho_median", std::ldexp(1.0, -k));
        meds += " " + fmt1(med);
        ok = ok && med >= 0.6 && med <= 4.0;
    }
    double slope = row_value(rows, "rho_trend");
    ok = ok && std::abs(slope) < 0.1;
    detail = meds + "; log-ratio slope per step=" + fmt1(slope) +
             " (need medians in [0.6,4], |slope|<0.1); target=2";
    return ok;
}

bool c11_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    const char* bin = std::getenv("FVMOD_BIN");
    if (!bin) {
        detail = "FVMOD_BIN not set (run through ctest or export the CLI path)";
        return false;
    }
    fs::path work = fs::path("acceptance_cli_work");
    fs::remove_all(work);
    fs::create_directories(work);
    auto sh = [&](const std::string& cmd) {
        std::string full = "cd " + work.string() + " && " + cmd + " >/dev/null 2>&1";
        return std::system(full.c_str()) == 0;
    };
    std::string B = std::string(" \"") + bin + "\"";
    struct Pair {
        std::string name, cmd1, out1, cmd2, out2;
    };
    std::string mod = " modulus global --measure kingman:1 --n 50 --horizon 1 --eps-kmin 4"
                      " --eps-kmax 6 --t-grid 4 --c 2.5 --reps 6 --seed 7 --out ";
    std::string rho = " rho --measure beta:1.5 --n 60 --horizon 0.015625 --eps-kmin 6"
                      " --eps-kmax 8 --reps 4 --seed 3 --init point:0 --out ";
    std::string nv = " nvcheck --measure kingman:1 --n0 2000 --horizon 1 --svals 0.01"
                     " --reps 50 --seed 4 --out ";
    std::string law = " lawcheck --measure kingman:1 --n 40 --horizon 1 --rvals 0.2"
                      " --reps 200 --seed 5 --out ";
    std::string coal = " coalesce --measure beta:1.5 --n0 300 --horizon 1 --reps 5 --seed 6 --out ";
    std::string cdi = " cdi --measure beta:1.5 --t-grid 1e-2:1:20,log --out ";
    std::vector<Pair> pairs = {
        {"modulus", "FVMOD_THREADS=1" + B + mod + "m1.csv", "m1.csv",
         "FVMOD_THREADS=8" + B + mod + "m2.csv", "m2.csv"},
        {"rho", "FVMOD_THREADS=8" + B + rho + "r1.csv", "r1.csv",
         "FVMOD_THREADS=1" + B + rho + "r2.csv", "r2.csv"},
        {"nvcheck", "FVMOD_THREADS=1" + B + nv + "n1.csv", "n1.csv",
         "FVMOD_THREADS=8" + B + nv + "n2.csv", "n2.csv"},
        {"lawcheck", "FVMOD_THREADS=8" + B + law + "l1.csv", "l1.csv",
         "FVMOD_THREADS=1" + B + law + "l2.csv", "l2.csv"},
        {"coalesce", B + coal + "c1.csv", "c1.csv", B + coal + "c2.csv", "c2.csv"},
        {"cdi", B + cdi + "d1.csv", "d1.csv", B + cdi + "d2.csv", "d2.csv"},
    };
    bool ok = true;
    std::string report;
    for (const auto& p : pairs) {
        if (!sh(p.cmd1) || !sh(p.cmd2)) {
            ok = false;
            report += p.name + ":cli-failed ";
            continue;
        }
        auto h1 = sha256_file((work / p.out1).string());
        auto h2 = sha256_file((work / p.out2).string());
        bool same = h1 == h2 && h1.size() == 64;
        ok = ok && same;
        report += p.name + (same ? ":sha=" + h1.substr(0, 10) + " " : ":MISMATCH ");
    }
    // lookdown directory output plus the ancestry reader on top of it
    std::string look = " lookdown --measure mix:0.5+beta:1.5 --n 40 --dim 2 --horizon 0.5"
                       " --checkpoints dyadic:3 --init gaussian --seed 11 --out ";
    if (sh(B + look + "ld1") && sh(B + look + "ld2")) {
        for (const char* f : {"events.csv", "positions.csv", "meta.json"}) {
            auto h1 = sha256_file((work / "ld1" / f).string());
            auto h2 = sha256_file((work / "ld2" / f).string());
            bool same = h1 == h2 && h1.size() == 64;
            ok = ok && same;
            if (!same) report += std::string("lookdown/") + f + ":MISMATCH ";
        }
        report += "lookdown:ok ";
        std::ofstream(work / "pairs.txt") << "0.0625,0.125,0.25\n0.125,0.375,0.5\n";
        std::string anc = " ancestry --in ld1 --pairs pairs.txt --out ";
        if (sh(B + anc + "a1.csv") && sh(B + anc + "a2.csv")) {
            bool same = sha256_file((work / "a1.csv").string()) ==
                        sha256_file((work / "a2.csv").string());
            ok = ok && same;
            report += std::string("ancestry:") + (same ? "ok" : "MISMATCH");
        } else {
            ok = false;
            report += "ancestry:cli-failed";
        }
    } else {
        ok = false;
        report += "lookdown:cli-failed";
    }
    detail = report;
    if (ok) fs::remove_all(work);
    return ok;
}

} // namespace

int main() {
    std::printf("acceptance suite: exact coalescent/lookdown simulator\n");
    std::printf("---------------------------------------------------------------\n");
    run_criterion(1, "rate oracle", 5.0, c01_rate_oracle);
    run_criterion(2, "kingman speed function", 10.0, c02_kingman_speed);
    run_criterion(3, "kingman hitting times", 60.0, c03_kingman_hitting);
    run_criterion(4, "lookdown/coalescent law", 600.0, c04_law_equivalence);
    run_criterion(5, "projectivity", 60.0, c05_projectivity);
    run_criterion(6, "speed of coming down", 600.0, c06_speed_of_descent);
    run_criterion(7, "modulus upper bound", 1800.0, c07_modulus_upper);
    run_criterion(8, "modulus lower bound", 0.0, c08_modulus_lower);
    run_criterion(9, "support containment", 0.0, c09_containment);
    run_criterion(10, "rho(t)/h(t) from a point", 0.0, c10_rho_origin);
    run_criterion(11, "CLI determinism", 0.0, c11_determinism);
    std::printf("---------------------------------------------------------------\n");
    int failed = 0;
    for (const auto& o : outcomes) failed += o.pass ? 0 : 1;
    std::printf("%zu criteria, %d failed\n", outcomes.size(), failed);
    return failed == 0 ? 0 : 1;
}
