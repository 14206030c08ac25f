#include "CLI11.hpp"

#include "fvmod/ancestry.hpp"
#include "fvmod/cdi.hpp"
#include "fvmod/coalescent.hpp"
#include "fvmod/harness.hpp"
#include "fvmod/lookdown.hpp"
#include "fvmod/measure.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace fvmod;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_t_grid(const std::string& spec) {
    // min:max:points[,log]
    std::string body = spec;
    bool log_spaced = false;
    if (auto pos = body.find(','); pos != std::string::npos) {
        std::string tag = body.substr(pos + 1);
        if (tag != "log" && tag != "lin") throw ConfigError("t-grid spacing must be log or lin");
        log_spaced = tag == "log";
        body = body.substr(0, pos);
    }
    std::istringstream ss(body);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
        throw ConfigError("t-grid must look like min:max:points[,log]");
    }
    double lo = std::stod(a), hi = std::stod(b);
    int points = std::stoi(c);
    if (!(lo > 0.0 && hi > lo && points >= 2)) throw ConfigError("bad t-grid range");
    std::vector<double> out(points);
    for (int i = 0; i < points; ++i) {
        double f = static_cast<double>(i) / (points - 1);
        out[i] = log_spaced ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    return out;
}

std::vector<double> parse_checkpoints(const std::string& spec, double horizon) {
    if (spec.rfind("dyadic:", 0) == 0) {
        int k = std::stoi(spec.substr(7));
        if (k < 0 || k > 24) throw ConfigError("dyadic checkpoint exponent out of range");
        std::vector<double> out;
        int count = 1 << k;
        for (int i = 0; i <= count; ++i) out.push_back(horizon * i / count);
        return out;
    }
    if (spec.rfind("list:", 0) == 0) {
        std::vector<double> out;
        std::istringstream ss(spec.substr(5));
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
        return out;
    }
    throw ConfigError("checkpoints must be dyadic:<k> or list:<csv>");
}

int run_cdi(const std::string& measure_spec, const std::string& tgrid, const std::string& out_path) {
    LambdaMeasure m = LambdaMeasure::parse(measure_spec);
    SpeedTable speed(m);
    std::vector<double> ts = parse_t_grid(tgrid);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << "t,u,v,psi_at_v\n";
    for (double t : ts) {
        double u = speed.u_of_t(t);
        double v = speed.v_of_t(t);
        out << fmt(t) << ',' << fmt(u) << ',' << fmt(v) << ',' << fmt(speed.psi_at(v)) << '\n';
    }
    return 0;
}

int run_coalesce(const std::string& measure_spec, int n0, double horizon, int reps,
                 uint64_t seed, const std::string& out_path) {
    LambdaMeasure m = LambdaMeasure::parse(measure_spec);
    CoalescentSampler sampler(m, n0);
    std::vector<BlockCountPath> paths(reps);
    parallel_replicas(reps, [&](int rep) {
        paths[rep] = sampler.sample_block_counting(n0, horizon, seed, rep);
    });
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << "rep,jump_index,time,count\n";
    for (int rep = 0; rep < reps; ++rep) {
        for (size_t i = 0; i < paths[rep].jump_times.size(); ++i) {
            out << rep << ',' << i << ',' << fmt(paths[rep].jump_times[i]) << ','
                << paths[rep].counts[i] << '\n';
        }
    }
    return 0;
}

int run_lookdown(const std::string& measure_spec, int n, int dim, double horizon,
                 const std::string& ckpt_spec, const std::string& init, uint64_t seed,
                 const std::string& out_dir) {
    LambdaMeasure m = LambdaMeasure::parse(measure_spec);
    auto checkpoints = parse_checkpoints(ckpt_spec, horizon);
    auto initial = make_initial_positions(init, n, dim, seed, 0);
    LookdownPath path = simulate(m, n, dim, std::move(initial), std::move(checkpoints),
                                 horizon, seed);
    save_lookdown_dir(path, out_dir);
    return 0;
}

int run_ancestry(const std::string& in_dir, const std::string& pairs_path,
                 const std::string& out_path) {
    LookdownPath path = load_lookdown_dir(in_dir);
    std::ifstream pairs(pairs_path);
    if (!pairs) throw std::runtime_error("cannot open pairs file: " + pairs_path);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << "r,s,t,N_rt,H,h_eps,ratio\n";
    std::string line;
    while (std::getline(pairs, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double r, s, t;
        if (!(ss >> r >> s >> t)) throw ConfigError("bad pairs row: " + line);
        int n_rt = recovered_block_count(path, r, t, path.n);
        double H = dislocation_H(path, r, s, t, path.n);
        double he = h_modulus(s - r);
        out << fmt(r) << ',' << fmt(s) << ',' << fmt(t) << ',' << n_rt << ','
            << fmt(H) << ',' << fmt(he) << ',' << fmt(H / he) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lambda-coalescent / lookdown Fleming-Viot simulator and verification harness"};
    app.require_subcommand(1);

    // cdi
    std::string measure = "kingman:1", tgrid = "1e-3:1:50,log", out = "out.csv";
    auto* cdi = app.add_subcommand("cdi", "Tabulate speed functions u and v");
    cdi->add_option("--measure", measure)->required();
    cdi->add_option("--t-grid", tgrid);
    cdi->add_option("--out", out)->required();

    // coalesce
    int n0 = 100, reps = 1;
    double horizon = 1.0;
    uint64_t seed = 1;
    auto* coal = app.add_subcommand("coalesce", "Sample block-counting paths");
    coal->add_option("--measure", measure)->required();
    coal->add_option("--n0", n0)->required();
    coal->add_option("--horizon", horizon)->required();
    coal->add_option("--reps", reps);
    coal->add_option("--seed", seed);
    coal->add_option("--out", out)->required();

    // lookdown
    int n = 100, dim = 1;
    std::string checkpoints = "dyadic:4", init = "point:0";
    auto* look = app.add_subcommand("lookdown", "Simulate the lookdown particle system");
    look->add_option("--measure", measure)->required();
    look->add_option("--n", n)->required();
    look->add_option("--dim", dim);
    look->add_option("--horizon", horizon)->required();
    look->add_option("--checkpoints", checkpoints);
    look->add_option("--init", init);
    look->add_option("--seed", seed);
    look->add_option("--out", out)->required();

    // ancestry
    std::string in_dir, pairs;
    auto* anc = app.add_subcommand("ancestry", "Dislocation report from a saved lookdown run");
    anc->add_option("--in", in_dir)->required();
    anc->add_option("--pairs", pairs)->required();
    anc->add_option("--out", out)->required();

    // experiment modes share a config
    fvmod::ExperimentConfig cfg;
    std::string config_path, side = "global";
    std::vector<double> cvals, svals, rvals;
    auto add_experiment_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--measure", cfg.measure_spec);
        sub->add_option("--n", cfg.n);
        sub->add_option("--dim", cfg.d);
        sub->add_option("--horizon", cfg.horizon);
        sub->add_option("--eps-kmin", cfg.eps_k_min);
        sub->add_option("--eps-kmax", cfg.eps_k_max);
        sub->add_option("--t-grid", cfg.t_grid);
        sub->add_option("--c", cvals);
        sub->add_option("--reps", cfg.replicas);
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--t", cfg.fixed_t);
        sub->add_option("--s", cfg.fixed_s);
        sub->add_option("--alpha", cfg.alpha_star);
        sub->add_option("--n0", cfg.n0);
        sub->add_option("--svals", svals);
        sub->add_option("--rvals", rvals);
        sub->add_option("--levels", cfg.levels);
        sub->add_option("--init", cfg.init);
        sub->add_option("--beta", cfg.beta_override);
        sub->add_option("--out", out)->required();
    };
    auto* modulus = app.add_subcommand("modulus", "Modulus-of-continuity scans");
    modulus->add_option("side", side, "global|left|right")->required();
    add_experiment_flags(modulus);
    auto* rho = app.add_subcommand("rho", "Support radius over dyadic times from a point mass");
    add_experiment_flags(rho);
    auto* nvcheck = app.add_subcommand("nvcheck", "Block count against the speed function v");
    add_experiment_flags(nvcheck);
    auto* lawcheck = app.add_subcommand("lawcheck", "Recovered-ancestry law vs direct coalescent");
    add_experiment_flags(lawcheck);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cdi->parsed()) return run_cdi(measure, tgrid, out);
        if (coal->parsed()) return run_coalesce(measure, n0, horizon, reps, seed, out);
        if (look->parsed()) return run_lookdown(measure, n, dim, horizon, checkpoints, init, seed, out);
        if (anc->parsed()) return run_ancestry(in_dir, pairs, out);

        CLI::App* sub = modulus->parsed() ? modulus
                      : rho->parsed() ? rho
                      : nvcheck->parsed() ? nvcheck
                      : lawcheck->parsed() ? lawcheck
                      : nullptr;
        if (!sub) return 2;
        fvmod::ExperimentConfig base;
        if (!config_path.empty()) base = fvmod::ExperimentConfig::from_json_file(config_path);
        // Explicit flags override the config file.
        auto pick = [&](const char* flag, auto& dst, const auto& src) {
            if (sub->count(flag)) dst = src;
        };
        pick("--measure", base.measure_spec, cfg.measure_spec);
        pick("--n", base.n, cfg.n);
        pick("--dim", base.d, cfg.d);
        pick("--horizon", base.horizon, cfg.horizon);
        pick("--eps-kmin", base.eps_k_min, cfg.eps_k_min);
        pick("--eps-kmax", base.eps_k_max, cfg.eps_k_max);
        pick("--t-grid", base.t_grid, cfg.t_grid);
        pick("--reps", base.replicas, cfg.replicas);
        pick("--seed", base.seed, cfg.seed);
        pick("--t", base.fixed_t, cfg.fixed_t);
        pick("--s", base.fixed_s, cfg.fixed_s);
        pick("--alpha", base.alpha_star, cfg.alpha_star);
        pick("--n0", base.n0, cfg.n0);
        pick("--levels", base.levels, cfg.levels);
        pick("--init", base.init, cfg.init);
        pick("--beta", base.beta_override, cfg.beta_override);
        if (!cvals.empty()) base.c_values = cvals;
        if (!svals.empty()) base.s_values = svals;
        if (!rvals.empty()) base.r_values = rvals;

        if (modulus->parsed()) {
            if (side == "global") base.mode = fvmod::ExperimentMode::global;
            else if (side == "left") base.mode = fvmod::ExperimentMode::local_left;
            else if (side == "right") base.mode = fvmod::ExperimentMode::local_right;
            else throw fvmod::ConfigError("modulus side must be global, left or right");
        } else if (rho->parsed()) {
            base.mode = fvmod::ExperimentMode::rho_origin;
        } else if (nvcheck->parsed()) {
            base.mode = fvmod::ExperimentMode::nv_check;
        } else {
            base.mode = fvmod::ExperimentMode::law_check;
        }
        auto rows = fvmod::run_experiment(base);
        fvmod::write_results(base, rows, out);
        return 0;
    } catch (const fvmod::BudgetError& e) {
        std::cerr << "budget refusal: " << e.what() << '\n';
        return 3;
    } catch (const fvmod::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
