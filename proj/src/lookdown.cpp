#include "fvmod/lookdown.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fvmod {

bool BirthEvent::valid(int n) const {
    if (is_pair) {
        return 1 <= i && i < j && j <= n;
    }
    if (participants.size() < 2) return false;
    if (!(x > 0.0 && x <= 1.0)) return false;
    if (!std::is_sorted(participants.begin(), participants.end())) return false;
    if (participants.front() < 1 || participants.back() > n) return false;
    for (size_t k = 1; k < participants.size(); ++k) {
        if (participants[k] == participants[k - 1]) return false;
    }
    return true;
}

int event_ancestor_level(const BirthEvent& e, int level) {
    if (e.is_pair) {
        if (level < e.j) return level;
        if (level == e.j) return e.i;
        return level - 1;
    }
    const auto& J = e.participants;
    int j = J.front();
    if (level <= j) return level;
    // below = #{m in J : m < level}
    int below = static_cast<int>(std::lower_bound(J.begin(), J.end(), level) - J.begin());
    bool member = below < static_cast<int>(J.size()) && J[below] == level;
    if (member) return j;
    return level - (below - 1);
}

EventLog restrict_events(const EventLog& log, int n) {
    EventLog out;
    for (const auto& e : log.events) {
        if (e.is_pair) {
            if (e.j <= n) out.events.push_back(e);
            continue;
        }
        BirthEvent r = e;
        r.participants.clear();
        for (int p : e.participants) {
            if (p <= n) r.participants.push_back(p);
        }
        if (r.participants.size() >= 2) out.events.push_back(std::move(r));
    }
    return out;
}

int LookdownPath::checkpoint_index(double t) const {
    auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t);
    if (it == checkpoints.end() || *it != t) {
        throw std::invalid_argument("time " + std::to_string(t) + " is not a registered checkpoint");
    }
    return static_cast<int>(it - checkpoints.begin());
}

bool LookdownPath::is_checkpoint(double t) const {
    auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t);
    return it != checkpoints.end() && *it == t;
}

void LookdownPath::build_order_index() {
    snapshot_order_.resize(snapshot_node.size());
    for (size_t c = 0; c < snapshot_node.size(); ++c) {
        auto& order = snapshot_order_[c];
        order.resize(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        const auto& ids = snapshot_node[c];
        std::sort(order.begin(), order.end(),
                  [&](int32_t a, int32_t b) { return ids[a] < ids[b]; });
    }
}

int LookdownPath::level_of(int checkpoint, int32_t node) const {
    const auto& ids = snapshot_node[checkpoint];
    const auto& order = snapshot_order_[checkpoint];
    auto it = std::lower_bound(order.begin(), order.end(), node,
                               [&](int32_t lvl, int32_t id) { return ids[lvl] < id; });
    if (it == order.end() || ids[*it] != node) return -1;
    return *it + 1;
}

std::span<const double> LookdownPath::disp_at(int checkpoint, int32_t node) const {
    if (!has_positions) throw std::logic_error("path was simulated without positions");
    int level = level_of(checkpoint, node);
    if (level < 0) {
        throw std::logic_error("node not alive at the queried checkpoint");
    }
    return {&snapshot_disp[checkpoint][(level - 1) * static_cast<size_t>(d)],
            static_cast<size_t>(d)};
}

std::vector<double> LookdownPath::position(int checkpoint, int level) const {
    if (!has_positions) throw std::logic_error("path was simulated without positions");
    int32_t id = node_at(checkpoint, level);
    int root = nodes[id].root_level;
    std::vector<double> out(d);
    const double* disp = &snapshot_disp[checkpoint][(level - 1) * static_cast<size_t>(d)];
    for (int c = 0; c < d; ++c) {
        out[c] = initial_positions[(root - 1) * static_cast<size_t>(d) + c] + disp[c];
    }
    return out;
}

namespace {

struct EvalPlan {
    std::vector<int64_t> offset;  // per node, into times/values (unique, sorted)
    std::vector<double> times;
    std::vector<double> values;   // times.size() * d
};

// Decide which (node, time) Brownian values are needed -- every snapshot
// membership plus, transitively, the parent's value at each needed child's
// birth -- then evaluate them in node-id order from counter-keyed Gaussians.
EvalPlan evaluate_displacements(LookdownPath& path, uint64_t brownian_key) {
    const int d = path.d;
    const size_t nn = path.nodes.size();
    std::vector<uint8_t> needed(nn, 0);
    std::vector<int32_t> count(nn, 0);

    for (const auto& snap : path.snapshot_node) {
        for (int32_t id : snap) {
            needed[id] = 1;
            ++count[id];
        }
    }
    for (size_t id = nn; id-- > 0;) {
        if (!needed[id]) continue;
        int32_t p = path.nodes[id].parent;
        if (p >= 0) {
            needed[p] = 1;
            ++count[p];
        }
    }

    std::vector<int64_t> raw_off(nn + 1, 0);
    for (size_t id = 0; id < nn; ++id) raw_off[id + 1] = raw_off[id] + count[id];
    std::vector<double> raw_times(raw_off[nn]);
    std::vector<int32_t> fill(nn, 0);
    for (size_t c = 0; c < path.snapshot_node.size(); ++c) {
        double tc = path.checkpoints[c];
        for (int32_t id : path.snapshot_node[c]) {
            raw_times[raw_off[id] + fill[id]++] = tc;
        }
    }
    for (size_t id = nn; id-- > 0;) {
        if (!needed[id]) continue;
        int32_t p = path.nodes[id].parent;
        if (p >= 0) raw_times[raw_off[p] + fill[p]++] = path.nodes[id].birth;
    }

    EvalPlan plan;
    plan.offset.assign(nn + 1, 0);
    for (size_t id = 0; id < nn; ++id) {
        auto begin = raw_times.begin() + raw_off[id];
        auto end = raw_times.begin() + raw_off[id] + fill[id];
        std::sort(begin, end);
        plan.offset[id + 1] = plan.offset[id] + (std::unique(begin, end) - begin);
    }
    plan.times.resize(plan.offset[nn]);
    for (size_t id = 0; id < nn; ++id) {
        auto begin = raw_times.begin() + raw_off[id];
        std::copy(begin, begin + (plan.offset[id + 1] - plan.offset[id]),
                  plan.times.begin() + plan.offset[id]);
    }
    raw_times.clear();
    raw_times.shrink_to_fit();

    plan.values.assign(plan.times.size() * static_cast<size_t>(d), 0.0);
    std::vector<double> cur(d);
    for (size_t id = 0; id < nn; ++id) {
        int64_t lo = plan.offset[id], hi = plan.offset[id + 1];
        if (lo == hi) continue;
        const auto& node = path.nodes[id];
        if (node.parent < 0) {
            std::fill(cur.begin(), cur.end(), 0.0);
        } else {
            // Parent value at our birth time was planned above; ids are in
            // birth order so it is already evaluated.
            int64_t plo = plan.offset[node.parent], phi = plan.offset[node.parent + 1];
            auto it = std::lower_bound(plan.times.begin() + plo, plan.times.begin() + phi,
                                       node.birth);
            int64_t idx = it - plan.times.begin();
            for (int c = 0; c < d; ++c) cur[c] = plan.values[idx * d + c];
        }
        double prev_t = node.birth;
        for (int64_t k = lo; k < hi; ++k) {
            double dt = plan.times[k] - prev_t;
            prev_t = plan.times[k];
            double sd = std::sqrt(dt);
            for (int c = 0; c < d; c += 2) {
                double z0, z1;
                counter_normal_pair(brownian_key, id, static_cast<uint64_t>(k - lo),
                                    static_cast<uint64_t>(c / 2), z0, z1);
                cur[c] += sd * z0;
                if (c + 1 < d) cur[c + 1] += sd * z1;
            }
            for (int c = 0; c < d; ++c) plan.values[k * d + c] = cur[c];
        }
    }
    return plan;
}

} // namespace

LookdownPath simulate(const LambdaMeasure& m, int n, int d,
                      std::vector<double> initial_positions,
                      std::vector<double> checkpoints, double horizon,
                      uint64_t seed, LookdownOptions opt) {
    if (n < 2) throw std::invalid_argument("lookdown needs n >= 2 levels");
    if (d < 1) throw std::invalid_argument("spatial dimension must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (initial_positions.size() != static_cast<size_t>(n) * d) {
        throw std::invalid_argument("initial positions must hold n*d values");
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    if (!checkpoints.empty() && (checkpoints.front() < 0.0 || checkpoints.back() > horizon)) {
        throw std::invalid_argument("checkpoints must lie within [0, horizon]");
    }
    double budget = static_cast<double>(n) * static_cast<double>(checkpoints.size()) * d;
    if (budget > opt.memory_budget_doubles) {
        throw BudgetError("n * |checkpoints| * d exceeds the configured memory budget");
    }

    LookdownPath path;
    path.n = n;
    path.d = d;
    path.horizon = horizon;
    path.seed = seed;
    path.replica = opt.replica;
    path.checkpoints = checkpoints;
    path.initial_positions = std::move(initial_positions);

    CoalescentSampler sampler(m, n);
    RngStream ev(seed, opt.replica, StreamPurpose::events);

    double kr = sampler.kingman_rate(n);
    double dr = 0.0;
    bool table = sampler.has_table();
    if (m.has_density()) {
        dr = table ? sampler.table_proposal_rate() : sampler.density_rate(n);
    }
    double rate = kr + dr;

    path.nodes.reserve(static_cast<size_t>(n) + 1024);
    for (int lvl = 1; lvl <= n; ++lvl) {
        path.nodes.push_back({0.0, -1, lvl});
    }
    std::vector<int32_t> slots(n);
    for (int i = 0; i < n; ++i) slots[i] = i;

    size_t ci = 0;
    double t_next = rate > 0.0 ? ev.exponential(rate) : std::numeric_limits<double>::infinity();
    for (;;) {
        while (ci < path.checkpoints.size() && path.checkpoints[ci] < t_next) {
            if (path.checkpoints[ci] > horizon) break;
            path.snapshot_node.push_back(slots);
            ++ci;
        }
        if (!(t_next <= horizon)) break;

        double u = ev.uniform() * rate;
        if (u < kr) {
            // Single birth: j looks down at i.
            int i, j;
            do {
                i = 1 + static_cast<int>(ev.below(n));
                j = 1 + static_cast<int>(ev.below(n));
            } while (i == j);
            if (i > j) std::swap(i, j);
            int32_t parent = slots[i - 1];
            int32_t id = static_cast<int32_t>(path.nodes.size());
            path.nodes.push_back({t_next, parent, path.nodes[parent].root_level});
            slots.insert(slots.begin() + (j - 1), id);
            slots.pop_back();
            if (opt.record_events) {
                BirthEvent e;
                e.time = t_next;
                e.is_pair = true;
                e.i = i;
                e.j = j;
                path.events.events.push_back(std::move(e));
            }
        } else {
            int k = 0;
            double x = 0.0;
            if (table) {
                x = sampler.sample_table_x(ev);
                std::binomial_distribution<int> bin(n, x);
                k = bin(ev);
                if (k < 2) k = 0;  // thinned proposal, no event
            } else {
                k = sampler.sample_visible_k(n, ev);
                x = sampler.sample_x_given_k(n, k, ev);
            }
            if (k >= 2) {
                std::vector<int> J = CoalescentSampler::sample_subset(n, k, ev);
                for (int& lvl : J) ++lvl;  // 1-based levels
                int32_t parent = slots[J.front() - 1];
                for (size_t a = 1; a < J.size(); ++a) {
                    int32_t id = static_cast<int32_t>(path.nodes.size());
                    path.nodes.push_back({t_next, parent, path.nodes[parent].root_level});
                    slots.insert(slots.begin() + (J[a] - 1), id);
                }
                slots.resize(n);
                if (opt.record_events) {
                    BirthEvent e;
                    e.time = t_next;
                    e.is_pair = false;
                    e.x = x;
                    e.participants = std::move(J);
                    path.events.events.push_back(std::move(e));
                }
            }
        }
        t_next += ev.exponential(rate);
    }

    path.build_order_index();

    if (opt.positions && !path.checkpoints.empty()) {
        uint64_t key = derive_key(seed, opt.replica, StreamPurpose::brownian);
        EvalPlan plan = evaluate_displacements(path, key);
        path.snapshot_disp.resize(path.snapshot_node.size());
        for (size_t c = 0; c < path.snapshot_node.size(); ++c) {
            double tc = path.checkpoints[c];
            auto& disp = path.snapshot_disp[c];
            disp.resize(static_cast<size_t>(n) * d);
            for (int lvl = 0; lvl < n; ++lvl) {
                int32_t id = path.snapshot_node[c][lvl];
                auto it = std::lower_bound(plan.times.begin() + plan.offset[id],
                                           plan.times.begin() + plan.offset[id + 1], tc);
                int64_t idx = it - plan.times.begin();
                for (int cc = 0; cc < d; ++cc) {
                    disp[static_cast<size_t>(lvl) * d + cc] = plan.values[idx * d + cc];
                }
            }
        }
        path.has_positions = true;
    }
    return path;
}

WeightedCloud empirical_measure(const LookdownPath& path, double checkpoint, int m) {
    if (m < 1 || m > path.n) throw std::invalid_argument("empirical measure needs 1 <= m <= n");
    int c = path.checkpoint_index(checkpoint);
    WeightedCloud cloud;
    cloud.m = m;
    cloud.d = path.d;
    cloud.weight = 1.0 / m;
    cloud.points.reserve(static_cast<size_t>(m) * path.d);
    for (int lvl = 1; lvl <= m; ++lvl) {
        auto p = path.position(c, lvl);
        cloud.points.insert(cloud.points.end(), p.begin(), p.end());
    }
    return cloud;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void save_lookdown_dir(const LookdownPath& path, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(dir + "/events.csv");
        out << "time,kind,i,j,x,participants\n";
        for (const auto& e : path.events.events) {
            if (e.is_pair) {
                out << fmt_double(e.time) << ",pair," << e.i << ',' << e.j << ",,\n";
            } else {
                out << fmt_double(e.time) << ",multi,,," << fmt_double(e.x) << ',';
                for (size_t i = 0; i < e.participants.size(); ++i) {
                    if (i) out << ';';
                    out << e.participants[i];
                }
                out << '\n';
            }
        }
    }
    {
        std::ofstream out(dir + "/positions.csv");
        out << "checkpoint,level";
        for (int c = 0; c < path.d; ++c) out << ",p" << c;
        out << '\n';
        for (size_t ci = 0; ci < path.snapshot_node.size(); ++ci) {
            for (int lvl = 1; lvl <= path.n; ++lvl) {
                out << fmt_double(path.checkpoints[ci]) << ',' << lvl;
                if (path.has_positions) {
                    auto p = path.position(static_cast<int>(ci), lvl);
                    for (double v : p) out << ',' << fmt_double(v);
                } else {
                    for (int c = 0; c < path.d; ++c) out << ',';
                }
                out << '\n';
            }
        }
    }
    {
        nlohmann::json meta;
        meta["n"] = path.n;
        meta["d"] = path.d;
        meta["horizon"] = path.horizon;
        meta["seed"] = path.seed;
        meta["replica"] = path.replica;
        meta["checkpoints"] = path.checkpoints;
        meta["initial_positions"] = path.initial_positions;
        std::ofstream out(dir + "/meta.json");
        out << meta.dump(2) << '\n';
    }
}

LookdownPath load_lookdown_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    LookdownPath path;
    {
        std::ifstream in(dir + "/meta.json");
        if (!in) throw std::invalid_argument("cannot open " + dir + "/meta.json");
        nlohmann::json meta = nlohmann::json::parse(in);
        path.n = meta.at("n").get<int>();
        path.d = meta.at("d").get<int>();
        path.horizon = meta.at("horizon").get<double>();
        path.seed = meta.at("seed").get<uint64_t>();
        path.replica = meta.at("replica").get<uint64_t>();
        path.checkpoints = meta.at("checkpoints").get<std::vector<double>>();
        path.initial_positions = meta.at("initial_positions").get<std::vector<double>>();
    }
    {
        std::ifstream in(dir + "/events.csv");
        if (!in) throw std::invalid_argument("cannot open " + dir + "/events.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string time_s, kind, i_s, j_s, x_s, parts;
            std::getline(row, time_s, ',');
            std::getline(row, kind, ',');
            std::getline(row, i_s, ',');
            std::getline(row, j_s, ',');
            std::getline(row, x_s, ',');
            std::getline(row, parts);
            BirthEvent e;
            e.time = std::stod(time_s);
            if (kind == "pair") {
                e.is_pair = true;
                e.i = std::stoi(i_s);
                e.j = std::stoi(j_s);
            } else {
                e.is_pair = false;
                e.x = std::stod(x_s);
                std::istringstream ps(parts);
                std::string p;
                while (std::getline(ps, p, ';')) e.participants.push_back(std::stoi(p));
            }
            path.events.events.push_back(std::move(e));
        }
    }

    // Replay the event skeleton; node ids come out in the same creation
    // order simulate() used, so ancestry queries agree with the live path.
    path.nodes.reserve(path.n + path.events.events.size() * 2);
    for (int lvl = 1; lvl <= path.n; ++lvl) path.nodes.push_back({0.0, -1, lvl});
    std::vector<int32_t> slots(path.n);
    for (int i = 0; i < path.n; ++i) slots[i] = i;
    size_t ci = 0;
    auto flush_checkpoints = [&](double upto) {
        while (ci < path.checkpoints.size() && path.checkpoints[ci] < upto) {
            path.snapshot_node.push_back(slots);
            ++ci;
        }
    };
    for (const auto& e : path.events.events) {
        flush_checkpoints(e.time);
        if (e.is_pair) {
            int32_t parent = slots[e.i - 1];
            int32_t id = static_cast<int32_t>(path.nodes.size());
            path.nodes.push_back({e.time, parent, path.nodes[parent].root_level});
            slots.insert(slots.begin() + (e.j - 1), id);
            slots.pop_back();
        } else {
            int32_t parent = slots[e.participants.front() - 1];
            for (size_t a = 1; a < e.participants.size(); ++a) {
                int32_t id = static_cast<int32_t>(path.nodes.size());
                path.nodes.push_back({e.time, parent, path.nodes[parent].root_level});
                slots.insert(slots.begin() + (e.participants[a] - 1), id);
            }
            slots.resize(path.n);
        }
    }
    flush_checkpoints(std::numeric_limits<double>::infinity());
    path.build_order_index();

    // Displacements from the stored absolute positions.
    std::ifstream in(dir + "/positions.csv");
    if (in) {
        std::string line;
        std::getline(in, line);
        path.snapshot_disp.assign(path.snapshot_node.size(),
                                  std::vector<double>(static_cast<size_t>(path.n) * path.d, 0.0));
        bool any = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string f;
            std::getline(row, f, ',');
            double tc = std::stod(f);
            std::getline(row, f, ',');
            int lvl = std::stoi(f);
            int c = path.checkpoint_index(tc);
            int32_t id = path.snapshot_node[c][lvl - 1];
            int root = path.nodes[id].root_level;
            for (int cc = 0; cc < path.d; ++cc) {
                if (!std::getline(row, f, ',')) break;
                if (f.empty()) continue;
                path.snapshot_disp[c][static_cast<size_t>(lvl - 1) * path.d + cc] =
                    std::stod(f) - path.initial_positions[(root - 1) * static_cast<size_t>(path.d) + cc];
                any = true;
            }
        }
        path.has_positions = any;
    }
    return path;
}

} // namespace fvmod
