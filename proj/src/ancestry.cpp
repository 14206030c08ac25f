#include "fvmod/ancestry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace fvmod {

double h_modulus(double x) {
    if (!(x > 0.0 && x < 1.0)) {
        throw std::invalid_argument("h(x) is used on (0,1)");
    }
    return std::sqrt(x * std::log(1.0 / x));
}

std::vector<int> ancestor_levels(const EventLog& log, double t, double s, int max_level) {
    if (s > t) throw std::invalid_argument("ancestor_levels needs s <= t");
    std::vector<int> level(max_level);
    for (int i = 0; i < max_level; ++i) level[i] = i + 1;
    // Events in (s, t], latest first.
    auto lo = std::lower_bound(log.events.begin(), log.events.end(), s,
                               [](const BirthEvent& e, double v) { return e.time <= v; });
    auto hi = std::upper_bound(log.events.begin(), log.events.end(), t,
                               [](double v, const BirthEvent& e) { return v < e.time; });
    for (auto it = hi; it-- != lo;) {
        for (int& lvl : level) lvl = event_ancestor_level(*it, lvl);
    }
    return level;
}

AncestorMap build_ancestor_map(const EventLog& log, double t,
                               std::vector<double> s_grid, int max_level) {
    std::sort(s_grid.begin(), s_grid.end());
    AncestorMap map;
    map.t = t;
    map.s_grid = s_grid;
    map.levels.resize(s_grid.size());
    // Walk backwards once, snapshotting at each grid time.
    std::vector<int> level(max_level);
    for (int i = 0; i < max_level; ++i) level[i] = i + 1;
    auto it = std::upper_bound(log.events.begin(), log.events.end(), t,
                               [](double v, const BirthEvent& e) { return v < e.time; });
    for (size_t g = s_grid.size(); g-- > 0;) {
        double s = s_grid[g];
        if (s > t) throw std::invalid_argument("ancestor map grid times must be <= t");
        while (it != log.events.begin() && std::prev(it)->time > s) {
            --it;
            for (int& lvl : level) lvl = event_ancestor_level(*it, lvl);
        }
        map.levels[g] = level;
    }
    return map;
}

OrderedPartition recovered_partition(const EventLog& log, double t, double s, int max_level) {
    std::vector<int> anc = ancestor_levels(log, t, s, max_level);
    std::map<int, std::vector<int>> groups;
    for (int i = 1; i <= max_level; ++i) groups[anc[i - 1]].push_back(i);
    OrderedPartition p;
    p.n = max_level;
    // Grouping by ancestor level; ancestors come from lower levels, so
    // ordering by ancestor level and ordering by least element coincide.
    for (auto& [lvl, members] : groups) p.blocks.push_back(std::move(members));
    std::sort(p.blocks.begin(), p.blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return p;
}

int block_count(const EventLog& log, double s, double t, int max_level) {
    std::vector<int> anc = ancestor_levels(log, t, s, max_level);
    std::sort(anc.begin(), anc.end());
    return static_cast<int>(std::unique(anc.begin(), anc.end()) - anc.begin());
}

namespace {

// Memoized ancestor walk: one pass per (query time) over the distinct
// ancestral-path nodes of the queried leaves.
struct AncestorCache {
    const LookdownPath& path;
    double s;
    std::unordered_map<int32_t, int32_t> memo;

    int32_t resolve(int32_t node) {
        std::vector<int32_t> trail;
        while (path.nodes[node].parent >= 0 && path.nodes[node].birth >= s) {
            auto it = memo.find(node);
            if (it != memo.end()) {
                node = it->second;
                break;
            }
            trail.push_back(node);
            node = path.nodes[node].parent;
        }
        for (int32_t v : trail) memo.emplace(v, node);
        return node;
    }
};

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

} // namespace

int recovered_block_count(const LookdownPath& path, double s, double t, int levels) {
    int ct = path.checkpoint_index(t);
    if (levels < 1 || levels > path.n) throw std::invalid_argument("bad level count");
    AncestorCache cache{path, s, {}};
    std::vector<int32_t> anc(levels);
    for (int lvl = 1; lvl <= levels; ++lvl) {
        anc[lvl - 1] = cache.resolve(path.node_at(ct, lvl));
    }
    std::sort(anc.begin(), anc.end());
    return static_cast<int>(std::unique(anc.begin(), anc.end()) - anc.begin());
}

double dislocation_H(const LookdownPath& path, double r, double s, double t, int levels) {
    if (r > s || s > t) throw std::invalid_argument("dislocation needs r <= s <= t");
    if (r == s) return 0.0;
    int ct = path.checkpoint_index(t);
    int cs = path.checkpoint_index(s);
    int cr = path.checkpoint_index(r);
    if (levels < 1 || levels > path.n) throw std::invalid_argument("bad level count");
    AncestorCache at_s{path, s, {}};
    AncestorCache at_r{path, r, {}};
    double max_sq = 0.0;
    for (int lvl = 1; lvl <= levels; ++lvl) {
        int32_t a_s = at_s.resolve(path.node_at(ct, lvl));
        int32_t a_r = at_r.resolve(a_s);
        // Ancestors on one lineage share the root, so the displacement
        // difference is translation-exact.
        max_sq = std::max(max_sq, sq_dist(path.disp_at(cs, a_s), path.disp_at(cr, a_r)));
    }
    return std::sqrt(max_sq);
}

double dislocation_H_blockform(const LookdownPath& path, double r, double s, double t,
                               int levels) {
    if (r > s || s > t) throw std::invalid_argument("dislocation needs r <= s <= t");
    if (r == s) return 0.0;
    int ct = path.checkpoint_index(t);
    int cs = path.checkpoint_index(s);
    int cr = path.checkpoint_index(r);
    AncestorCache at_s{path, s, {}};
    AncestorCache at_r{path, r, {}};

    std::vector<int32_t> anc_s(levels), anc_r(levels);
    std::unordered_map<int32_t, int> least_of;  // ancestor node -> least member level
    for (int lvl = 1; lvl <= levels; ++lvl) {
        anc_s[lvl - 1] = at_s.resolve(path.node_at(ct, lvl));
        anc_r[lvl - 1] = at_r.resolve(anc_s[lvl - 1]);
        least_of.try_emplace(anc_r[lvl - 1], lvl);
    }
    std::vector<std::pair<int, int32_t>> blocks;  // (least member, ancestor node)
    blocks.reserve(least_of.size());
    for (auto [node, least] : least_of) blocks.emplace_back(least, node);
    std::sort(blocks.begin(), blocks.end());

    double max_sq = 0.0;
    for (size_t rank = 0; rank < blocks.size(); ++rank) {
        int32_t a_r = blocks[rank].second;
        // The rank-th block's ancestor occupies level rank+1 at time r.
        int level_at_r = path.level_of(cr, a_r);
        if (level_at_r != static_cast<int>(rank) + 1) {
            throw std::logic_error("recovered block rank does not match ancestor level");
        }
        std::span<const double> pos_r{
            &path.snapshot_disp[cr][static_cast<size_t>(level_at_r - 1) * path.d],
            static_cast<size_t>(path.d)};
        for (int lvl = 1; lvl <= levels; ++lvl) {
            if (anc_r[lvl - 1] != a_r) continue;
            max_sq = std::max(max_sq, sq_dist(path.disp_at(cs, anc_s[lvl - 1]), pos_r));
        }
    }
    return std::sqrt(max_sq);
}

double support_radius(const LookdownPath& path, double t, int levels) {
    int ct = path.checkpoint_index(t);
    if (levels < 1 || levels > path.n) throw std::invalid_argument("bad level count");
    double max_sq = 0.0;
    for (int lvl = 1; lvl <= levels; ++lvl) {
        int32_t id = path.node_at(ct, lvl);
        int root = path.nodes[id].root_level;
        const double* disp = &path.snapshot_disp[ct][static_cast<size_t>(lvl - 1) * path.d];
        double sq = 0.0;
        for (int c = 0; c < path.d; ++c) {
            double v = path.initial_positions[(root - 1) * static_cast<size_t>(path.d) + c] + disp[c];
            sq += v * v;
        }
        max_sq = std::max(max_sq, sq);
    }
    return std::sqrt(max_sq);
}

bool containment_check(const LookdownPath& path, double t, double eps, double c, int levels) {
    int ct = path.checkpoint_index(t);
    int cp = path.checkpoint_index(t - eps);
    if (levels < 1 || levels > path.n) throw std::invalid_argument("bad level count");
    double radius = c * h_modulus(eps);
    double r_sq = radius * radius;
    AncestorCache anc{path, t - eps, {}};
    int d = path.d;
    auto diff_sq = [&](int lvl_t, int lvl_p) {
        int32_t id_t = path.snapshot_node[ct][lvl_t - 1];
        int32_t id_p = path.snapshot_node[cp][lvl_p - 1];
        int root_t = path.nodes[id_t].root_level;
        int root_p = path.nodes[id_p].root_level;
        const double* dt_ = &path.snapshot_disp[ct][static_cast<size_t>(lvl_t - 1) * d];
        const double* dp_ = &path.snapshot_disp[cp][static_cast<size_t>(lvl_p - 1) * d];
        double sq = 0.0;
        for (int cc = 0; cc < d; ++cc) {
            double init_diff = path.initial_positions[(root_t - 1) * static_cast<size_t>(d) + cc] -
                               path.initial_positions[(root_p - 1) * static_cast<size_t>(d) + cc];
            double v = init_diff + (dt_[cc] - dp_[cc]);
            sq += v * v;
        }
        return sq;
    };
    for (int lvl = 1; lvl <= levels; ++lvl) {
        // The lineage's own ancestor is usually the nearest witness.
        int32_t a = anc.resolve(path.node_at(ct, lvl));
        int anc_level = path.level_of(cp, a);
        if (anc_level > 0 && diff_sq(lvl, anc_level) <= r_sq) continue;
        bool found = false;
        for (int lp = 1; lp <= path.n && !found; ++lp) {
            found = diff_sq(lvl, lp) <= r_sq;
        }
        if (!found) return false;
    }
    return true;
}

double hausdorff_distance(std::span<const double> cloud_a, std::span<const double> cloud_b,
                          int dim, bool allow_empty) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
    size_t na = cloud_a.size() / dim, nb = cloud_b.size() / dim;
    if (na == 0 || nb == 0) {
        if (!allow_empty) throw std::invalid_argument("empty cloud without the empty-set convention");
        if (na == 0 && nb == 0) return 0.0;
        return 1.0;
    }
    auto one_sided = [&](std::span<const double> from, size_t nf,
                         std::span<const double> to, size_t nt) {
        double worst = 0.0;
        for (size_t i = 0; i < nf; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < nt; ++j) {
                double sq = 0.0;
                for (int c = 0; c < dim; ++c) {
                    double diff = from[i * dim + c] - to[j * dim + c];
                    sq += diff * diff;
                }
                best = std::min(best, sq);
                if (best == 0.0) break;
            }
            worst = std::max(worst, std::min(std::sqrt(best), 1.0));
            if (worst >= 1.0) break;
        }
        return worst;
    };
    return std::max(one_sided(cloud_a, na, cloud_b, nb), one_sided(cloud_b, nb, cloud_a, na));
}

} // namespace fvmod
