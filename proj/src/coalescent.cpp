#include "fvmod/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace fvmod {

OrderedPartition OrderedPartition::singletons(int n) {
    OrderedPartition p;
    p.n = n;
    p.blocks.reserve(n);
    for (int i = 1; i <= n; ++i) p.blocks.push_back({i});
    return p;
}

bool OrderedPartition::valid() const {
    std::vector<char> seen(n + 1, 0);
    int last_min = 0;
    int covered = 0;
    for (const auto& b : blocks) {
        if (b.empty()) return false;
        if (!std::is_sorted(b.begin(), b.end())) return false;
        if (b.front() <= last_min) return false;  // ordered by least elements
        last_min = b.front();
        for (int e : b) {
            if (e < 1 || e > n || seen[e]) return false;
            seen[e] = 1;
            ++covered;
        }
    }
    return covered == n;
}

void OrderedPartition::merge_blocks(const std::vector<int>& indices) {
    if (indices.size() < 2) return;
    std::vector<int> idx = indices;
    std::sort(idx.begin(), idx.end());
    std::vector<int> merged;
    for (int i : idx) {
        merged.insert(merged.end(), blocks[i].begin(), blocks[i].end());
    }
    std::sort(merged.begin(), merged.end());
    blocks[idx.front()] = std::move(merged);
    for (size_t j = idx.size(); j-- > 1;) {
        blocks.erase(blocks.begin() + idx[j]);
    }
}

OrderedPartition OrderedPartition::restricted(int m) const {
    OrderedPartition p;
    p.n = m;
    for (const auto& b : blocks) {
        std::vector<int> kept;
        for (int e : b) {
            if (e <= m) kept.push_back(e);
        }
        if (!kept.empty()) p.blocks.push_back(std::move(kept));
    }
    return p;
}

int BlockCountPath::count_at(double t) const {
    int c = n0;
    for (size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i) c = counts[i];
    return c;
}

double hitting_time_Tm(const BlockCountPath& path, int m) {
    if (m < 1) throw std::invalid_argument("hitting time needs m >= 1");
    if (path.n0 <= m) return 0.0;
    for (size_t i = 0; i < path.jump_times.size(); ++i) {
        if (path.counts[i] <= m) return path.jump_times[i];
    }
    return std::numeric_limits<double>::infinity();
}

CoalescentSampler::CoalescentSampler(const LambdaMeasure& m, int b_max)
    : measure_(m), b_max_(b_max) {
    if (b_max < 2) throw std::invalid_argument("sampler needs b_max >= 2");
    if (b_max > 5'000'000) {
        throw std::invalid_argument("b_max beyond rate-recursion limit (5e6)");
    }
    arrays_ = build_rate_arrays(m, b_max);
    if (has_table()) {
        const DensityTable& t = measure_.table();
        double cum = 0.0;
        for (size_t i = 0; i + 1 < t.x.size(); ++i) {
            double x0 = t.x[i], x1 = t.x[i + 1];
            double a1 = (t.value[i + 1] - t.value[i]) / (x1 - x0);
            double a0 = t.value[i] - a1 * x0;
            // integral (a0 + a1 x) x^{-2} dx over the segment
            double w = a0 * (1.0 / x0 - 1.0 / x1) + a1 * std::log(x1 / x0);
            table_.seg_weight.push_back(w);
            cum += w;
            table_.cum_weight.push_back(cum);
        }
        table_.total_rate = cum;
    }
}

int CoalescentSampler::sample_visible_k(int b, RngStream& rng) const {
    double beta = measure_.beta_param();
    double dr = density_rate(b);
    double w = 0.5 * static_cast<double>(b) * (b - 1) *
               (arrays_.lambda_b2[b] - measure_.kingman_mass());
    double u = rng.uniform() * dr;
    int k = 2;
    while (u > w && k < b) {
        u -= w;
        w *= static_cast<double>(b - k) * (k - beta) /
             (static_cast<double>(k + 1) * (b - k + beta - 1.0));
        ++k;
    }
    return k;
}

double CoalescentSampler::sample_x_given_k(int b, int k, RngStream& rng) const {
    double beta = measure_.beta_param();
    std::gamma_distribution<double> ga(k - beta, 1.0);
    std::gamma_distribution<double> gb(b - k + beta, 1.0);
    double a = ga(rng);
    double c = gb(rng);
    return a / (a + c);
}

std::vector<int> CoalescentSampler::sample_subset(int b, int k, RngStream& rng) {
    std::vector<int> out;
    if (k >= b) {
        out.resize(b);
        for (int i = 0; i < b; ++i) out[i] = i;
        return out;
    }
    std::set<int> chosen;
    for (int i = b - k; i < b; ++i) {
        int r = static_cast<int>(rng.below(i + 1));
        if (!chosen.insert(r).second) chosen.insert(i);
    }
    out.assign(chosen.begin(), chosen.end());
    return out;
}

double CoalescentSampler::sample_table_x(RngStream& rng) const {
    const DensityTable& t = measure_.table();
    double u = rng.uniform() * table_.total_rate;
    size_t seg = std::lower_bound(table_.cum_weight.begin(), table_.cum_weight.end(), u) -
                 table_.cum_weight.begin();
    if (seg >= table_.seg_weight.size()) seg = table_.seg_weight.size() - 1;
    double rest = u - (seg > 0 ? table_.cum_weight[seg - 1] : 0.0);
    double x0 = t.x[seg], x1 = t.x[seg + 1];
    double a1 = (t.value[seg + 1] - t.value[seg]) / (x1 - x0);
    double a0 = t.value[seg] - a1 * x0;
    // Invert F(x) = a0 (1/x0 - 1/x) + a1 log(x/x0) = rest by bisection.
    double lo = x0, hi = x1;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        double f = a0 * (1.0 / x0 - 1.0 / mid) + a1 * std::log(mid / x0);
        if (f < rest) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// One event step shared by the chains. Returns the number of participating
// lineages K (0 means a thinning ghost: no state change), advancing `t`.
template <typename PickTableK>
int next_event(const CoalescentSampler& s, int b, double& t, RngStream& rng,
               const PickTableK& pick_table_k) {
    const LambdaMeasure& m = s.measure();
    double kr = s.kingman_rate(b);
    if (!s.has_table()) {
        double dr = m.has_density() ? s.density_rate(b) : 0.0;
        double rate = kr + dr;
        if (rate <= 0.0) {
            t = std::numeric_limits<double>::infinity();
            return 0;
        }
        t += rng.exponential(rate);
        if (rng.uniform() * rate < kr) return 2;
        return s.sample_visible_k(b, rng);
    }
    // Table variant: candidate clock at kingman + proposal rate, thinned.
    double rate = kr + s.table_proposal_rate();
    t += rng.exponential(rate);
    if (rng.uniform() * rate < kr) return 2;
    return pick_table_k(b, rng);
}

int table_k(const CoalescentSampler& s, int b, RngStream& rng, double& x_out) {
    double x = s.sample_table_x(rng);
    std::binomial_distribution<int> bin(b, x);
    int k = bin(rng);
    x_out = x;
    return k >= 2 ? k : 0;
}

} // namespace

BlockCountPath CoalescentSampler::sample_block_counting(int n0, double horizon,
                                                        uint64_t seed, uint64_t replica) const {
    if (n0 < 2) throw std::invalid_argument("block counting needs n0 >= 2");
    if (n0 > b_max_) throw std::invalid_argument("n0 exceeds sampler b_max");
    RngStream rng(seed, replica, StreamPurpose::events);
    BlockCountPath path;
    path.n0 = n0;
    path.horizon = horizon;
    path.seed = seed;
    int b = n0;
    double t = 0.0;
    while (b > 1) {
        double x_unused;
        int k = next_event(*this, b, t, rng,
                           [&](int bb, RngStream& r) { return table_k(*this, bb, r, x_unused); });
        if (t > horizon || !std::isfinite(t)) break;
        if (k == 0) continue;
        b -= (k - 1);
        path.jump_times.push_back(t);
        path.counts.push_back(b);
    }
    return path;
}

std::vector<std::pair<double, OrderedPartition>> CoalescentSampler::sample_partition_chain(
    const OrderedPartition& initial, double horizon,
    uint64_t seed, uint64_t replica) const {
    if (!initial.valid()) throw std::invalid_argument("initial partition is invalid");
    RngStream rng(seed, replica, StreamPurpose::events);
    std::vector<std::pair<double, OrderedPartition>> out;
    OrderedPartition p = initial;
    out.emplace_back(0.0, p);
    double t = 0.0;
    while (p.block_count() > 1) {
        int b = p.block_count();
        double x_unused;
        int k = next_event(*this, b, t, rng,
                           [&](int bb, RngStream& r) { return table_k(*this, bb, r, x_unused); });
        if (t > horizon || !std::isfinite(t)) break;
        if (k == 0) continue;
        // Given K participants, the participating blocks are a uniform
        // K-subset of the current block indices.
        p.merge_blocks(sample_subset(b, k, rng));
        out.emplace_back(t, p);
    }
    return out;
}

BlockCountPath sample_block_counting(const LambdaMeasure& m, int n0, double horizon,
                                     uint64_t seed, uint64_t replica) {
    CoalescentSampler s(m, n0);
    return s.sample_block_counting(n0, horizon, seed, replica);
}

std::vector<std::pair<double, OrderedPartition>> sample_partition_chain(
    const LambdaMeasure& m, const OrderedPartition& initial, double horizon,
    uint64_t seed, uint64_t replica) {
    CoalescentSampler s(m, std::max(2, initial.n));
    return s.sample_partition_chain(initial, horizon, seed, replica);
}

} // namespace fvmod
