#pragma once

#include "fvmod/measure.hpp"
#include "fvmod/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace fvmod {

// Partition of [n] with blocks ordered by least element, each block sorted.
struct OrderedPartition {
    int n = 0;
    std::vector<std::vector<int>> blocks;

    static OrderedPartition singletons(int n);
    int block_count() const { return static_cast<int>(blocks.size()); }
    bool valid() const;
    // Merge the blocks at the given (0-based) indices; the merged block
    // takes the position of the least participating block.
    void merge_blocks(const std::vector<int>& indices);
    // Drop elements > m and renumber nothing; empty blocks vanish.
    OrderedPartition restricted(int m) const;
    bool operator==(const OrderedPartition&) const = default;
};

// Jump skeleton of the block-counting process N(t).
struct BlockCountPath {
    int n0 = 0;
    double horizon = 0.0;
    uint64_t seed = 0;
    std::vector<double> jump_times;  // strictly increasing
    std::vector<int> counts;         // count after each jump; strictly decreasing

    int count_at(double t) const;
};

// First time the count is <= m; +infinity if the horizon cut the path first.
double hitting_time_Tm(const BlockCountPath& path, int m);

// Event engine shared by the block-counting chain, the partition chain and
// the lookdown: waiting times at b blocks are Exp(lambda_b); merger sizes
// follow P(K=k) = C(b,k) lambda_{b,k} / lambda_b.
//
// For the beta density the size-conditioned law factorizes as a mixture
//   sum_k w_k Beta(k-beta, b-k+beta),  w_k = C(b,k) lambda^0_{b,k},
// so K is drawn by a ratio walk over k and, when needed, x | K is an exact
// Beta variate. Density tables vanish near 0, so their x^{-2} intensity is
// finite and events are produced by thinning Binomial(b, x) proposals.
class CoalescentSampler {
public:
    CoalescentSampler(const LambdaMeasure& m, int b_max);

    const LambdaMeasure& measure() const { return measure_; }
    int b_max() const { return b_max_; }

    double lambda_total(int b) const { return arrays_.lambda_total[b]; }
    double gamma_total(int b) const { return arrays_.gamma[b]; }
    double kingman_rate(int b) const {
        return measure_.kingman_mass() * 0.5 * static_cast<double>(b) * (b - 1);
    }
    double density_rate(int b) const { return lambda_total(b) - kingman_rate(b); }

    // K >= 2 for a visible density event on b lineages (beta variant only).
    int sample_visible_k(int b, RngStream& rng) const;
    // x | K for the beta variant.
    double sample_x_given_k(int b, int k, RngStream& rng) const;

    // Uniform k-subset of {0,...,b-1}, sorted.
    static std::vector<int> sample_subset(int b, int k, RngStream& rng);

    BlockCountPath sample_block_counting(int n0, double horizon,
                                         uint64_t seed, uint64_t replica) const;

    std::vector<std::pair<double, OrderedPartition>> sample_partition_chain(
        const OrderedPartition& initial, double horizon,
        uint64_t seed, uint64_t replica) const;

    // Table-variant thinning internals, shared with the lookdown.
    struct TableProposal {
        double total_rate = 0.0;  // integral x^{-2} rho(dx)
        std::vector<double> seg_weight;
        std::vector<double> cum_weight;
    };
    bool has_table() const { return measure_.density_kind() == DensityKind::table; }
    double table_proposal_rate() const { return table_.total_rate; }
    double sample_table_x(RngStream& rng) const;

private:
    LambdaMeasure measure_;
    int b_max_;
    RateArrays arrays_;
    TableProposal table_;
};

BlockCountPath sample_block_counting(const LambdaMeasure& m, int n0, double horizon,
                                     uint64_t seed, uint64_t replica = 0);

std::vector<std::pair<double, OrderedPartition>> sample_partition_chain(
    const LambdaMeasure& m, const OrderedPartition& initial, double horizon,
    uint64_t seed, uint64_t replica = 0);

} // namespace fvmod
