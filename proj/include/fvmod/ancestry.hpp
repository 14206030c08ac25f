#pragma once

#include "fvmod/coalescent.hpp"
#include "fvmod/lookdown.hpp"

#include <span>
#include <vector>

namespace fvmod {

// Modulus function h(x) = sqrt(x log(1/x)); nondecreasing on (0, 1/e].
double h_modulus(double x);

// ---- Exact label-map route over an event log (desk scale) ----------------

// L_i^t(s) for i = 1..max_level: compose, over events in (s, t] from latest
// to earliest, the per-event ancestor map.
std::vector<int> ancestor_levels(const EventLog& log, double t, double s, int max_level);

// Levels tabulated on a grid of backward times.
struct AncestorMap {
    double t = 0.0;
    std::vector<double> s_grid;            // sorted, each <= t
    std::vector<std::vector<int>> levels;  // [s index][i-1] = L_i^t(s)
};
AncestorMap build_ancestor_map(const EventLog& log, double t,
                               std::vector<double> s_grid, int max_level);

// Partition of [max_level] by equal ancestor level at time s, blocks ordered
// by least element; i ~ j iff L_i^t(s) = L_j^t(s).
OrderedPartition recovered_partition(const EventLog& log, double t, double s, int max_level);

// N(s,t): number of ancestors at time s of the first max_level particles at t.
int block_count(const EventLog& log, double s, double t, int max_level);

// ---- Forest route over a simulated path (scales to large n) --------------

int recovered_block_count(const LookdownPath& path, double s, double t, int levels);

// H^t(r,s): maximal dislocation between the time-r and time-s ancestors of
// the first `levels` particles alive at t. r < s <= t, all checkpoints.
double dislocation_H(const LookdownPath& path, double r, double s, double t, int levels);

// Same quantity read through the recovered blocks at time r: the ancestor of
// the ell-th block (ordered by least element) sits at level ell, so its
// position can be looked up by rank. Asserting equality with dislocation_H
// exercises that structural fact.
double dislocation_H_blockform(const LookdownPath& path, double r, double s, double t,
                               int levels);

// Maximal distance from the origin over the first `levels` positions at t.
double support_radius(const LookdownPath& path, double t, int levels);

// Every position at t lies within c*h(eps) of some position at t-eps.
bool containment_check(const LookdownPath& path, double t, double eps, double c, int levels);

// Hausdorff metric capped at 1: rho = max of the two one-sided sup-distances,
// each truncated at 1; rho(K, empty) = 1 (needs allow_empty).
double hausdorff_distance(std::span<const double> cloud_a, std::span<const double> cloud_b,
                          int dim, bool allow_empty = false);

} // namespace fvmod
