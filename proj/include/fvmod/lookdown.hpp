#pragma once

#include "fvmod/coalescent.hpp"
#include "fvmod/measure.hpp"
#include "fvmod/rng.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fvmod {

// One birth event of the lookdown particle system.
//   pair(i,j), i<j : level j copies the type at level i; levels above j shift up.
//   multi(x, J)    : every level in J adopts the type of min(J); the others
//                    shift up keeping their order. |J| >= 2.
struct BirthEvent {
    double time = 0.0;
    bool is_pair = true;
    int i = 0, j = 0;               // pair levels, 1-based, i < j
    double x = 0.0;                 // multi mark in (0,1]
    std::vector<int> participants;  // multi levels, sorted, 1-based

    bool valid(int n) const;
};

// Pre-event level of the particle sitting at `level` just after the event
// (the one-step ancestor map; newborn levels map to their parent's level).
int event_ancestor_level(const BirthEvent& e, int level);

// Forward relabeling of an arbitrary per-level state vector:
// new_state[k] = old_state[ancestor(k)].
template <typename T>
std::vector<T> apply_event(const std::vector<T>& state, const BirthEvent& e) {
    if (!e.valid(static_cast<int>(state.size()))) {
        throw std::invalid_argument("malformed birth event for this level count");
    }
    std::vector<T> out(state.size());
    for (int k = 1; k <= static_cast<int>(state.size()); ++k) {
        out[k - 1] = state[event_ancestor_level(e, k) - 1];
    }
    return out;
}

struct EventLog {
    std::vector<BirthEvent> events;  // strictly increasing times
};

// Restriction of an event stream to the first n levels: participants above n
// are dropped and events with fewer than two remaining participants vanish.
// Together with the relabeling rules this realizes the projectivity of the
// lookdown construction.
EventLog restrict_events(const EventLog& log, int n);

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LookdownOptions {
    bool record_events = true;
    bool positions = true;
    uint64_t replica = 0;
    // Guard on n * |checkpoints| * d stored position components.
    double memory_budget_doubles = 2.6e8;
};

// Full record of one lookdown simulation: the event skeleton as a genealogy
// forest, plus per-checkpoint level snapshots and Brownian displacements.
// Positions are stored as displacements from the root's initial position;
// absolute positions add initial_positions back on output. Immutable once
// built.
class LookdownPath {
public:
    int n = 0;
    int d = 0;
    double horizon = 0.0;
    uint64_t seed = 0;
    uint64_t replica = 0;
    std::vector<double> checkpoints;        // sorted, within [0, horizon]
    std::vector<double> initial_positions;  // n*d, level-major
    EventLog events;                        // empty unless record_events

    struct Node {
        double birth;
        int32_t parent;      // -1 for roots
        int32_t root_level;  // 1-based level whose initial position anchors this lineage
    };
    std::vector<Node> nodes;                          // roots first, then birth order
    std::vector<std::vector<int32_t>> snapshot_node;  // [checkpoint][level-1] -> node id
    std::vector<std::vector<double>> snapshot_disp;   // [checkpoint][(level-1)*d + c]
    bool has_positions = false;

    int checkpoint_index(double t) const;  // throws on unregistered time
    bool is_checkpoint(double t) const;

    int32_t node_at(int checkpoint, int level) const {
        return snapshot_node[checkpoint][level - 1];
    }
    // First node on the parent chain born strictly before s (position X(s-)).
    int32_t ancestor_node(int32_t node, double s) const {
        while (nodes[node].parent >= 0 && nodes[node].birth >= s) node = nodes[node].parent;
        return node;
    }
    // Level occupied by `node` at a checkpoint; -1 if displaced.
    int level_of(int checkpoint, int32_t node) const;

    // Displacement components of `node` at a checkpoint (must be alive there).
    std::span<const double> disp_at(int checkpoint, int32_t node) const;

    // Absolute position of a level at a checkpoint.
    std::vector<double> position(int checkpoint, int level) const;

private:
    friend LookdownPath simulate(const LambdaMeasure&, int, int, std::vector<double>,
                                 std::vector<double>, double, uint64_t, LookdownOptions);
    friend LookdownPath load_lookdown_dir(const std::string&);
    std::vector<std::vector<int32_t>> snapshot_order_;  // levels argsorted by node id
    void build_order_index();
};

LookdownPath simulate(const LambdaMeasure& m, int n, int d,
                      std::vector<double> initial_positions,
                      std::vector<double> checkpoints, double horizon,
                      uint64_t seed, LookdownOptions opt = {});

// Weighted point set (1/m at each of the first m levels' positions).
struct WeightedCloud {
    std::vector<double> points;  // m*d
    double weight = 0.0;         // 1/m
    int m = 0;
    int d = 0;
};
WeightedCloud empirical_measure(const LookdownPath& path, double checkpoint, int m);

// events.csv + positions.csv + meta.json in a directory.
void save_lookdown_dir(const LookdownPath& path, const std::string& dir);
LookdownPath load_lookdown_dir(const std::string& dir);

} // namespace fvmod
