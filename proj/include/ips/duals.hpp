#pragma once

#include "ips/environment.hpp"
#include "ips/lattice.hpp"
#include "ips/randomness.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ips
{

/// Union-find over walker labels; the smallest label of a block survives.
class WalkerSystem
{
public:
    explicit WalkerSystem(std::size_t n = 0);
    std::size_t size() const { return parent_.size(); }
    std::size_t find(std::size_t i) const;
    /// Merge the blocks of a and b; returns the surviving (smallest) label.
    std::size_t merge(std::size_t a, std::size_t b);
    bool alive(std::size_t i) const { return find(i) == i; }
    std::size_t live_count() const;

private:
    mutable std::vector<std::size_t> parent_;
};

struct CoalescingResult
{
    std::vector<Vertex> positions;  ///< last position of every label
    std::vector<char> alive;
    std::vector<double> death_time; ///< kInf for survivors
    std::vector<std::size_t> absorbed_by;
    double first_coalescence = kInf;
    std::vector<double> snapshot_times;
    std::vector<std::size_t> snapshot_counts; ///< |A_t| at each snapshot time

    std::size_t live_count() const;
    std::vector<Vertex> live_set() const;
};

/// Coalescing random walks: each walker jumps at rate 1 to a uniform neighbor
/// (R = 1) or to a uniform vertex of its range-R ball (R > 1).
CoalescingResult simulate_coalescing(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                     const SeedScheme& seeds, std::uint64_t replica = 0, int R = 1,
                                     const std::vector<double>& snapshots = {});

struct WalkerJump
{
    double time = 0.0;
    std::size_t label = 0;
    bool was_alive = false;
    std::size_t merged_into = static_cast<std::size_t>(-1); ///< set when this jump caused a coalescence
};

/// Labelled version: walker i always follows its own stream, so the dead labels
/// (moved only with `move_dead`) trace the independent walkers of the
/// natural coupling. The observer sees every jump after it is applied.
CoalescingResult simulate_labelled_walkers(
    const Topology& g, const std::vector<Vertex>& start, double horizon, const SeedScheme& seeds,
    std::uint64_t replica, int R, bool move_dead,
    const std::function<void(const WalkerJump&, const std::vector<Vertex>&, const WalkerSystem&)>& observer = {},
    const std::vector<double>& snapshots = {});

/// Dual of voter + stirring on a regular graph: walkers jump at rate 1+v to a
/// uniform neighbor; onto an occupied site they coalesce with probability
/// 1/(1+v) and otherwise exchange places.
CoalescingResult simulate_coalescing_stirring(const Topology& g, const std::vector<Vertex>& start, double v,
                                              double horizon, const SeedScheme& seeds, std::uint64_t replica = 0,
                                              const std::vector<double>& snapshots = {});

// ------------------------------------------------------------ knowledge

struct KnowledgeEntry
{
    Edge edge;
    std::uint64_t key = 0;
    bool open = false;
    double expiry = 0.0; ///< first refresh after the reveal
};

/// Revealed edges: E (open) and F (closed), each kept until its next refresh.
class RevealedKnowledge
{
public:
    void reveal(const Edge& e, bool open, double expiry);
    /// Drop the edges whose refresh time is <= t.
    void prune(double t);
    void forget(const Edge& e);
    void clear() { entries_.clear(); }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const KnowledgeEntry* find(const Edge& e) const;
    std::vector<Edge> open_edges() const;
    std::vector<Edge> closed_edges() const;
    double max_expiry() const;
    const std::vector<KnowledgeEntry>& entries() const { return entries_; }

private:
    std::vector<KnowledgeEntry> entries_;
};

// --------------------------------------------------------- walker flows

struct AttemptOutcome
{
    double time = 0.0;
    Vertex from;
    Vertex target;
    bool valid = false; ///< target inside the graph
    bool moved = false;
};

enum class Reveal
{
    none,   ///< look only at what the move needs
    expiry, ///< look at the whole ball, keep only the latest refresh time
    full    ///< look at the whole ball and record every edge
};

/// One flow step from `pos` at manual event `ev`: the walker moves to pos+offset
/// when the two are joined by open edges of the ball around pos at that time.
AttemptOutcome attempt_move(const Topology& g, Environment& env, const Vertex& pos, const ManualEvent& ev, int R,
                            Reveal mode, RevealedKnowledge* knowledge = nullptr, double* max_expiry = nullptr);

/// Walker following the random-walk flow of an instruction manual.
struct FlowWalker
{
    Vertex pos;
    InstructionManual manual;
    Environment* env = nullptr;
    RevealedKnowledge knowledge;
    double max_expiry = 0.0; ///< latest refresh time over everything ever revealed
    std::uint64_t attempts = 0;
};

/// Execute the next manual event of w (moving it when allowed).
AttemptOutcome flow_attempt(const Topology& g, FlowWalker& w, Reveal mode);

struct FlowPath
{
    std::vector<double> times;     ///< jump times
    std::vector<Vertex> positions; ///< positions[0] = start, positions[i+1] after times[i]
    std::uint64_t attempts = 0;
};

/// Trajectory of the flow started at x; the manual is consumed.
FlowPath rw_flow(const Topology& g, Environment& env, InstructionManual& manual, const Vertex& x, double horizon);

struct WalkersSnapshot
{
    double time = 0.0;
    std::vector<Vertex> positions;
    std::vector<RevealedKnowledge> knowledge;
};

struct WalkersRecord
{
    std::vector<Vertex> positions;
    std::vector<RevealedKnowledge> knowledge;
    std::vector<WalkersSnapshot> snapshots;
    std::uint64_t attempts = 0;
};

/// k non-interacting flows in one shared environment (stationary start).
WalkersRecord simulate_walkers_single_env(const Topology& g, const std::vector<Vertex>& start, double p, double v,
                                          int R, double horizon, const SeedScheme& seeds, std::uint64_t replica = 0,
                                          const std::vector<double>& snapshots = {});

// ----------------------------------------------------------- dual chain

struct DualChainState
{
    std::vector<Vertex> C; ///< sorted
    std::vector<Edge> A;   ///< revealed open, sorted
    std::vector<Edge> B;   ///< revealed closed, sorted

    std::string key() const;
};

enum class DualMethod
{
    constructive,
    gillespie
};

struct DualChainResult
{
    DualChainState final_state;
    std::vector<double> snapshot_times;
    std::vector<DualChainState> snapshots;
    std::uint64_t events = 0;
};

void check_dual_start(const Topology& g, const std::vector<Vertex>& C, const std::vector<Edge>& E,
                      const std::vector<Edge>& F);

/// Coalescing walkers on dynamical percolation together with the pooled
/// revealed knowledge. `constructive` runs walker flows in one environment
/// pinned to E open and F closed; `gillespie` samples the transition table.
DualChainResult simulate_dual_chain(const Topology& g, const std::vector<Vertex>& C, const std::vector<Edge>& E,
                                    const std::vector<Edge>& F, double p, double v, int R, double horizon,
                                    const SeedScheme& seeds, std::uint64_t replica = 0,
                                    DualMethod method = DualMethod::constructive,
                                    const std::vector<double>& snapshots = {});

inline constexpr int kMaxEnumeratedEdges = 20;

struct ConnectionRate
{
    double value = 0.0;
    double se = 0.0;
    bool exact = true;
};

/// Probability that x reaches y through open edges of the ball around x when
/// E is open, F closed and the remaining ball edges are Ber(p).
ConnectionRate connection_rate(const Topology& g, const Vertex& x, const Vertex& y, const std::vector<Edge>& E,
                               const std::vector<Edge>& F, double p, int R, std::uint64_t mc_samples = 0,
                               const SeedScheme& seeds = {}, std::uint64_t replica = 0);

// -------------------------------------------------------- regenerations

/// Two walkers in separate environments observed at integer times.
struct SeparatePairRecord
{
    std::vector<Vertex> X;          ///< X[m] = position at time m
    std::vector<Vertex> Y;
    std::vector<char> empty;        ///< pooled knowledge empty at time m
    std::vector<std::uint32_t> J1;  ///< attempts of walker 1 in (m-1, m], J1[0] = 0
    std::vector<std::uint32_t> J2;
    double tau0 = 0.0;              ///< first time the pooled knowledge is empty
};

/// `shared_env` puts both walkers in one environment instead of two.
SeparatePairRecord simulate_separate_pair(const Topology& g, const Vertex& x, const Vertex& y, double p, double v,
                                          int R, int horizon, const SeedScheme& seeds, std::uint64_t replica = 0,
                                          bool shared_env = false);

struct RegenerationRecord
{
    std::vector<int> sigma;      ///< sigma_0 = 0, sigma_1, ...
    std::vector<Vertex> dX;      ///< X_{sigma_n} - X_{sigma_{n-1}}
    std::vector<Vertex> dY;
    std::vector<std::uint64_t> S; ///< attempts of both walkers in (sigma_{n-1}, sigma_n]
};

/// Integer times m > previous at which both revealed sets are empty.
/// With `continuous_start` the first point is the continuous time tau0 rounded
/// up, as in the single-environment variant.
RegenerationRecord detect_regenerations(const SeparatePairRecord& rec, bool continuous_start = false);

std::string regenerations_csv(const RegenerationRecord& r);

// ---------------------------------------------------------------- trees

struct TreeMeasure
{
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double truncation_bias = 0.0; ///< mean probability of a later return to the root
    std::uint64_t N = 0;
};

/// Probability that a rate-1 walk on the regular tree started at x ends up
/// staying in the union of the root branches listed in `branches`
/// (all branches means the whole tree).
TreeMeasure tree_branch_measure(const Topology& tree, const TreePath& x, const std::vector<int>& branches,
                                double horizon, std::uint64_t N, const SeedScheme& seeds);

} // namespace ips
