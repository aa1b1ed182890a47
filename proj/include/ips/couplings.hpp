#pragma once

#include "ips/duals.hpp"
#include "ips/stats.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ips
{

/// Number of edges with both endpoints in the set.
int phi_edge_count(const Topology& g, const std::vector<Vertex>& set);

// ------------------------------------------- coalescing vs independent

struct ContainmentResult
{
    bool coalesced = false;          ///< some coalescence by the horizon
    double first_coalescence = kInf;
    std::uint64_t checks = 0;        ///< event times at which containment was checked
    std::uint64_t violations = 0;
};

/// Coalescing and independent walkers driven by the same per-walker streams,
/// run as two separate systems and compared at every event time.
ContainmentResult couple_coalescing_independent(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                                const SeedScheme& seeds, std::uint64_t replica = 0, int R = 1);

/// Probability that some coalescence happens by the horizon.
Estimate estimate_g(const Topology& g, const std::vector<Vertex>& start, double horizon, std::uint64_t N,
                    const SeedScheme& seeds);

// ------------------------------------------------------ martingale check

using SetState = std::vector<Vertex>;
using RateTable = std::function<std::vector<std::pair<SetState, double>>(const SetState&)>;

/// Rates of coalescing walkers with stirring as a set-valued chain.
RateTable stirring_set_rates(const Topology& g, double v);
/// Rates of independent rate-(1+v) walkers seen as a set; a jump onto an
/// occupied site collapses the set. `with_collisions = false` drops those jumps.
RateTable independent_set_rates(const Topology& g, double v, bool with_collisions = true);

struct IdentityReport
{
    Estimate lhs;  ///< P(tau <= T)
    Estimate rhs;  ///< E int_0^{tau ^ T} mismatch mass
    Estimate alt;  ///< E int_0^{tau ^ T} of the optional alternative integrand
    double pooled = 0.0;
    double z = 0.0;
    bool within = false; ///< |lhs - rhs| <= 3 pooled SE
    double alt_z = 0.0;
    bool alt_within = false;
};

/// Run the basic coupling of the chains with rates r1 and r2 from a0 up to the
/// decoupling time tau and compare P(tau <= T) with the integrated mismatch
/// mass sum_b (r1 + r2)(a, b) 1{r1(a, b) != r2(a, b)}. `alternative`, when
/// given, is integrated along the same paths and compared as well.
IdentityReport martingale_identity_check(const RateTable& r1, const RateTable& r2, const SetState& a0, double T,
                                         std::uint64_t N, const SeedScheme& seeds,
                                         const std::function<double(const SetState&)>& alternative = {});

// -------------------------------------------- single vs separate environments

/// Proximity of the separate-environment pair: min(|X - Y|, dist(X, K2), dist(Y, K1)),
/// where K_i are the edges walker i currently knows.
struct ProximityStats
{
    std::vector<int> ells;
    std::vector<char> hit;          ///< proximity <= ell at some time <= horizon
    std::vector<double> occupation; ///< time spent with proximity <= ell
};

struct SingleSeparateResult
{
    double tau_B = kInf;       ///< first time the separate chain is within R
    double break_time = kInf;  ///< first time the two chains differ
    ProximityStats proximity;  ///< for ell = R and 2R
};

ProximityStats separate_proximity(const Topology& g, const Vertex& x, const Vertex& y, const std::vector<int>& ells,
                                  double p, double v, int R, double horizon, const SeedScheme& seeds,
                                  std::uint64_t replica = 0);

/// Separate chain Z and single-environment chain W sharing every move until Z
/// comes within R (the disagreement set); afterwards they evolve independently.
/// With `marginal_out`, the final state of W is reported for marginal checks.
struct PairState
{
    Vertex X, Y;
    std::vector<Edge> A1, B1, A2, B2;
};

SingleSeparateResult couple_single_separate(const Topology& g, const Vertex& x, const Vertex& y, double p, double v,
                                            int R, double horizon, const SeedScheme& seeds, std::uint64_t replica = 0,
                                            PairState* w_final = nullptr);

/// Final state of the single-environment two-walker chain run on its own.
PairState single_env_pair(const Topology& g, const Vertex& x, const Vertex& y, double p, double v, int R,
                          double horizon, const SeedScheme& seeds, std::uint64_t replica = 0);

struct FunctionalReport
{
    std::string functional;
    Estimate estimate;
    std::uint64_t N = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
};

FunctionalReport estimate_f_ell(const Topology& g, const Vertex& x, const Vertex& y, int ell, double p, double v,
                                int R, double horizon, std::uint64_t N, const SeedScheme& seeds);
FunctionalReport estimate_g_ell(const Topology& g, const Vertex& x, const Vertex& y, int ell, double p, double v,
                                int R, double horizon, std::uint64_t N, const SeedScheme& seeds);

} // namespace ips
