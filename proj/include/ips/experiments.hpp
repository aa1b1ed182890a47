#pragma once

#include "ips/couplings.hpp"
#include "ips/duals.hpp"
#include "ips/dynamics.hpp"
#include "ips/stats.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace ips
{

// ------------------------------------------------------- replica runner

/// Evaluate f(0..N-1) on `workers` threads; results come back in replica order
/// so every reduction over them is independent of the worker count.
template <class F>
auto run_replicas(std::uint64_t N, int workers, F&& f) -> std::vector<decltype(f(std::uint64_t{0}))>
{
    using R = decltype(f(std::uint64_t{0}));
    std::vector<R> out(N);
    const std::uint64_t w = std::max<std::uint64_t>(1, std::min<std::uint64_t>(workers > 0 ? workers : 1, N));
    if (w == 1)
    {
        for (std::uint64_t r = 0; r < N; ++r)
            out[r] = f(r);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(w);
    for (std::uint64_t k = 0; k < w; ++k)
        pool.emplace_back([&, k] {
            try
            {
                for (std::uint64_t r = k; r < N; r += w)
                    out[r] = f(r);
            }
            catch (...)
            {
                errors[k] = std::current_exception();
            }
        });
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

int default_workers();

/// Independent Ber(alpha) opinions.
SiteConfig bernoulli_sites(const Topology& g, double alpha, const SeedScheme& seeds, std::uint64_t replica);

// ------------------------------------------------------------- duality

enum class Model
{
    voter,
    stirring,
    vmdyn
};

std::string to_string(Model m);
Model parse_model(const std::string& s);

struct DualityReport
{
    Model model = Model::voter;
    double t = 0.0;
    Estimate lhs;
    Estimate rhs;
    bool has_exact = false;
    double lhs_exact = 0.0;
    double rhs_exact = 0.0;
    bool excluded = false; ///< boundary case where the dual weights are undefined
    std::string note;
    double pooled = 0.0;
    bool pass = false;     ///< exact: |difference| <= 1e-8; otherwise within 3 pooled SE
};

inline constexpr double kExactTolerance = 1e-8;

struct DualityQuery
{
    SiteConfig eta0;
    EdgeConfig zeta0;          ///< vmdyn only
    std::vector<Vertex> C;
    std::vector<Edge> E, F;    ///< vmdyn only
    double p = 0.5, v = 1.0;
    int R = 1;
    double t = 0.5;
    std::uint64_t N = 0;       ///< 0: exact only
    bool exact = true;         ///< run the oracle when the state space allows
    int workers = 1;
    DualMethod method = DualMethod::constructive; ///< vmdyn dual sampler
};

DualityReport duality_check_voter(const Topology& g, const DualityQuery& q, const SeedScheme& seeds);
DualityReport duality_check_stirring(const Topology& g, const DualityQuery& q, const SeedScheme& seeds);
DualityReport duality_check_vmdyn(const Topology& g, const DualityQuery& q, const SeedScheme& seeds);

// ------------------------------------------------------- correlations

struct ModelParams
{
    Model model = Model::voter;
    double p = 0.5;
    double v = 1.0;
    int R = 1;
    DualMethod method = DualMethod::constructive; ///< vmdyn dual sampler
};

struct CorrelationQuery
{
    std::vector<Vertex> C;
    std::vector<Edge> E, F;
    double alpha = 0.5;
    double t_star = 100.0;
    double bias_extension = -1.0; ///< extra time for the bias bound; < 0 means t_star
    std::uint64_t N = 1000;
    int workers = 1;
};

struct CorrelationReport
{
    Estimate estimate;
    /// Frequency of a further coalescence in (t*, t* + extension], a truncated
    /// proxy for the probability of any coalescence after t*.
    Estimate bias;
    double bias_bound = 0.0; ///< upper end of the bias interval
    std::vector<double> samples; ///< per-replica values, in replica order
};

/// Mean of alpha^{|C_t*|} (times the edge weights p^|E| (1-p)^|F| for vmdyn).
CorrelationReport estimate_mu_correlation(const Topology& g, const ModelParams& m, const CorrelationQuery& q,
                                          const SeedScheme& seeds);

/// Density of ones at the origin-like site 0 from Ber(alpha) opinions run
/// forward to time t on a finite graph (site average per replica).
Estimate forward_density(const Topology& g, const ModelParams& m, double alpha, double t, std::uint64_t N,
                         const SeedScheme& seeds, int workers = 1);

// ----------------------------------------------------------- collisions

enum class EnvMode
{
    single,
    separate
};

struct CollisionParams
{
    double p = 0.5, v = 1.0;
    int R = 1;
    int ell = 0;
    EnvMode env = EnvMode::single;
    std::uint64_t N = 1000;
    int workers = 1;
};

struct CollisionReport
{
    std::vector<double> horizons;
    std::vector<Estimate> hit; ///< P(|X_t - Y_t| <= ell for some t <= horizon)
};

/// Two random-walk flows on a dynamical percolation environment of the lattice.
CollisionReport collision_experiment(const Topology& g, const Vertex& x, const Vertex& y,
                                     const std::vector<double>& horizons, const CollisionParams& c,
                                     const SeedScheme& seeds);

struct DecayReport
{
    std::vector<int> distances;
    std::vector<Estimate> hit;
    LinearFit fit;            ///< log hit against log distance
    bool decreasing = false;  ///< strictly decreasing point estimates
    bool consistent = false;  ///< slope within 0.75 of -(d-2)
};

/// Independent continuous-time simple random walks on Z^d started at distance
/// k e_1: probability of coming within L of each other by the horizon.
DecayReport meeting_decay_check(int d, int L, const std::vector<int>& distances, double horizon, std::uint64_t N,
                                const SeedScheme& seeds, int workers = 1);

// -------------------------------------------------------- regenerations

struct RegenerationReport
{
    std::uint64_t N = 0;
    int horizon = 0;
    Estimate observed;             ///< fraction of runs with sigma_1 <= horizon
    std::vector<double> first, second; ///< (sigma_1, sigma_2 - sigma_1) from runs with sigma_2 <= horizon
    KsResult ks_gaps;              ///< first vs second inter-regeneration time
    KsResult ks_increments;        ///< first coordinate of the relative displacement
    std::vector<double> tail_t, tail_p; ///< empirical P(sigma_1 > t)
    LinearFit tail_fit;            ///< log P(sigma_1 > t) against t
    Estimate mean_attempts;        ///< S_1
};

RegenerationReport regeneration_experiment(const Topology& g, const Vertex& x, const Vertex& y, double p, double v,
                                           int R, int horizon, std::uint64_t N, const SeedScheme& seeds,
                                           int workers = 1);

// -------------------------------------------------------------- mixing

struct MixingReport
{
    std::vector<int> shifts;
    std::vector<Estimate> gap;
    Estimate left, right;        ///< the two marginal correlations
    std::vector<Estimate> joint;
    double bias_bound = 0.0;
};

/// gap(s) = |mu(A u (B + s e1), E1 u (E2 + s e1)) - mu(A, E1) mu(B, E2)| for the
/// dynamical-percolation dual, each factor estimated at t*.
MixingReport mixing_check(const Topology& g, const std::vector<Vertex>& A, const std::vector<Vertex>& B,
                          const std::vector<Edge>& E1, const std::vector<Edge>& E2, double alpha,
                          const std::vector<int>& shifts, const ModelParams& m, double t_star, std::uint64_t N,
                          const SeedScheme& seeds, int workers = 1);

struct ExchangeabilityReport
{
    std::vector<std::vector<Vertex>> shapes;
    std::vector<CorrelationReport> q;
    bool overlap = false; ///< all pairs within 3 pooled SE + 2 * bias bound
};

ExchangeabilityReport exchangeability_check(const Topology& g, const std::vector<std::vector<Vertex>>& shapes,
                                            double alpha, const ModelParams& m, double t_star, std::uint64_t N,
                                            const SeedScheme& seeds, int workers = 1);

// ---------------------------------------------------- coupling summaries

struct ContainmentSummary
{
    std::uint64_t N = 0;
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    Estimate coalesced;
};

ContainmentSummary containment_experiment(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                          std::uint64_t N, const SeedScheme& seeds, int R = 1, int workers = 1);

struct SingleSeparateSummary
{
    int distance = 0;
    Estimate breaks;  ///< P(break time <= horizon)
    Estimate g2R;     ///< occupation of proximity <= 2R
    Estimate fR;
    bool bound_holds = false; ///< breaks <= 2 g2R + 3 sigma
};

SingleSeparateSummary single_separate_experiment(const Topology& g, int distance, double p, double v, int R,
                                                 double horizon, std::uint64_t N, const SeedScheme& seeds,
                                                 int workers = 1);

struct ProximitySummary
{
    int distance = 0;
    int ell = 0;
    Estimate f;
    Estimate g;
};

ProximitySummary proximity_experiment(const Topology& g, int distance, int ell, double p, double v, int R,
                                      double horizon, std::uint64_t N, const SeedScheme& seeds, int workers = 1);

} // namespace ips
