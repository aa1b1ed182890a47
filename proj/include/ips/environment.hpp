#pragma once

#include "ips/randomness.hpp"

#include <unordered_map>
#include <vector>

namespace ips
{

enum class InitialLaw
{
    stationary, ///< independent Ber(p)
    all_open,
    all_closed
};

/// Dynamical percolation environment materialized edge by edge on demand.
/// Every edge owns a counter-based refresh clock, so the state of an edge at
/// time t does not depend on which other edges were looked at, or when.
class Environment
{
public:
    Environment(SeedScheme seeds, double p, double v, std::uint64_t replica = 0, std::uint64_t env_id = 0,
                InitialLaw law = InitialLaw::stationary);

    /// Forget everything and switch to another replica; pins are dropped.
    void reset(std::uint64_t replica);
    /// Fix the state at time 0 (until the first refresh). Must precede any query of e.
    void pin(const Edge& e, bool open);

    bool open(const Edge& e, double t);
    /// First refresh time strictly after t.
    double next_refresh(const Edge& e, double t);
    /// Last refresh time <= t, or -infinity when the edge has not refreshed yet.
    double last_refresh(const Edge& e, double t);

    double p() const { return p_; }
    double v() const { return v_; }
    std::size_t materialized() const { return records_.size(); }

private:
    struct Record
    {
        EdgeClock clock;
        double last = 0.0; ///< last refresh at or before the cached time, -inf if none
        double next = 0.0; ///< first refresh after it; the cache is valid on [last, next)
        bool state = false;
        bool initial = false;
    };

    SeedScheme seeds_;
    double p_;
    double v_;
    std::uint64_t replica_;
    std::uint64_t env_id_;
    InitialLaw law_;
    std::unordered_map<Edge, Record, EdgeHash> records_;
    std::unordered_map<Edge, bool, EdgeHash> pins_;

    Record& record(const Edge& e);
    static void advance(Record& r, double t);
};

} // namespace ips
