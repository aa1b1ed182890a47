#pragma once

#include "ips/lattice.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace ips
{

/// Stream families. Values are part of the seeding contract; do not renumber.
enum class StreamTag : std::uint64_t
{
    site = 1,
    edge = 2,
    manual = 3,
    walker = 4,
    replica = 5,
    sampler = 6,
    environment = 7,
    swap = 8,
};

/// Counter-based generator: draw i is mix64(key + (i+1) * gamma), so any draw
/// can be recomputed from the key alone.
class CounterRng
{
public:
    CounterRng() = default;
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() { return draw_u64(counter_++); }
    /// Uniform on [0,1).
    double uniform() { return to_unit(next_u64()); }
    double exponential(double rate) { return exponential_from(uniform(), rate); }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform on {0,...,n-1}.
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

    std::uint64_t draw_u64(std::uint64_t i) const { return mix64(key_ + (i + 1) * 0x9e3779b97f4a7c15ULL); }
    double draw(std::uint64_t i) const { return to_unit(draw_u64(i)); }

    static double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }
    static double exponential_from(double u, double rate)
    {
        if (rate <= 0.0)
            return std::numeric_limits<double>::infinity();
        return -std::log1p(-u) / rate;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// (master seed, stream tag, entity id, replica) -> independent substream.
struct SeedScheme
{
    std::uint64_t master_seed = 0;

    std::uint64_t key(StreamTag tag, std::uint64_t entity, std::uint64_t replica) const;
    CounterRng stream(StreamTag tag, std::uint64_t entity, std::uint64_t replica) const
    {
        return CounterRng(key(tag, entity, replica));
    }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Jump attempt of a walker: Poisson(1) time and a uniform nonzero offset of B(0,R).
struct ManualEvent
{
    double time = 0.0;
    int offset = 0; ///< index into ball_geometry(d, R).offsets, never 0
};

/// Streaming instruction manual; events come out in time order and extending
/// the horizon never changes earlier events.
class InstructionManual
{
public:
    InstructionManual() = default;
    InstructionManual(CounterRng rng, int d, int R);

    int dim() const { return d_; }
    int radius() const { return R_; }
    const ManualEvent& peek() const { return next_; }
    ManualEvent pop();
    Vertex displacement(const ManualEvent& e) const;

private:
    CounterRng rng_;
    int d_ = 1;
    int R_ = 1;
    int choices_ = 0;
    ManualEvent next_;
    void draw_next(double from);
};

InstructionManual make_manual(const SeedScheme& seeds, std::uint64_t walker_id, int R, int d, std::uint64_t replica,
                              std::uint64_t env_id = 0);

/// All manual events with time <= horizon.
std::vector<ManualEvent> manual_events(const SeedScheme& seeds, std::uint64_t walker_id, int R, int d,
                                       double horizon, std::uint64_t replica = 0);

struct EdgeUpdate
{
    double time = 0.0;
    bool mark = false;
};

/// Refresh clock of one edge. Draw 0 is the stationary initial state. Time is
/// cut into blocks of length 1/v; block j holds a Poisson(1) number of refreshes
/// at uniform positions, each with a Ber(p) mark, drawn from its own substream.
/// The state at any time is then available without replaying the past.
struct EdgeClock
{
    CounterRng rng;
    double p = 0.5;
    double v = 1.0;

    bool stationary_initial() const { return rng.draw(0) < p; }
    /// Last refresh at or before t; time is -infinity when there is none.
    EdgeUpdate last_at_or_before(double t) const;
    /// First refresh strictly after t; time is +infinity when v = 0.
    EdgeUpdate first_after(double t) const;
};

EdgeClock edge_clock(const SeedScheme& seeds, const Edge& e, double p, double v, std::uint64_t replica,
                     std::uint64_t env_id = 0);

/// Refresh events of one edge up to the horizon.
std::vector<EdgeUpdate> edge_stream(const SeedScheme& seeds, const Edge& e, double p, double v, double horizon,
                                    std::uint64_t replica = 0, std::uint64_t env_id = 0);

void check_probability(double p, const char* name = "p");
void check_rate(double v, const char* name = "v");

/// Timed event with the deterministic tie rule (time, tag, id).
struct QueueEvent
{
    double time = 0.0;
    int tag = 0;
    std::uint64_t id = 0;
};

struct QueueLater
{
    bool operator()(const QueueEvent& a, const QueueEvent& b) const
    {
        if (a.time != b.time)
            return a.time > b.time;
        if (a.tag != b.tag)
            return a.tag > b.tag;
        return a.id > b.id;
    }
};

/// Merge of per-entity event streams, popped in (time, tag, id) order.
class MergedQueue
{
public:
    void push(const QueueEvent& e)
    {
        if (std::isfinite(e.time))
            heap_.push(e);
    }
    bool empty() const { return heap_.empty(); }
    const QueueEvent& top() const { return heap_.top(); }
    QueueEvent pop()
    {
        QueueEvent e = heap_.top();
        heap_.pop();
        return e;
    }
    std::size_t size() const { return heap_.size(); }

private:
    std::priority_queue<QueueEvent, std::vector<QueueEvent>, QueueLater> heap_;
};

/// Merge already generated streams into one ordered list.
std::vector<QueueEvent> merged_queue(const std::vector<std::vector<QueueEvent>>& streams);

} // namespace ips
