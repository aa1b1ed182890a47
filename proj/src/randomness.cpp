#include "ips/randomness.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <string>

namespace ips
{

std::uint64_t SeedScheme::key(StreamTag tag, std::uint64_t entity, std::uint64_t replica) const
{
    std::uint64_t h = mix64(master_seed ^ 0x6a09e667f3bcc908ULL);
    h = mix64(h ^ (static_cast<std::uint64_t>(tag) * 0xbb67ae8584caa73bULL));
    h = mix64(h ^ entity);
    h = mix64(h ^ (replica * 0x3c6ef372fe94f82bULL + 0xa54ff53a5f1d36f1ULL));
    return h;
}

void check_probability(double p, const char* name)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError(std::string(name) + " must lie in [0,1]");
}

void check_rate(double v, const char* name)
{
    if (!(v >= 0.0) || !std::isfinite(v))
        throw DomainError(std::string(name) + " must be a finite non-negative rate");
}

// ------------------------------------------------------- instruction manual

InstructionManual::InstructionManual(CounterRng rng, int d, int R) : rng_(rng), d_(d), R_(R)
{
    if (R < 1)
        throw DomainError("range R must be at least 1");
    choices_ = ball_geometry(d, R).size() - 1;
    draw_next(0.0);
}

void InstructionManual::draw_next(double from)
{
    next_.time = from + rng_.exponential(1.0);
    next_.offset = 1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(choices_)));
}

ManualEvent InstructionManual::pop()
{
    const ManualEvent e = next_;
    draw_next(e.time);
    return e;
}

Vertex InstructionManual::displacement(const ManualEvent& e) const
{
    return ball_geometry(d_, R_).offsets[static_cast<std::size_t>(e.offset)];
}

InstructionManual make_manual(const SeedScheme& seeds, std::uint64_t walker_id, int R, int d, std::uint64_t replica,
                              std::uint64_t env_id)
{
    return InstructionManual(seeds.stream(StreamTag::manual, mix64(walker_id) ^ env_id, replica), d, R);
}

std::vector<ManualEvent> manual_events(const SeedScheme& seeds, std::uint64_t walker_id, int R, int d,
                                       double horizon, std::uint64_t replica)
{
    if (!(horizon > 0.0))
        throw DomainError("horizon must be positive");
    InstructionManual m = make_manual(seeds, walker_id, R, d, replica);
    std::vector<ManualEvent> out;
    while (m.peek().time <= horizon)
        out.push_back(m.pop());
    return out;
}

// ------------------------------------------------------------- edge clocks

EdgeClock edge_clock(const SeedScheme& seeds, const Edge& e, double p, double v, std::uint64_t replica,
                     std::uint64_t env_id)
{
    return EdgeClock{seeds.stream(StreamTag::edge, mix64(edge_key(e) + env_id * 0x9e3779b97f4a7c15ULL), replica), p,
                     v};
}

namespace
{

using Block = boost::container::small_vector<EdgeUpdate, 8>;

/// Refreshes of block j, in time order.
Block refresh_block(const EdgeClock& c, std::int64_t j)
{
    const CounterRng b(mix64(c.rng.key() ^ mix64(static_cast<std::uint64_t>(j) * 0xd1b54a32d192ed03ULL + 1)));
    // Poisson(1) count by inversion
    const double u = b.draw(0);
    std::uint64_t n = 0;
    double pk = std::exp(-1.0), cdf = pk;
    while (u >= cdf && pk > 0.0)
    {
        ++n;
        pk /= static_cast<double>(n);
        cdf += pk;
    }
    const double len = 1.0 / c.v;
    const double start = static_cast<double>(j) * len;
    Block out;
    for (std::uint64_t i = 1; i <= n; ++i)
        out.push_back(EdgeUpdate{start + len * b.draw(2 * i - 1), b.draw(2 * i) < c.p});
    std::sort(out.begin(), out.end(), [](const EdgeUpdate& a, const EdgeUpdate& z) { return a.time < z.time; });
    return out;
}

} // namespace

EdgeUpdate EdgeClock::last_at_or_before(double t) const
{
    if (v <= 0.0 || t < 0.0)
        return EdgeUpdate{-kInf, false};
    for (auto j = static_cast<std::int64_t>(std::floor(t * v)); j >= 0; --j)
    {
        const Block b = refresh_block(*this, j);
        for (auto it = b.rbegin(); it != b.rend(); ++it)
            if (it->time <= t)
                return *it;
    }
    return EdgeUpdate{-kInf, false};
}

EdgeUpdate EdgeClock::first_after(double t) const
{
    if (v <= 0.0)
        return EdgeUpdate{kInf, false};
    for (auto j = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(t * v)));; ++j)
        for (const EdgeUpdate& r : refresh_block(*this, j))
            if (r.time > t)
                return r;
}

std::vector<EdgeUpdate> edge_stream(const SeedScheme& seeds, const Edge& e, double p, double v, double horizon,
                                    std::uint64_t replica, std::uint64_t env_id)
{
    check_probability(p);
    check_rate(v);
    if (!(horizon > 0.0))
        throw DomainError("horizon must be positive");
    const EdgeClock clock = edge_clock(seeds, e, p, v, replica, env_id);
    std::vector<EdgeUpdate> out;
    for (EdgeUpdate r = clock.first_after(0.0); r.time <= horizon; r = clock.first_after(r.time))
        out.push_back(r);
    return out;
}

std::vector<QueueEvent> merged_queue(const std::vector<std::vector<QueueEvent>>& streams)
{
    MergedQueue q;
    for (const auto& s : streams)
        for (const auto& e : s)
            q.push(e);
    std::vector<QueueEvent> out;
    out.reserve(q.size());
    while (!q.empty())
        out.push_back(q.pop());
    return out;
}

} // namespace ips
