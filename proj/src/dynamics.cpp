#include "ips/dynamics.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace ips
{

namespace
{

constexpr int kSiteTag = 0;
constexpr int kEdgeTag = 1;

/// Index tables of a finite topology.
struct FiniteGraph
{
    std::vector<Vertex> verts;
    std::vector<std::vector<std::size_t>> nbrs;
    std::vector<Edge> edges;
    std::unordered_map<Edge, std::size_t, EdgeHash> edge_index;
    std::vector<std::pair<std::size_t, std::size_t>> edge_ends;

    explicit FiniteGraph(const Topology& g)
    {
        if (!g.finite() || g.kind() == TopologyKind::tree)
            throw UnsupportedTopology("forward dynamics need a finite coordinate topology, got " + g.describe());
        verts = g.vertices();
        nbrs.resize(verts.size());
        for (std::size_t i = 0; i < verts.size(); ++i)
            for (const Vertex& w : neighbors(g, verts[i]))
                nbrs[i].push_back(g.index_of(w));
        edges = g.edges();
        for (std::size_t k = 0; k < edges.size(); ++k)
        {
            edge_index.emplace(edges[k], k);
            edge_ends.emplace_back(g.index_of(edges[k].lo), g.index_of(edges[k].hi));
        }
    }
};

/// Per-site view of the range-R ball: target site per offset and global edge per local edge.
struct BallTables
{
    const BallGeometry* geo = nullptr;
    std::vector<std::vector<int>> target;
    std::vector<std::vector<int>> edge;

    BallTables(const Topology& g, const FiniteGraph& fg, int R)
    {
        geo = &ball_geometry(g.dim(), R);
        target.resize(fg.verts.size());
        edge.resize(fg.verts.size());
        for (std::size_t x = 0; x < fg.verts.size(); ++x)
        {
            for (const Vertex& z : geo->offsets)
            {
                auto w = g.translate(fg.verts[x], z);
                target[x].push_back(w ? static_cast<int>(g.index_of(*w)) : -1);
            }
            for (std::size_t k = 0; k < geo->edges.size(); ++k)
            {
                const auto [i, j] = geo->edges[k];
                if (target[x][static_cast<std::size_t>(i)] < 0 || target[x][static_cast<std::size_t>(j)] < 0)
                {
                    edge[x].push_back(-1);
                    continue;
                }
                const Edge e = make_edge(fg.verts[static_cast<std::size_t>(target[x][static_cast<std::size_t>(i)])],
                                         fg.verts[static_cast<std::size_t>(target[x][static_cast<std::size_t>(j)])]);
                edge[x].push_back(static_cast<int>(fg.edge_index.at(e)));
            }
        }
    }
};

const FiniteGraph& finite_graph(const Topology& g)
{
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<FiniteGraph>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[g.describe()];
    if (!slot)
        slot = std::make_unique<FiniteGraph>(g);
    return *slot;
}

const BallTables& ball_tables(const Topology& g, int R)
{
    const FiniteGraph& fg = finite_graph(g);
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<BallTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[g.describe() + "/R=" + std::to_string(R)];
    if (!slot)
        slot = std::make_unique<BallTables>(g, fg, R);
    return *slot;
}

void check_sites(const Topology& g, const SiteConfig& eta)
{
    if (eta.size() != g.vertex_count())
        throw DomainError("site configuration has " + std::to_string(eta.size()) + " entries, topology has " +
                          std::to_string(g.vertex_count()) + " vertices");
    for (auto c : eta)
        if (c > 1)
            throw DomainError("opinions must be 0 or 1");
}

void check_edges(const FiniteGraph& fg, const EdgeConfig& zeta)
{
    if (zeta.size() != fg.edges.size())
        throw DomainError("edge configuration has " + std::to_string(zeta.size()) + " entries, topology has " +
                          std::to_string(fg.edges.size()) + " edges");
    for (auto c : zeta)
        if (c > 1)
            throw DomainError("edge states must be 0 or 1");
}

void check_horizon(const SimOptions& opt)
{
    if (!(opt.horizon > 0.0) || !std::isfinite(opt.horizon))
        throw DomainError("horizon must be positive and finite");
    if (!std::is_sorted(opt.snapshot_times.begin(), opt.snapshot_times.end()))
        throw DomainError("snapshot times must be sorted");
}

/// Bookkeeping shared by all forward simulators.
class Recorder
{
public:
    Recorder(const SimOptions& opt, JointState init, bool keep_edges)
        : opt_(opt), keep_edges_(keep_edges)
    {
        traj_.final_state = std::move(init);
        ones_ = static_cast<std::size_t>(
            std::count(traj_.final_state.eta.begin(), traj_.final_state.eta.end(), std::uint8_t{1}));
        if (consensus())
            traj_.consensus_time = 0.0;
    }

    JointState& state() { return traj_.final_state; }

    bool consensus() const
    {
        return !traj_.final_state.eta.empty() && (ones_ == 0 || ones_ == traj_.final_state.eta.size());
    }

    bool done() const { return opt_.stop_at_consensus && consensus(); }

    /// Take the snapshots that lie before an event at time t.
    void before(double t)
    {
        while (snap_ < opt_.snapshot_times.size() && opt_.snapshot_times[snap_] < t)
            take(opt_.snapshot_times[snap_++]);
    }

    void set_site(std::size_t x, std::uint8_t value, double t)
    {
        auto& eta = traj_.final_state.eta;
        if (eta[x] == value)
            return;
        ones_ = value ? ones_ + 1 : ones_ - 1;
        eta[x] = value;
        if (consensus() && traj_.consensus_time == kInf)
            traj_.consensus_time = t;
    }

    void emit(const DynEvent& e)
    {
        ++traj_.events;
        if (opt_.observer)
            opt_.observer(e, traj_.final_state);
    }

    Trajectory finish(double end)
    {
        while (snap_ < opt_.snapshot_times.size() && opt_.snapshot_times[snap_] <= opt_.horizon)
            take(opt_.snapshot_times[snap_++]);
        traj_.end_time = end;
        return std::move(traj_);
    }

private:
    const SimOptions& opt_;
    bool keep_edges_;
    Trajectory traj_;
    std::size_t snap_ = 0;
    std::size_t ones_ = 0;

    void take(double s)
    {
        traj_.times.push_back(s);
        traj_.sites.push_back(traj_.final_state.eta);
        if (keep_edges_)
            traj_.edges.push_back(traj_.final_state.zeta);
    }
};

/// Rate-1 site clock with a uniform choice among `choices` per ring.
struct SiteClock
{
    CounterRng rng;
    double next = 0.0;
    std::uint64_t choices = 1;
};

std::vector<SiteClock> site_clocks(const FiniteGraph& fg, const SeedScheme& seeds, std::uint64_t replica,
                                   const std::vector<std::uint64_t>& choices, MergedQueue& q)
{
    std::vector<SiteClock> clocks(fg.verts.size());
    for (std::size_t x = 0; x < fg.verts.size(); ++x)
    {
        clocks[x].rng = seeds.stream(StreamTag::site, vertex_key(fg.verts[x]), replica);
        clocks[x].choices = choices[x];
        clocks[x].next = clocks[x].rng.exponential(1.0);
        q.push(QueueEvent{clocks[x].next, kSiteTag, x});
    }
    return clocks;
}

/// Pop a site ring: returns the uniform choice and reschedules the clock.
std::uint64_t ring(SiteClock& c, std::size_t x, MergedQueue& q)
{
    const std::uint64_t choice = c.choices ? c.rng.below(c.choices) : 0;
    c.next += c.rng.exponential(1.0);
    q.push(QueueEvent{c.next, kSiteTag, x});
    return choice;
}

struct RefreshClock
{
    EdgeClock clock;
    EdgeUpdate next;
};

std::vector<RefreshClock> refresh_clocks(const FiniteGraph& fg, double p, double v, const SeedScheme& seeds,
                                         std::uint64_t replica, MergedQueue& q)
{
    std::vector<RefreshClock> clocks(fg.edges.size());
    for (std::size_t e = 0; e < fg.edges.size(); ++e)
    {
        clocks[e].clock = edge_clock(seeds, fg.edges[e], p, v, replica);
        clocks[e].next = clocks[e].clock.first_after(0.0);
        q.push(QueueEvent{clocks[e].next.time, kEdgeTag, e});
    }
    return clocks;
}

/// Apply the refresh popped from the queue; returns the new mark.
bool refresh(RefreshClock& c, std::size_t e, MergedQueue& q)
{
    const bool mark = c.next.mark;
    c.next = c.clock.first_after(c.next.time);
    q.push(QueueEvent{c.next.time, kEdgeTag, e});
    return mark;
}

} // namespace

void check_ball_geometry(const Topology& g, int R)
{
    if (R < 1)
        throw DomainError("range R must be at least 1");
    if (!g.has_balls())
        throw UnsupportedTopology("range-R dynamics need l1 balls; not available on " + g.describe());
    if (g.kind() == TopologyKind::torus && g.side() <= 2 * R + 1)
        throw DomainError("ball geometry constraint violated: torus side " + std::to_string(g.side()) +
                          " must exceed 2R+1 = " + std::to_string(2 * R + 1));
}

SiteConfig constant_sites(const Topology& g, std::uint8_t value)
{
    return SiteConfig(g.vertex_count(), value);
}

EdgeConfig constant_edges(const Topology& g, std::uint8_t value)
{
    return EdgeConfig(g.edges().size(), value);
}

EdgeConfig stationary_edges(const Topology& g, double p, const SeedScheme& seeds, std::uint64_t replica)
{
    check_probability(p);
    const std::vector<Edge> edges = g.edges();
    EdgeConfig z(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
        z[e] = edge_clock(seeds, edges[e], p, 0.0, replica).stationary_initial() ? 1 : 0;
    return z;
}

Trajectory simulate_voter(const Topology& g, const SiteConfig& eta0, int R, const SimOptions& opt,
                          const SeedScheme& seeds, std::uint64_t replica)
{
    check_horizon(opt);
    if (R != 1)
        check_ball_geometry(g, R);
    const FiniteGraph& fg = finite_graph(g);
    check_sites(g, eta0);
    const BallTables* balls = nullptr;
    std::vector<std::uint64_t> choices(fg.verts.size());
    if (R == 1)
        for (std::size_t x = 0; x < fg.verts.size(); ++x)
            choices[x] = fg.nbrs[x].size();
    else
    {
        balls = &ball_tables(g, R);
        std::fill(choices.begin(), choices.end(), static_cast<std::uint64_t>(balls->geo->size() - 1));
    }

    Recorder rec(opt, JointState{eta0, {}}, false);
    MergedQueue q;
    auto clocks = site_clocks(fg, seeds, replica, choices, q);
    double t = 0.0;
    while (!q.empty() && q.top().time <= opt.horizon && !rec.done())
    {
        const QueueEvent ev = q.pop();
        t = ev.time;
        rec.before(t);
        const std::size_t x = ev.id;
        const std::uint64_t c = ring(clocks[x], x, q);
        long y = -1;
        if (R == 1)
            y = fg.nbrs[x].empty() ? -1 : static_cast<long>(fg.nbrs[x][c]);
        else
            y = balls->target[x][c + 1];
        DynEvent de{t, EventKind::copy, x, y < 0 ? x : static_cast<std::size_t>(y), y >= 0};
        if (y >= 0)
            rec.set_site(x, rec.state().eta[static_cast<std::size_t>(y)], t);
        rec.emit(de);
    }
    return rec.finish(rec.done() ? t : opt.horizon);
}

Trajectory simulate_stirring(const Topology& g, const SiteConfig& eta0, double v, const SimOptions& opt,
                             const SeedScheme& seeds, std::uint64_t replica)
{
    check_horizon(opt);
    check_rate(v);
    if (g.kind() != TopologyKind::torus)
        throw UnsupportedTopology("stirring needs a regular finite graph (torus), got " + g.describe());
    const FiniteGraph& fg = finite_graph(g);
    check_sites(g, eta0);
    const double deg = g.regular_degree();
    std::vector<std::uint64_t> choices(fg.verts.size(), static_cast<std::uint64_t>(deg));

    Recorder rec(opt, JointState{eta0, {}}, false);
    MergedQueue q;
    auto clocks = site_clocks(fg, seeds, replica, choices, q);
    std::vector<CounterRng> swaps(fg.edges.size());
    std::vector<double> swap_next(fg.edges.size());
    for (std::size_t e = 0; e < fg.edges.size(); ++e)
    {
        swaps[e] = seeds.stream(StreamTag::swap, edge_key(fg.edges[e]), replica);
        swap_next[e] = swaps[e].exponential(v / deg);
        q.push(QueueEvent{swap_next[e], kEdgeTag, e});
    }
    double t = 0.0;
    while (!q.empty() && q.top().time <= opt.horizon && !rec.done())
    {
        const QueueEvent ev = q.pop();
        t = ev.time;
        rec.before(t);
        if (ev.tag == kSiteTag)
        {
            const std::size_t x = ev.id;
            const std::size_t y = fg.nbrs[x][ring(clocks[x], x, q)];
            rec.set_site(x, rec.state().eta[y], t);
            rec.emit(DynEvent{t, EventKind::copy, x, y, true});
        }
        else
        {
            const std::size_t e = ev.id;
            swap_next[e] += swaps[e].exponential(v / deg);
            q.push(QueueEvent{swap_next[e], kEdgeTag, e});
            auto& eta = rec.state().eta;
            std::swap(eta[fg.edge_ends[e].first], eta[fg.edge_ends[e].second]);
            rec.emit(DynEvent{t, EventKind::swap, e, e, true});
        }
    }
    return rec.finish(rec.done() ? t : opt.horizon);
}

Trajectory simulate_dynperc(const Topology& g, const EdgeConfig& zeta0, double p, double v, const SimOptions& opt,
                            const SeedScheme& seeds, std::uint64_t replica)
{
    check_horizon(opt);
    check_probability(p);
    check_rate(v);
    const FiniteGraph& fg = finite_graph(g);
    check_edges(fg, zeta0);
    SimOptions o = opt;
    o.stop_at_consensus = false;
    Recorder rec(o, JointState{{}, zeta0}, true);
    MergedQueue q;
    auto clocks = refresh_clocks(fg, p, v, seeds, replica, q);
    while (!q.empty() && q.top().time <= opt.horizon)
    {
        const QueueEvent ev = q.pop();
        rec.before(ev.time);
        const bool mark = refresh(clocks[ev.id], ev.id, q);
        rec.state().zeta[ev.id] = mark ? 1 : 0;
        rec.emit(DynEvent{ev.time, EventKind::refresh, ev.id, ev.id, mark});
    }
    return rec.finish(opt.horizon);
}

Trajectory simulate_vmdyn(const Topology& g, const JointState& init, double p, double v, int R,
                          const SimOptions& opt, const SeedScheme& seeds, std::uint64_t replica)
{
    check_horizon(opt);
    check_probability(p);
    check_rate(v);
    check_ball_geometry(g, R);
    const FiniteGraph& fg = finite_graph(g);
    check_sites(g, init.eta);
    check_edges(fg, init.zeta);
    const BallTables& balls = ball_tables(g, R);
    std::vector<std::uint64_t> choices(fg.verts.size(), static_cast<std::uint64_t>(balls.geo->size() - 1));

    Recorder rec(opt, init, true);
    MergedQueue q;
    auto sclocks = site_clocks(fg, seeds, replica, choices, q);
    auto eclocks = refresh_clocks(fg, p, v, seeds, replica, q);
    double t = 0.0;
    while (!q.empty() && q.top().time <= opt.horizon && !rec.done())
    {
        const QueueEvent ev = q.pop();
        t = ev.time;
        rec.before(t);
        if (ev.tag == kEdgeTag)
        {
            const bool mark = refresh(eclocks[ev.id], ev.id, q);
            rec.state().zeta[ev.id] = mark ? 1 : 0;
            rec.emit(DynEvent{t, EventKind::refresh, ev.id, ev.id, mark});
            continue;
        }
        const std::size_t x = ev.id;
        const int k = static_cast<int>(ring(sclocks[x], x, q)) + 1;
        const int y = balls.target[x][static_cast<std::size_t>(k)];
        bool ok = false;
        if (y >= 0)
        {
            const auto& tgt = balls.target[x];
            const auto& led = balls.edge[x];
            const auto& zeta = rec.state().zeta;
            ok = local_connected(
                *balls.geo, k, [&](int i) { return tgt[static_cast<std::size_t>(i)] >= 0; },
                [&](int j) { return zeta[static_cast<std::size_t>(led[static_cast<std::size_t>(j)])] != 0; });
            if (ok)
                rec.set_site(x, rec.state().eta[static_cast<std::size_t>(y)], t);
        }
        rec.emit(DynEvent{t, EventKind::copy, x, y < 0 ? x : static_cast<std::size_t>(y), ok});
    }
    return rec.finish(rec.done() ? t : opt.horizon);
}

double consensus_time(const Trajectory& t)
{
    return t.consensus_time;
}

std::string snapshot_csv(const Topology& g, const SiteConfig& eta)
{
    check_sites(g, eta);
    std::ostringstream os;
    os << "vertex,value\n";
    for (std::size_t i = 0; i < eta.size(); ++i)
        os << '"' << to_string(g.vertex_at(i)) << "\"," << int(eta[i]) << '\n';
    return os.str();
}

std::string trajectory_json(const Topology& g, const Trajectory& t)
{
    nlohmann::json j;
    j["topology"] = g.describe();
    j["end_time"] = t.end_time;
    j["events"] = t.events;
    j["consensus_time"] = std::isfinite(t.consensus_time) ? nlohmann::json(t.consensus_time) : nlohmann::json();
    nlohmann::json snaps = nlohmann::json::array();
    for (std::size_t i = 0; i < t.times.size(); ++i)
    {
        nlohmann::json s;
        s["time"] = t.times[i];
        s["sites"] = t.sites[i];
        if (i < t.edges.size())
            s["edges"] = t.edges[i];
        snaps.push_back(std::move(s));
    }
    j["snapshots"] = std::move(snaps);
    return j.dump();
}

} // namespace ips
