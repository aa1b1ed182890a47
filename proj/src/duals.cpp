#include "ips/duals.hpp"

#include "ips/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace ips
{

// ------------------------------------------------------------ WalkerSystem

WalkerSystem::WalkerSystem(std::size_t n) : parent_(n)
{
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t WalkerSystem::find(std::size_t i) const
{
    std::size_t r = i;
    while (parent_[r] != r)
        r = parent_[r];
    while (parent_[i] != r)
    {
        const std::size_t next = parent_[i];
        parent_[i] = r;
        i = next;
    }
    return r;
}

std::size_t WalkerSystem::merge(std::size_t a, std::size_t b)
{
    const std::size_t ra = find(a);
    const std::size_t rb = find(b);
    const std::size_t keep = std::min(ra, rb);
    parent_[std::max(ra, rb)] = keep;
    return keep;
}

std::size_t WalkerSystem::live_count() const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i)
        n += alive(i) ? 1 : 0;
    return n;
}

std::size_t CoalescingResult::live_count() const
{
    return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), char{1}));
}

std::vector<Vertex> CoalescingResult::live_set() const
{
    std::vector<Vertex> out;
    for (std::size_t i = 0; i < positions.size(); ++i)
        if (alive[i])
            out.push_back(positions[i]);
    std::sort(out.begin(), out.end(), lex_less);
    return out;
}

// ------------------------------------------------------- coalescing walks

namespace
{

void check_start(const Topology& g, const std::vector<Vertex>& start)
{
    for (std::size_t i = 0; i < start.size(); ++i)
    {
        if (!g.contains(start[i]))
            throw DomainError("walker start " + to_string(start[i]) + " is not in " + g.describe());
        for (std::size_t j = 0; j < i; ++j)
            if (same_vertex(start[i], start[j]))
                throw DomainError("walker starts must be distinct");
    }
}

/// Alive label other than `self` sitting at v, or -1.
long occupant(const std::vector<Vertex>& pos, const WalkerSystem& ws, std::size_t self, const Vertex& v)
{
    for (std::size_t j = 0; j < pos.size(); ++j)
        if (j != self && ws.alive(j) && same_vertex(pos[j], v))
            return static_cast<long>(j);
    return -1;
}

void snapshot_counts(CoalescingResult& res, const std::vector<double>& snaps, std::size_t& next, double before,
                     std::size_t live)
{
    while (next < snaps.size() && snaps[next] < before)
    {
        res.snapshot_times.push_back(snaps[next++]);
        res.snapshot_counts.push_back(live);
    }
}

} // namespace

CoalescingResult simulate_labelled_walkers(
    const Topology& g, const std::vector<Vertex>& start, double horizon, const SeedScheme& seeds,
    std::uint64_t replica, int R, bool move_dead,
    const std::function<void(const WalkerJump&, const std::vector<Vertex>&, const WalkerSystem&)>& observer,
    const std::vector<double>& snapshots)
{
    if (!(horizon >= 0.0))
        throw DomainError("horizon must be non-negative");
    check_start(g, start);
    const BallGeometry* geo = nullptr;
    if (R > 1)
    {
        if (!g.has_balls())
            throw UnsupportedTopology("range-R walks need l1 balls");
        if (g.kind() == TopologyKind::torus && g.side() <= 2 * R + 1)
            throw DomainError("ball geometry constraint violated: torus side must exceed 2R+1");
        geo = &ball_geometry(g.dim(), R);
    }
    else if (R != 1)
        throw DomainError("range R must be at least 1");

    const std::size_t k = start.size();
    CoalescingResult res;
    res.positions = start;
    res.alive.assign(k, 1);
    res.death_time.assign(k, kInf);
    res.absorbed_by.resize(k);
    std::iota(res.absorbed_by.begin(), res.absorbed_by.end(), std::size_t{0});
    WalkerSystem ws(k);
    std::vector<CounterRng> rng(k);
    MergedQueue q;
    std::vector<double> next(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        rng[i] = seeds.stream(StreamTag::walker, i, replica);
        next[i] = rng[i].exponential(1.0);
        q.push(QueueEvent{next[i], 0, i});
    }
    std::size_t live = k;
    std::size_t snap = 0;
    while (!q.empty() && q.top().time <= horizon)
    {
        const QueueEvent ev = q.pop();
        const std::size_t i = ev.id;
        const bool was_alive = ws.alive(i);
        if (!was_alive && !move_dead)
            continue;
        snapshot_counts(res, snapshots, snap, ev.time, live);
        Vertex& pos = res.positions[i];
        if (geo)
        {
            const auto c = 1 + rng[i].below(static_cast<std::uint64_t>(geo->size() - 1));
            if (auto w = g.translate(pos, geo->offsets[c]))
                pos = *w;
        }
        else
        {
            const auto nb = neighbors(g, pos);
            const auto c = rng[i].below(nb.size());
            if (!nb.empty())
                pos = nb[c];
        }
        next[i] += rng[i].exponential(1.0);
        q.push(QueueEvent{next[i], 0, i});

        WalkerJump jump{ev.time, i, was_alive};
        if (was_alive)
        {
            const long j = occupant(res.positions, ws, i, pos);
            if (j >= 0)
            {
                const std::size_t keep = ws.merge(i, static_cast<std::size_t>(j));
                const std::size_t gone = keep == i ? static_cast<std::size_t>(j) : i;
                res.alive[gone] = 0;
                res.death_time[gone] = ev.time;
                res.absorbed_by[gone] = keep;
                if (res.first_coalescence == kInf)
                    res.first_coalescence = ev.time;
                --live;
                jump.merged_into = keep;
            }
        }
        if (observer)
            observer(jump, res.positions, ws);
    }
    snapshot_counts(res, snapshots, snap, std::nextafter(horizon, kInf), live);
    return res;
}

CoalescingResult simulate_coalescing(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                     const SeedScheme& seeds, std::uint64_t replica, int R,
                                     const std::vector<double>& snapshots)
{
    return simulate_labelled_walkers(g, start, horizon, seeds, replica, R, false, {}, snapshots);
}

CoalescingResult simulate_coalescing_stirring(const Topology& g, const std::vector<Vertex>& start, double v,
                                              double horizon, const SeedScheme& seeds, std::uint64_t replica,
                                              const std::vector<double>& snapshots)
{
    check_rate(v);
    if (!(horizon >= 0.0))
        throw DomainError("horizon must be non-negative");
    if (g.regular_degree() == 0)
        throw UnsupportedTopology("stirring needs a regular graph, got " + g.describe());
    check_start(g, start);
    const std::size_t k = start.size();
    CoalescingResult res;
    res.positions = start;
    res.alive.assign(k, 1);
    res.death_time.assign(k, kInf);
    res.absorbed_by.resize(k);
    std::iota(res.absorbed_by.begin(), res.absorbed_by.end(), std::size_t{0});
    WalkerSystem ws(k);
    std::vector<CounterRng> rng(k);
    std::vector<double> next(k);
    MergedQueue q;
    for (std::size_t i = 0; i < k; ++i)
    {
        rng[i] = seeds.stream(StreamTag::walker, i, replica);
        next[i] = rng[i].exponential(1.0 + v);
        q.push(QueueEvent{next[i], 0, i});
    }
    std::size_t live = k;
    std::size_t snap = 0;
    while (!q.empty() && q.top().time <= horizon)
    {
        const QueueEvent ev = q.pop();
        const std::size_t i = ev.id;
        if (!ws.alive(i))
            continue;
        snapshot_counts(res, snapshots, snap, ev.time, live);
        const auto nb = neighbors(g, res.positions[i]);
        const Vertex z = nb[rng[i].below(nb.size())];
        const double u = rng[i].uniform();
        next[i] += rng[i].exponential(1.0 + v);
        q.push(QueueEvent{next[i], 0, i});
        const long j = occupant(res.positions, ws, i, z);
        if (j < 0)
        {
            res.positions[i] = z;
            continue;
        }
        if (u * (1.0 + v) < 1.0)
        {
            const std::size_t keep = ws.merge(i, static_cast<std::size_t>(j));
            const std::size_t gone = keep == i ? static_cast<std::size_t>(j) : i;
            res.positions[keep] = z;
            res.alive[gone] = 0;
            res.death_time[gone] = ev.time;
            res.absorbed_by[gone] = keep;
            if (res.first_coalescence == kInf)
                res.first_coalescence = ev.time;
            --live;
        }
        else
        {
            std::swap(res.positions[i], res.positions[static_cast<std::size_t>(j)]);
        }
    }
    snapshot_counts(res, snapshots, snap, std::nextafter(horizon, kInf), live);
    return res;
}

// -------------------------------------------------------------- knowledge

void RevealedKnowledge::reveal(const Edge& e, bool open, double expiry)
{
    const std::uint64_t key = edge_key(e);
    for (auto& entry : entries_)
        if (entry.key == key && entry.edge == e)
        {
            if (entry.open != open)
                throw std::logic_error("edge " + to_string(e) + " revealed both open and closed");
            entry.expiry = expiry;
            return;
        }
    entries_.push_back(KnowledgeEntry{e, key, open, expiry});
}

void RevealedKnowledge::prune(double t)
{
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [t](const KnowledgeEntry& k) { return k.expiry <= t; }),
                   entries_.end());
}

void RevealedKnowledge::forget(const Edge& e)
{
    entries_.erase(
        std::remove_if(entries_.begin(), entries_.end(), [&](const KnowledgeEntry& k) { return k.edge == e; }),
        entries_.end());
}

const KnowledgeEntry* RevealedKnowledge::find(const Edge& e) const
{
    const std::uint64_t key = edge_key(e);
    for (const auto& entry : entries_)
        if (entry.key == key && entry.edge == e)
            return &entry;
    return nullptr;
}

std::vector<Edge> RevealedKnowledge::open_edges() const
{
    std::vector<Edge> out;
    for (const auto& k : entries_)
        if (k.open)
            out.push_back(k.edge);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Edge> RevealedKnowledge::closed_edges() const
{
    std::vector<Edge> out;
    for (const auto& k : entries_)
        if (!k.open)
            out.push_back(k.edge);
    std::sort(out.begin(), out.end());
    return out;
}

double RevealedKnowledge::max_expiry() const
{
    double m = 0.0;
    for (const auto& k : entries_)
        m = std::max(m, k.expiry);
    return m;
}

// ------------------------------------------------------------ walker flows

AttemptOutcome attempt_move(const Topology& g, Environment& env, const Vertex& pos, const ManualEvent& ev, int R,
                            Reveal mode, RevealedKnowledge* knowledge, double* max_expiry)
{
    const BallGeometry& geo = ball_geometry(g.dim(), R);
    AttemptOutcome out;
    out.time = ev.time;
    out.from = pos;
    auto target = g.translate(pos, geo.offsets[static_cast<std::size_t>(ev.offset)]);
    if (!target)
        return out;
    out.valid = true;
    out.target = *target;
    const double t = ev.time;
    const bool bounded = g.kind() == TopologyKind::box;
    auto present = [&](int i) {
        return !bounded || g.translate(pos, geo.offsets[static_cast<std::size_t>(i)]).has_value();
    };
    auto local_edge = [&](int k) {
        return make_edge(g.canonical(pos + geo.edge_lo[static_cast<std::size_t>(k)]),
                         g.canonical(pos + geo.edge_hi[static_cast<std::size_t>(k)]));
    };

    if (mode == Reveal::none)
    {
        if (R == 1)
            out.moved = env.open(make_edge(pos, *target), t);
        else
            out.moved = local_connected(geo, ev.offset, present, [&](int k) { return env.open(local_edge(k), t); });
    }
    else
    {
        const std::size_t m = geo.edges.size();
        std::vector<char> state(m, 0);
        for (std::size_t k = 0; k < m; ++k)
        {
            if (bounded && (!present(geo.edges[k].first) || !present(geo.edges[k].second)))
                continue;
            const Edge e = local_edge(static_cast<int>(k));
            state[k] = env.open(e, t) ? 1 : 0;
            const double expiry = env.next_refresh(e, t);
            if (max_expiry)
                *max_expiry = std::max(*max_expiry, expiry);
            if (mode == Reveal::full && knowledge)
                knowledge->reveal(e, state[k] != 0, expiry);
        }
        out.moved = local_connected(geo, ev.offset, present, [&](int k) { return state[static_cast<std::size_t>(k)] != 0; });
    }
    return out;
}

AttemptOutcome flow_attempt(const Topology& g, FlowWalker& w, Reveal mode)
{
    const ManualEvent ev = w.manual.pop();
    ++w.attempts;
    if (mode == Reveal::full)
        w.knowledge.prune(ev.time);
    AttemptOutcome out =
        attempt_move(g, *w.env, w.pos, ev, w.manual.radius(), mode, &w.knowledge, &w.max_expiry);
    if (out.moved)
        w.pos = out.target;
    return out;
}

FlowPath rw_flow(const Topology& g, Environment& env, InstructionManual& manual, const Vertex& x, double horizon)
{
    if (!g.has_balls())
        throw UnsupportedTopology("walker flows need l1 balls");
    if (!g.contains(x))
        throw DomainError("start " + to_string(x) + " is not in " + g.describe());
    FlowPath path;
    path.positions.push_back(x);
    Vertex pos = x;
    while (manual.peek().time <= horizon)
    {
        const ManualEvent ev = manual.pop();
        ++path.attempts;
        const AttemptOutcome o = attempt_move(g, env, pos, ev, manual.radius(), Reveal::none);
        if (o.moved && !same_vertex(o.target, pos))
        {
            pos = o.target;
            path.times.push_back(ev.time);
            path.positions.push_back(pos);
        }
    }
    return path;
}

WalkersRecord simulate_walkers_single_env(const Topology& g, const std::vector<Vertex>& start, double p, double v,
                                          int R, double horizon, const SeedScheme& seeds, std::uint64_t replica,
                                          const std::vector<double>& snapshots)
{
    check_probability(p);
    check_rate(v);
    if (!g.has_balls())
        throw UnsupportedTopology("walker flows need l1 balls");
    if (g.kind() == TopologyKind::torus && g.side() <= 2 * R + 1)
        throw DomainError("ball geometry constraint violated: torus side must exceed 2R+1");
    for (const auto& x : start)
        if (!g.contains(x))
            throw DomainError("start " + to_string(x) + " is not in " + g.describe());
    Environment env(seeds, p, v, replica);
    std::vector<FlowWalker> ws(start.size());
    for (std::size_t i = 0; i < start.size(); ++i)
    {
        ws[i].pos = start[i];
        ws[i].manual = make_manual(seeds, i, R, g.dim(), replica);
        ws[i].env = &env;
    }
    WalkersRecord rec;
    std::size_t snap = 0;
    auto take = [&](double s) {
        WalkersSnapshot sn;
        sn.time = s;
        for (auto& w : ws)
        {
            sn.positions.push_back(w.pos);
            RevealedKnowledge k = w.knowledge;
            k.prune(s);
            sn.knowledge.push_back(std::move(k));
        }
        rec.snapshots.push_back(std::move(sn));
    };
    while (!ws.empty())
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < ws.size(); ++i)
            if (ws[i].manual.peek().time < ws[best].manual.peek().time)
                best = i;
        const double t = ws[best].manual.peek().time;
        if (t > horizon)
            break;
        while (snap < snapshots.size() && snapshots[snap] < t)
            take(snapshots[snap++]);
        flow_attempt(g, ws[best], Reveal::full);
        ++rec.attempts;
    }
    while (snap < snapshots.size() && snapshots[snap] <= horizon)
        take(snapshots[snap++]);
    for (auto& w : ws)
    {
        w.knowledge.prune(horizon);
        rec.positions.push_back(w.pos);
        rec.knowledge.push_back(w.knowledge);
    }
    return rec;
}

// -------------------------------------------------------------- dual chain

std::string DualChainState::key() const
{
    std::ostringstream os;
    os << "C";
    for (const auto& x : C)
        os << to_string(x);
    os << "|A";
    for (const auto& e : A)
        os << to_string(e);
    os << "|B";
    for (const auto& e : B)
        os << to_string(e);
    return os.str();
}

void check_dual_start(const Topology& g, const std::vector<Vertex>& C, const std::vector<Edge>& E,
                      const std::vector<Edge>& F)
{
    check_start(g, C);
    auto check_edge = [&](const Edge& e) {
        if (!g.contains(e.lo) || !g.contains(e.hi) || g.distance(e.lo, e.hi) != 1 || lex_less(e.hi, e.lo))
            throw DomainError("edge " + to_string(e) + " is not a canonical edge of " + g.describe());
    };
    for (const auto& e : E)
        check_edge(e);
    for (const auto& e : F)
        check_edge(e);
    for (const auto& e : E)
        for (const auto& f : F)
            if (e == f)
                throw DomainError("revealed sets must be disjoint: edge " + to_string(e) + " is in both E and F");
}

namespace
{

DualChainState make_state(std::vector<Vertex> C, std::vector<Edge> A, std::vector<Edge> B)
{
    std::sort(C.begin(), C.end(), lex_less);
    std::sort(A.begin(), A.end());
    std::sort(B.begin(), B.end());
    return DualChainState{std::move(C), std::move(A), std::move(B)};
}

DualChainResult dual_constructive(const Topology& g, const std::vector<Vertex>& C, const std::vector<Edge>& E,
                                  const std::vector<Edge>& F, double p, double v, int R, double horizon,
                                  const SeedScheme& seeds, std::uint64_t replica, const std::vector<double>& snaps)
{
    Environment env(seeds, p, v, replica);
    for (const auto& e : E)
        env.pin(e, true);
    for (const auto& e : F)
        env.pin(e, false);
    RevealedKnowledge pooled;
    for (const auto& e : E)
        pooled.reveal(e, true, env.next_refresh(e, 0.0));
    for (const auto& e : F)
        pooled.reveal(e, false, env.next_refresh(e, 0.0));

    const std::size_t k = C.size();
    std::vector<Vertex> pos = C;
    std::vector<InstructionManual> manuals(k);
    for (std::size_t i = 0; i < k; ++i)
        manuals[i] = make_manual(seeds, i, R, g.dim(), replica);
    WalkerSystem ws(k);

    DualChainResult res;
    std::size_t snap = 0;
    auto state_at = [&](double s) {
        RevealedKnowledge kn = pooled;
        kn.prune(s);
        std::vector<Vertex> live;
        for (std::size_t i = 0; i < k; ++i)
            if (ws.alive(i))
                live.push_back(pos[i]);
        return make_state(std::move(live), kn.open_edges(), kn.closed_edges());
    };
    while (true)
    {
        long best = -1;
        for (std::size_t i = 0; i < k; ++i)
            if (ws.alive(i) && (best < 0 || manuals[i].peek().time < manuals[static_cast<std::size_t>(best)].peek().time))
                best = static_cast<long>(i);
        if (best < 0)
            break;
        const std::size_t i = static_cast<std::size_t>(best);
        const double t = manuals[i].peek().time;
        if (t > horizon)
            break;
        while (snap < snaps.size() && snaps[snap] < t)
        {
            res.snapshot_times.push_back(snaps[snap]);
            res.snapshots.push_back(state_at(snaps[snap++]));
        }
        const ManualEvent ev = manuals[i].pop();
        pooled.prune(t);
        const AttemptOutcome o = attempt_move(g, env, pos[i], ev, R, Reveal::full, &pooled);
        ++res.events;
        if (!o.moved)
            continue;
        pos[i] = o.target;
        const long j = occupant(pos, ws, i, o.target);
        if (j >= 0)
            ws.merge(i, static_cast<std::size_t>(j));
    }
    while (snap < snaps.size() && snaps[snap] <= horizon)
    {
        res.snapshot_times.push_back(snaps[snap]);
        res.snapshots.push_back(state_at(snaps[snap++]));
    }
    res.final_state = state_at(horizon);
    return res;
}

struct EdgeLess
{
    bool operator()(const Edge& a, const Edge& b) const { return a < b; }
};

DualChainResult dual_gillespie(const Topology& g, const std::vector<Vertex>& C0, const std::vector<Edge>& E0,
                               const std::vector<Edge>& F0, double p, double v, int R, double horizon,
                               const SeedScheme& seeds, std::uint64_t replica, const std::vector<double>& snaps)
{
    if (!g.finite())
        throw UnsupportedTopology("the table sampler runs on finite topologies only");
    const BallGeometry& geo = ball_geometry(g.dim(), R);
    const double norm = static_cast<double>(geo.size() - 1);
    std::vector<Vertex> C = C0;
    std::vector<std::pair<Edge, bool>> known; // (edge, open)
    for (const auto& e : E0)
        known.emplace_back(e, true);
    for (const auto& e : F0)
        known.emplace_back(e, false);
    auto lookup = [&](const Edge& e) -> int {
        for (const auto& [f, o] : known)
            if (f == e)
                return o ? 1 : 0;
        return -1;
    };
    auto current = [&]() {
        std::vector<Edge> A, B;
        for (const auto& [e, o] : known)
            (o ? A : B).push_back(e);
        return make_state(C, std::move(A), std::move(B));
    };

    CounterRng rng = seeds.stream(StreamTag::sampler, 0, replica);
    DualChainResult res;
    std::size_t snap = 0;
    double t = 0.0;
    while (true)
    {
        // (x index, offset) pairs whose target lies in the graph
        std::vector<std::pair<std::size_t, int>> moves;
        for (std::size_t a = 0; a < C.size(); ++a)
            for (int k = 1; k < geo.size(); ++k)
                if (g.translate(C[a], geo.offsets[static_cast<std::size_t>(k)]))
                    moves.emplace_back(a, k);
        const double refresh_rate = v * static_cast<double>(known.size());
        const double move_rate = static_cast<double>(moves.size()) / norm;
        const double total = refresh_rate + move_rate;
        if (total <= 0.0)
            break;
        t += rng.exponential(total);
        const double u = rng.uniform() * total;
        if (t > horizon)
            break;
        while (snap < snaps.size() && snaps[snap] < t)
        {
            res.snapshot_times.push_back(snaps[snap++]);
            res.snapshots.push_back(current());
        }
        ++res.events;
        if (u < refresh_rate)
        {
            const auto idx = std::min(known.size() - 1, static_cast<std::size_t>(u / v));
            known.erase(known.begin() + static_cast<long>(idx));
            continue;
        }
        const auto idx = std::min(moves.size() - 1,
                                  static_cast<std::size_t>((u - refresh_rate) / move_rate * static_cast<double>(moves.size())));
        const auto [a, k] = moves[idx];
        const Vertex x = C[a];
        const Vertex y = *g.translate(x, geo.offsets[static_cast<std::size_t>(k)]);
        auto present = [&](int i) { return g.translate(x, geo.offsets[static_cast<std::size_t>(i)]).has_value(); };
        // status of each local edge: 1 open, 0 closed, -1 unrevealed, -2 absent
        std::vector<int> status(geo.edges.size());
        std::vector<Edge> local(geo.edges.size());
        std::vector<std::size_t> unrevealed;
        for (std::size_t j = 0; j < geo.edges.size(); ++j)
        {
            if (!present(geo.edges[j].first) || !present(geo.edges[j].second))
            {
                status[j] = -2;
                continue;
            }
            local[j] = make_edge(g.canonical(x + geo.edge_lo[j]), g.canonical(x + geo.edge_hi[j]));
            status[j] = lookup(local[j]);
            if (status[j] == -1)
                unrevealed.push_back(j);
        }
        if (unrevealed.size() > static_cast<std::size_t>(kMaxEnumeratedEdges))
            throw DomainError("table sampler refuses balls with more than " + std::to_string(kMaxEnumeratedEdges) +
                              " unrevealed edges");
        const std::size_t combos = std::size_t{1} << unrevealed.size();
        std::vector<double> cumulative(combos);
        std::vector<char> connects(combos);
        double acc = 0.0;
        for (std::size_t mask = 0; mask < combos; ++mask)
        {
            double w = 1.0;
            for (std::size_t b = 0; b < unrevealed.size(); ++b)
                w *= ((mask >> b) & 1u) ? p : 1.0 - p;
            connects[mask] = local_connected(geo, k, present, [&](int j) {
                const int s = status[static_cast<std::size_t>(j)];
                if (s >= 0)
                    return s == 1;
                const auto pos = std::find(unrevealed.begin(), unrevealed.end(), static_cast<std::size_t>(j));
                return ((mask >> (pos - unrevealed.begin())) & 1u) != 0;
            });
            acc += w;
            cumulative[mask] = acc;
        }
        const double r = rng.uniform() * acc;
        std::size_t mask = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                                    cumulative.begin());
        mask = std::min(mask, combos - 1);
        for (std::size_t b = 0; b < unrevealed.size(); ++b)
            known.emplace_back(local[unrevealed[b]], ((mask >> b) & 1u) != 0);
        if (connects[mask])
        {
            C.erase(C.begin() + static_cast<long>(a));
            if (std::none_of(C.begin(), C.end(), [&](const Vertex& c) { return same_vertex(c, y); }))
                C.push_back(y);
        }
    }
    while (snap < snaps.size() && snaps[snap] <= horizon)
    {
        res.snapshot_times.push_back(snaps[snap++]);
        res.snapshots.push_back(current());
    }
    res.final_state = current();
    return res;
}

} // namespace

DualChainResult simulate_dual_chain(const Topology& g, const std::vector<Vertex>& C, const std::vector<Edge>& E,
                                    const std::vector<Edge>& F, double p, double v, int R, double horizon,
                                    const SeedScheme& seeds, std::uint64_t replica, DualMethod method,
                                    const std::vector<double>& snapshots)
{
    check_probability(p);
    check_rate(v);
    if (!(horizon >= 0.0))
        throw DomainError("horizon must be non-negative");
    if (!g.has_balls())
        throw UnsupportedTopology("the dual chain needs l1 balls; not available on " + g.describe());
    if (R < 1)
        throw DomainError("range R must be at least 1");
    if (g.kind() == TopologyKind::torus && g.side() <= 2 * R + 1)
        throw DomainError("ball geometry constraint violated: torus side must exceed 2R+1");
    check_dual_start(g, C, E, F);
    if (method == DualMethod::gillespie)
        return dual_gillespie(g, C, E, F, p, v, R, horizon, seeds, replica, snapshots);
    return dual_constructive(g, C, E, F, p, v, R, horizon, seeds, replica, snapshots);
}

ConnectionRate connection_rate(const Topology& g, const Vertex& x, const Vertex& y, const std::vector<Edge>& E,
                               const std::vector<Edge>& F, double p, int R, std::uint64_t mc_samples,
                               const SeedScheme& seeds, std::uint64_t replica)
{
    check_probability(p);
    if (!g.has_balls())
        throw UnsupportedTopology("connection rates need l1 balls");
    const BallGeometry& geo = ball_geometry(g.dim(), R);
    std::optional<int> target;
    for (int k = 0; k < geo.size(); ++k)
        if (auto w = g.translate(x, geo.offsets[static_cast<std::size_t>(k)]); w && same_vertex(*w, y))
        {
            target = k;
            break;
        }
    if (!target)
        throw DomainError("target " + to_string(y) + " lies outside the ball of radius " + std::to_string(R) +
                          " around " + to_string(x));
    for (const auto& e : E)
        for (const auto& f : F)
            if (e == f)
                throw DomainError("revealed sets must be disjoint: edge " + to_string(e) + " is in both E and F");
    auto present = [&](int i) { return g.translate(x, geo.offsets[static_cast<std::size_t>(i)]).has_value(); };
    std::vector<int> status(geo.edges.size(), -2);
    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < geo.edges.size(); ++j)
    {
        if (!present(geo.edges[j].first) || !present(geo.edges[j].second))
            continue;
        const Edge e = make_edge(g.canonical(x + geo.edge_lo[j]), g.canonical(x + geo.edge_hi[j]));
        if (std::find(E.begin(), E.end(), e) != E.end())
            status[j] = 1;
        else if (std::find(F.begin(), F.end(), e) != F.end())
            status[j] = 0;
        else
        {
            status[j] = -1;
            free.push_back(j);
        }
    }
    std::vector<char> draw(geo.edges.size(), 0);
    auto connected = [&]() {
        return local_connected(geo, *target, present, [&](int j) {
            const int s = status[static_cast<std::size_t>(j)];
            return s >= 0 ? s == 1 : draw[static_cast<std::size_t>(j)] != 0;
        });
    };
    ConnectionRate out;
    if (free.size() <= static_cast<std::size_t>(kMaxEnumeratedEdges) && mc_samples == 0)
    {
        const std::size_t combos = std::size_t{1} << free.size();
        for (std::size_t mask = 0; mask < combos; ++mask)
        {
            double w = 1.0;
            for (std::size_t b = 0; b < free.size(); ++b)
            {
                const bool o = ((mask >> b) & 1u) != 0;
                draw[free[b]] = o ? 1 : 0;
                w *= o ? p : 1.0 - p;
            }
            if (connected())
                out.value += w;
        }
        return out;
    }
    const std::uint64_t n = mc_samples ? mc_samples : 100000;
    CounterRng rng = seeds.stream(StreamTag::sampler, 0x636f6e6eULL, replica);
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < n; ++s)
    {
        for (std::size_t j : free)
            draw[j] = rng.bernoulli(p) ? 1 : 0;
        hits += connected() ? 1 : 0;
    }
    const Estimate est = wilson(hits, n);
    out.value = est.mean;
    out.se = est.se;
    out.exact = false;
    return out;
}

// ---------------------------------------------------------- regenerations

SeparatePairRecord simulate_separate_pair(const Topology& g, const Vertex& x, const Vertex& y, double p, double v,
                                          int R, int horizon, const SeedScheme& seeds, std::uint64_t replica,
                                          bool shared_env)
{
    check_probability(p);
    check_rate(v);
    if (horizon < 1)
        throw DomainError("horizon must be at least 1");
    if (!g.has_balls())
        throw UnsupportedTopology("walker flows need l1 balls");
    Environment env1(seeds, p, v, replica, shared_env ? 0 : 1);
    Environment env2(seeds, p, v, replica, 2);
    FlowWalker w1, w2;
    w1.pos = x;
    w2.pos = y;
    w1.manual = make_manual(seeds, 0, R, g.dim(), replica);
    w2.manual = make_manual(seeds, 1, R, g.dim(), replica);
    w1.env = &env1;
    w2.env = shared_env ? &env1 : &env2;

    SeparatePairRecord rec;
    const auto M = static_cast<std::size_t>(horizon);
    rec.X.reserve(M + 1);
    rec.Y.reserve(M + 1);
    rec.X.push_back(x);
    rec.Y.push_back(y);
    rec.empty.push_back(1);
    rec.J1.push_back(0);
    rec.J2.push_back(0);
    rec.tau0 = 0.0;
    for (std::size_t m = 1; m <= M; ++m)
    {
        const double end = static_cast<double>(m);
        std::uint32_t j1 = 0, j2 = 0;
        while (true)
        {
            const double t1 = w1.manual.peek().time;
            const double t2 = w2.manual.peek().time;
            if (std::min(t1, t2) > end)
                break;
            if (t1 <= t2)
            {
                flow_attempt(g, w1, Reveal::expiry);
                ++j1;
            }
            else
            {
                flow_attempt(g, w2, Reveal::expiry);
                ++j2;
            }
        }
        rec.X.push_back(w1.pos);
        rec.Y.push_back(w2.pos);
        rec.J1.push_back(j1);
        rec.J2.push_back(j2);
        rec.empty.push_back(std::max(w1.max_expiry, w2.max_expiry) <= end ? 1 : 0);
    }
    return rec;
}

RegenerationRecord detect_regenerations(const SeparatePairRecord& rec, bool continuous_start)
{
    RegenerationRecord out;
    int prev = continuous_start ? static_cast<int>(std::floor(rec.tau0)) : 0;
    out.sigma.push_back(prev);
    for (std::size_t m = static_cast<std::size_t>(prev) + 1; m < rec.empty.size(); ++m)
    {
        if (!rec.empty[m])
            continue;
        std::uint64_t s = 0;
        for (std::size_t j = static_cast<std::size_t>(prev) + 1; j <= m; ++j)
            s += rec.J1[j] + rec.J2[j];
        out.dX.push_back(rec.X[m] - rec.X[static_cast<std::size_t>(prev)]);
        out.dY.push_back(rec.Y[m] - rec.Y[static_cast<std::size_t>(prev)]);
        out.S.push_back(s);
        out.sigma.push_back(static_cast<int>(m));
        prev = static_cast<int>(m);
    }
    return out;
}

std::string regenerations_csv(const RegenerationRecord& r)
{
    std::ostringstream os;
    os << "n,sigma_n,dX,dY,S_n\n";
    for (std::size_t n = 1; n < r.sigma.size(); ++n)
        os << n << ',' << r.sigma[n] << ",\"" << to_string(r.dX[n - 1]) << "\",\"" << to_string(r.dY[n - 1])
           << "\"," << r.S[n - 1] << '\n';
    return os.str();
}

// ------------------------------------------------------------------- trees

TreeMeasure tree_branch_measure(const Topology& tree, const TreePath& x, const std::vector<int>& branches,
                                double horizon, std::uint64_t N, const SeedScheme& seeds)
{
    if (tree.kind() != TopologyKind::tree || tree.tree_depth() >= 0)
        throw UnsupportedTopology("branch measures need an infinite regular tree");
    if (!(horizon > 0.0) || N == 0)
        throw DomainError("horizon and replica count must be positive");
    const int k = tree.tree_degree();
    neighbors(tree, x); // validates the label
    std::vector<char> in_set(static_cast<std::size_t>(k), 0);
    for (int b : branches)
    {
        if (b < 0 || b >= k)
            throw DomainError("branch index out of range");
        in_set[static_cast<std::size_t>(b)] = 1;
    }
    const bool whole = std::all_of(in_set.begin(), in_set.end(), [](char c) { return c != 0; });
    std::uint64_t hits = 0;
    double bias = 0.0;
    for (std::uint64_t r = 0; r < N; ++r)
    {
        CounterRng rng = seeds.stream(StreamTag::sampler, 0x74726565ULL, r);
        int depth = static_cast<int>(x.size());
        int branch = x.empty() ? -1 : x[0];
        double t = rng.exponential(1.0);
        while (t <= horizon)
        {
            if (depth == 0)
            {
                branch = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
                depth = 1;
            }
            else if (rng.uniform() * k < 1.0)
            {
                if (--depth == 0)
                    branch = -1;
            }
            else
                ++depth;
            t += rng.exponential(1.0);
        }
        const bool in = whole || (depth >= 1 && in_set[static_cast<std::size_t>(branch)]);
        hits += in ? 1 : 0;
        bias += whole ? 0.0 : std::pow(1.0 / (k - 1), depth);
    }
    const Estimate e = wilson(hits, N);
    return TreeMeasure{e.mean, e.ci_low, e.ci_high, bias / static_cast<double>(N), N};
}

} // namespace ips
