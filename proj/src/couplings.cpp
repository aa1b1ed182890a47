#include "ips/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace ips
{

int phi_edge_count(const Topology& g, const std::vector<Vertex>& set)
{
    std::unordered_set<Vertex, VertexHash, VertexEq> in(set.begin(), set.end());
    int count = 0;
    for (const auto& x : in)
        for (const auto& y : neighbors(g, x))
            if (lex_less(x, y) && in.count(y))
                ++count;
    return count;
}

// ------------------------------------------- coalescing vs independent

namespace
{

struct TracePoint
{
    double time;
    std::vector<Vertex> set;
};

/// Independent walkers with the same per-walker streams as the coalescing engine.
std::vector<TracePoint> independent_trace(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                          const SeedScheme& seeds, std::uint64_t replica, int R)
{
    const BallGeometry* geo = R > 1 ? &ball_geometry(g.dim(), R) : nullptr;
    std::vector<Vertex> pos = start;
    std::vector<CounterRng> rng(start.size());
    std::vector<double> next(start.size());
    MergedQueue q;
    for (std::size_t i = 0; i < start.size(); ++i)
    {
        rng[i] = seeds.stream(StreamTag::walker, i, replica);
        next[i] = rng[i].exponential(1.0);
        q.push(QueueEvent{next[i], 0, i});
    }
    std::vector<TracePoint> out{{0.0, pos}};
    while (!q.empty() && q.top().time <= horizon)
    {
        const QueueEvent ev = q.pop();
        const std::size_t i = ev.id;
        if (geo)
        {
            const auto c = 1 + rng[i].below(static_cast<std::uint64_t>(geo->size() - 1));
            if (auto w = g.translate(pos[i], geo->offsets[c]))
                pos[i] = *w;
        }
        else
        {
            const auto nb = neighbors(g, pos[i]);
            pos[i] = nb[rng[i].below(nb.size())];
        }
        next[i] += rng[i].exponential(1.0);
        q.push(QueueEvent{next[i], 0, i});
        out.push_back(TracePoint{ev.time, pos});
    }
    return out;
}

bool contained(const std::vector<Vertex>& small, const std::vector<Vertex>& big)
{
    return std::all_of(small.begin(), small.end(), [&](const Vertex& a) {
        return std::any_of(big.begin(), big.end(), [&](const Vertex& b) { return same_vertex(a, b); });
    });
}

} // namespace

ContainmentResult couple_coalescing_independent(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                                const SeedScheme& seeds, std::uint64_t replica, int R)
{
    std::vector<TracePoint> coal{{0.0, start}};
    const CoalescingResult res = simulate_labelled_walkers(
        g, start, horizon, seeds, replica, R, false,
        [&](const WalkerJump& j, const std::vector<Vertex>& pos, const WalkerSystem& ws) {
            std::vector<Vertex> live;
            for (std::size_t i = 0; i < pos.size(); ++i)
                if (ws.alive(i))
                    live.push_back(pos[i]);
            coal.push_back(TracePoint{j.time, std::move(live)});
        });
    const std::vector<TracePoint> ind = independent_trace(g, start, horizon, seeds, replica, R);

    ContainmentResult out;
    out.coalesced = res.live_count() < start.size();
    out.first_coalescence = res.first_coalescence;
    std::size_t a = 0, b = 0;
    while (a < coal.size() || b < ind.size())
    {
        const double ta = a < coal.size() ? coal[a].time : kInf;
        const double tb = b < ind.size() ? ind[b].time : kInf;
        const double t = std::min(ta, tb);
        while (a < coal.size() && coal[a].time <= t)
            ++a;
        while (b < ind.size() && ind[b].time <= t)
            ++b;
        ++out.checks;
        if (!contained(coal[a - 1].set, ind[b - 1].set))
            ++out.violations;
    }
    return out;
}

Estimate estimate_g(const Topology& g, const std::vector<Vertex>& start, double horizon, std::uint64_t N,
                    const SeedScheme& seeds)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < N; ++r)
        hits += simulate_coalescing(g, start, horizon, seeds, r).live_count() < start.size() ? 1 : 0;
    return wilson(hits, N);
}

// ------------------------------------------------------ martingale check

namespace
{

using Targets = std::vector<std::pair<SetState, double>>;

bool same_set(const SetState& a, const SetState& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_vertex(a[i], b[i]))
            return false;
    return true;
}

void add_target(Targets& out, SetState s, double rate)
{
    std::sort(s.begin(), s.end(), lex_less);
    for (auto& [t, r] : out)
        if (same_set(t, s))
        {
            r += rate;
            return;
        }
    out.emplace_back(std::move(s), rate);
}

bool occupied(const SetState& a, const Vertex& y)
{
    return std::any_of(a.begin(), a.end(), [&](const Vertex& z) { return same_vertex(z, y); });
}

SetState without(const SetState& a, std::size_t i)
{
    SetState s = a;
    s.erase(s.begin() + static_cast<long>(i));
    return s;
}

} // namespace

RateTable stirring_set_rates(const Topology& g, double v)
{
    const int d = g.regular_degree();
    if (d == 0)
        throw UnsupportedTopology("stirring needs a regular graph");
    return [g, v, d](const SetState& a) {
        Targets out;
        for (std::size_t i = 0; i < a.size(); ++i)
            for (const auto& y : neighbors(g, a[i]))
            {
                if (occupied(a, y))
                    add_target(out, without(a, i), 1.0 / d);
                else
                {
                    SetState s = without(a, i);
                    s.push_back(y);
                    add_target(out, std::move(s), (v + 1.0) / d);
                }
            }
        return out;
    };
}

RateTable independent_set_rates(const Topology& g, double v, bool with_collisions)
{
    const int d = g.regular_degree();
    if (d == 0)
        throw UnsupportedTopology("independent walkers need a regular graph here");
    return [g, v, d, with_collisions](const SetState& a) {
        Targets out;
        for (std::size_t i = 0; i < a.size(); ++i)
            for (const auto& y : neighbors(g, a[i]))
            {
                if (occupied(a, y))
                {
                    if (with_collisions)
                        add_target(out, without(a, i), (1.0 + v) / d);
                }
                else
                {
                    SetState s = without(a, i);
                    s.push_back(y);
                    add_target(out, std::move(s), (1.0 + v) / d);
                }
            }
        return out;
    };
}

IdentityReport martingale_identity_check(const RateTable& r1, const RateTable& r2, const SetState& a0, double T,
                                         std::uint64_t N, const SeedScheme& seeds,
                                         const std::function<double(const SetState&)>& alternative)
{
    if (!(T > 0.0) || N == 0)
        throw DomainError("horizon and replica count must be positive");
    Accumulator lhs, rhs, alt;
    SetState start = a0;
    std::sort(start.begin(), start.end(), lex_less);
    for (std::uint64_t r = 0; r < N; ++r)
    {
        CounterRng rng = seeds.stream(StreamTag::sampler, 0x6d617274ULL, r);
        SetState a = start;
        double t = 0.0, integral = 0.0, alt_integral = 0.0;
        bool broke = false;
        while (true)
        {
            const Targets t1 = r1(a);
            const Targets t2 = r2(a);
            Targets shared;
            double mismatch = 0.0;
            for (const auto& [s, rate] : t1)
            {
                const auto it = std::find_if(t2.begin(), t2.end(), [&](const auto& o) { return same_set(o.first, s); });
                const double other = it == t2.end() ? 0.0 : it->second;
                if (std::abs(other - rate) <= 1e-12 * std::max(rate, other))
                    shared.emplace_back(s, rate);
                else
                    mismatch += rate + other;
            }
            for (const auto& [s, rate] : t2)
                if (std::none_of(t1.begin(), t1.end(), [&](const auto& o) { return same_set(o.first, s); }))
                    mismatch += rate;
            double total = mismatch;
            for (const auto& sr : shared)
                total += sr.second;
            const double dt = rng.exponential(total);
            const double u = rng.uniform() * total;
            const double a_alt = alternative ? alternative(a) : 0.0;
            if (t + dt >= T)
            {
                integral += mismatch * (T - t);
                alt_integral += a_alt * (T - t);
                break;
            }
            integral += mismatch * dt;
            alt_integral += a_alt * dt;
            t += dt;
            if (u < mismatch)
            {
                broke = true;
                break;
            }
            double acc = mismatch;
            std::size_t pick = shared.size() - 1;
            for (std::size_t k = 0; k < shared.size(); ++k)
            {
                acc += shared[k].second;
                if (u < acc)
                {
                    pick = k;
                    break;
                }
            }
            a = shared[pick].first;
        }
        lhs.add(broke ? 1.0 : 0.0);
        rhs.add(integral);
        alt.add(alt_integral);
    }
    IdentityReport rep;
    rep.lhs = normal_estimate(lhs);
    rep.rhs = normal_estimate(rhs);
    rep.alt = normal_estimate(alt);
    rep.pooled = pooled_se(rep.lhs.se, rep.rhs.se);
    rep.z = rep.pooled > 0 ? (rep.lhs.mean - rep.rhs.mean) / rep.pooled : 0.0;
    rep.within = std::abs(rep.lhs.mean - rep.rhs.mean) <= 3.0 * rep.pooled;
    const double alt_pooled = pooled_se(rep.lhs.se, rep.alt.se);
    rep.alt_z = alt_pooled > 0 ? (rep.lhs.mean - rep.alt.mean) / alt_pooled : 0.0;
    rep.alt_within = std::abs(rep.lhs.mean - rep.alt.mean) <= 3.0 * alt_pooled;
    return rep;
}

// -------------------------------------------- single vs separate environments

namespace
{

/// Two flow walkers with full knowledge, in local time.
struct PairSim
{
    const Topology& g;
    int R;
    FlowWalker w[2];

    PairSim(const Topology& topo, int range) : g(topo), R(range) {}

    double next_time() const { return std::min(w[0].manual.peek().time, w[1].manual.peek().time); }

    /// Perform the next attempt; true when the chain state changed.
    bool step()
    {
        const int i = w[0].manual.peek().time <= w[1].manual.peek().time ? 0 : 1;
        const double t = w[i].manual.peek().time;
        w[0].knowledge.prune(t);
        w[1].knowledge.prune(t);
        const std::size_t before = w[i].knowledge.size();
        const AttemptOutcome o = flow_attempt(g, w[i], Reveal::full);
        return (o.moved && !same_vertex(o.from, o.target)) || w[i].knowledge.size() != before;
    }

    double min_expiry() const
    {
        double m = kInf;
        for (const auto& wk : w)
            for (const auto& e : wk.knowledge.entries())
                m = std::min(m, e.expiry);
        return m;
    }

    int dist_to(const Vertex& u, const RevealedKnowledge& k, double t) const
    {
        int best = std::numeric_limits<int>::max();
        for (const auto& e : k.entries())
            if (e.expiry > t)
                best = std::min({best, g.distance(u, e.edge.lo), g.distance(u, e.edge.hi)});
        return best;
    }

    int proximity(double t) const
    {
        return std::min({g.distance(w[0].pos, w[1].pos), dist_to(w[0].pos, w[1].knowledge, t),
                         dist_to(w[1].pos, w[0].knowledge, t)});
    }

    /// Time at which proximity <= ell stops holding if nothing else happens.
    double off_time(int ell) const
    {
        if (g.distance(w[0].pos, w[1].pos) <= ell)
            return kInf;
        double m = -kInf;
        for (int i = 0; i < 2; ++i)
            for (const auto& e : w[1 - i].knowledge.entries())
                if (std::min(g.distance(w[i].pos, e.edge.lo), g.distance(w[i].pos, e.edge.hi)) <= ell)
                    m = std::max(m, e.expiry);
        return m;
    }

    PairState state(double t) const
    {
        PairState s;
        s.X = w[0].pos;
        s.Y = w[1].pos;
        RevealedKnowledge k1 = w[0].knowledge, k2 = w[1].knowledge;
        k1.prune(t);
        k2.prune(t);
        s.A1 = k1.open_edges();
        s.B1 = k1.closed_edges();
        s.A2 = k2.open_edges();
        s.B2 = k2.closed_edges();
        return s;
    }
};

void check_pair_args(const Topology& g, const Vertex& x, const Vertex& y, double p, double v, int R, double horizon)
{
    check_probability(p);
    check_rate(v);
    if (!g.has_balls())
        throw UnsupportedTopology("walker flows need l1 balls");
    if (g.kind() == TopologyKind::torus && g.side() <= 2 * R + 1)
        throw DomainError("ball geometry constraint violated: torus side must exceed 2R+1");
    if (!g.contains(x) || !g.contains(y))
        throw DomainError("walker starts must lie in the graph");
    if (!(horizon > 0.0))
        throw DomainError("horizon must be positive");
}

/// Run the separate chain, accumulating proximity statistics. `on_attempt` sees
/// each attempt time together with the first state change in (previous, now].
template <class OnAttempt>
void run_separate(PairSim& sim, ProximityStats& st, double horizon, OnAttempt&& on_attempt)
{
    double now = 0.0;
    const int p0 = sim.proximity(0.0);
    for (std::size_t k = 0; k < st.ells.size(); ++k)
        if (p0 <= st.ells[k])
            st.hit[k] = 1;
    on_attempt(0.0, kInf);
    while (true)
    {
        const double tn = sim.next_time();
        const double end = std::min(tn, horizon);
        for (std::size_t k = 0; k < st.ells.size(); ++k)
            st.occupation[k] += std::max(0.0, std::min(end, sim.off_time(st.ells[k])) - now);
        if (tn > horizon)
            break;
        const double expiry = sim.min_expiry();
        const bool moved = sim.step();
        now = tn;
        const int prox = sim.proximity(now);
        for (std::size_t k = 0; k < st.ells.size(); ++k)
            if (prox <= st.ells[k])
                st.hit[k] = 1;
        on_attempt(now, expiry <= tn ? expiry : moved ? tn : kInf);
    }
}

ProximityStats make_stats(const std::vector<int>& ells)
{
    ProximityStats st;
    st.ells = ells;
    st.hit.assign(ells.size(), 0);
    st.occupation.assign(ells.size(), 0.0);
    return st;
}

} // namespace

ProximityStats separate_proximity(const Topology& g, const Vertex& x, const Vertex& y, const std::vector<int>& ells,
                                  double p, double v, int R, double horizon, const SeedScheme& seeds,
                                  std::uint64_t replica)
{
    check_pair_args(g, x, y, p, v, R, horizon);
    Environment env1(seeds, p, v, replica, 1), env2(seeds, p, v, replica, 2);
    PairSim sim(g, R);
    sim.w[0].pos = x;
    sim.w[1].pos = y;
    sim.w[0].manual = make_manual(seeds, 0, R, g.dim(), replica);
    sim.w[1].manual = make_manual(seeds, 1, R, g.dim(), replica);
    sim.w[0].env = &env1;
    sim.w[1].env = &env2;
    ProximityStats st = make_stats(ells);
    run_separate(sim, st, horizon, [](double, double) {});
    return st;
}

namespace
{

/// Evolve a single-environment pair from `start` (local time 0) until its first
/// state change or `limit`; optionally keep going to `limit` for the final state.
double run_single_until_change(PairSim& w, double limit, bool to_limit)
{
    double first_change = kInf;
    while (true)
    {
        const double tn = w.next_time();
        const double expiry = w.min_expiry();
        if (first_change == kInf && expiry <= std::min(tn, limit))
            first_change = expiry;
        if (tn > limit)
            break;
        if (!to_limit && first_change < kInf)
            break;
        const bool changed = w.step();
        if (changed && first_change == kInf)
            first_change = tn;
    }
    return first_change;
}

} // namespace

SingleSeparateResult couple_single_separate(const Topology& g, const Vertex& x, const Vertex& y, double p, double v,
                                            int R, double horizon, const SeedScheme& seeds, std::uint64_t replica,
                                            PairState* w_final)
{
    check_pair_args(g, x, y, p, v, R, horizon);
    Environment env1(seeds, p, v, replica, 1), env2(seeds, p, v, replica, 2);
    PairSim z(g, R);
    z.w[0].pos = x;
    z.w[1].pos = y;
    z.w[0].manual = make_manual(seeds, 0, R, g.dim(), replica);
    z.w[1].manual = make_manual(seeds, 1, R, g.dim(), replica);
    z.w[0].env = &env1;
    z.w[1].env = &env2;

    SingleSeparateResult res;
    ProximityStats st = make_stats({R, 2 * R});
    double z_change = kInf;
    PairState at_tau;
    run_separate(z, st, horizon, [&](double t, double change) {
        if (res.tau_B == kInf)
        {
            if (z.proximity(t) <= R)
            {
                res.tau_B = t;
                at_tau = z.state(t);
            }
        }
        else if (z_change == kInf)
            z_change = change;
    });
    res.proximity = st;

    if (res.tau_B == kInf)
    {
        if (w_final)
            *w_final = z.state(horizon);
        return res;
    }
    // A refresh after Z's last attempt is not seen by the attempt callback.
    if (z_change == kInf)
        z_change = z.min_expiry();

    // Single-environment chain W from Z's state at tau_B, in local time.
    Environment envw(seeds, p, v, replica, 3);
    // Z's walkers may disagree on an edge they both know only once they are
    // inside the disagreement set; W cannot hold that state, so the coupling
    // counts as broken at tau_B and W keeps walker 1's view.
    bool conflict = false;
    std::vector<std::pair<Edge, bool>> pins;
    auto add_pin = [&](const Edge& e, bool open) {
        for (const auto& [f, o] : pins)
            if (f == e)
                return o == open;
        pins.emplace_back(e, open);
        return true;
    };
    for (const auto& e : at_tau.A1)
        add_pin(e, true);
    for (const auto& e : at_tau.B1)
        add_pin(e, false);
    std::vector<Edge> A2, B2;
    for (const auto& e : at_tau.A2)
        add_pin(e, true) ? A2.push_back(e) : void(conflict = true);
    for (const auto& e : at_tau.B2)
        add_pin(e, false) ? B2.push_back(e) : void(conflict = true);
    for (const auto& [e, o] : pins)
        envw.pin(e, o);
    PairSim w(g, R);
    w.w[0].pos = at_tau.X;
    w.w[1].pos = at_tau.Y;
    w.w[0].manual = make_manual(seeds, 0, R, g.dim(), replica, 3);
    w.w[1].manual = make_manual(seeds, 1, R, g.dim(), replica, 3);
    w.w[0].env = &envw;
    w.w[1].env = &envw;
    for (const auto& e : at_tau.A1)
        w.w[0].knowledge.reveal(e, true, envw.next_refresh(e, 0.0));
    for (const auto& e : at_tau.B1)
        w.w[0].knowledge.reveal(e, false, envw.next_refresh(e, 0.0));
    for (const auto& e : A2)
        w.w[1].knowledge.reveal(e, true, envw.next_refresh(e, 0.0));
    for (const auto& e : B2)
        w.w[1].knowledge.reveal(e, false, envw.next_refresh(e, 0.0));
    if (conflict)
        z_change = res.tau_B;
    const double w_change = run_single_until_change(w, horizon - res.tau_B, w_final != nullptr);
    res.break_time = std::min(z_change, res.tau_B + w_change);
    if (res.break_time > horizon)
        res.break_time = kInf;
    if (w_final)
        *w_final = w.state(horizon - res.tau_B);
    return res;
}

PairState single_env_pair(const Topology& g, const Vertex& x, const Vertex& y, double p, double v, int R,
                          double horizon, const SeedScheme& seeds, std::uint64_t replica)
{
    check_pair_args(g, x, y, p, v, R, horizon);
    Environment env(seeds, p, v, replica, 4);
    PairSim w(g, R);
    w.w[0].pos = x;
    w.w[1].pos = y;
    w.w[0].manual = make_manual(seeds, 0, R, g.dim(), replica, 4);
    w.w[1].manual = make_manual(seeds, 1, R, g.dim(), replica, 4);
    w.w[0].env = &env;
    w.w[1].env = &env;
    while (w.next_time() <= horizon)
        w.step();
    return w.state(horizon);
}

FunctionalReport estimate_f_ell(const Topology& g, const Vertex& x, const Vertex& y, int ell, double p, double v,
                                int R, double horizon, std::uint64_t N, const SeedScheme& seeds)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < N; ++r)
        hits += separate_proximity(g, x, y, {ell}, p, v, R, horizon, seeds, r).hit[0] ? 1 : 0;
    return FunctionalReport{"f_ell", wilson(hits, N), N, horizon, seeds.master_seed};
}

FunctionalReport estimate_g_ell(const Topology& g, const Vertex& x, const Vertex& y, int ell, double p, double v,
                                int R, double horizon, std::uint64_t N, const SeedScheme& seeds)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    Accumulator acc;
    for (std::uint64_t r = 0; r < N; ++r)
        acc.add(separate_proximity(g, x, y, {ell}, p, v, R, horizon, seeds, r).occupation[0]);
    return FunctionalReport{"g_ell", normal_estimate(acc), N, horizon, seeds.master_seed};
}

} // namespace ips
