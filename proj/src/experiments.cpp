#include "ips/experiments.hpp"

#include "ips/exact.hpp"

#include <algorithm>
#include <cmath>

namespace ips
{

int default_workers()
{
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

SiteConfig bernoulli_sites(const Topology& g, double alpha, const SeedScheme& seeds, std::uint64_t replica)
{
    check_probability(alpha, "alpha");
    CounterRng rng = seeds.stream(StreamTag::sampler, 0x73697465ULL, replica);
    SiteConfig eta(g.vertex_count());
    for (auto& s : eta)
        s = rng.bernoulli(alpha) ? 1 : 0;
    return eta;
}

std::string to_string(Model m)
{
    switch (m)
    {
    case Model::voter:
        return "voter";
    case Model::stirring:
        return "stirring";
    case Model::vmdyn:
        return "vmdyn";
    }
    return "?";
}

Model parse_model(const std::string& s)
{
    if (s == "voter")
        return Model::voter;
    if (s == "stirring")
        return Model::stirring;
    if (s == "vmdyn")
        return Model::vmdyn;
    throw DomainError("unknown model '" + s + "' (expected voter, stirring or vmdyn)");
}

namespace
{

/// Independent scheme for a second family of runs under the same master seed.
SeedScheme derived(const SeedScheme& s, std::uint64_t salt)
{
    return SeedScheme{mix64(s.master_seed ^ mix64(salt))};
}

bool ones_on(const Topology& g, const SiteConfig& eta, const std::vector<Vertex>& set)
{
    return std::all_of(set.begin(), set.end(), [&](const Vertex& x) { return eta[g.index_of(x)] == 1; });
}

std::size_t edge_position(const std::vector<Edge>& edges, const Edge& e)
{
    const auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it == edges.end() || !(*it == e))
        throw DomainError("edge " + to_string(e) + " is not an edge of the graph");
    return static_cast<std::size_t>(it - edges.begin());
}

void check_sites(const Topology& g, const SiteConfig& eta)
{
    if (eta.size() != g.vertex_count())
        throw DomainError("site configuration has the wrong size");
}

void finish(DualityReport& r)
{
    r.pass = true;
    if (r.has_exact)
        r.pass = std::abs(r.lhs_exact - r.rhs_exact) <= kExactTolerance;
    if (r.lhs.n > 0)
        r.pass = r.pass && std::abs(r.lhs.mean - r.rhs.mean) <= 3.0 * r.pooled;
}

void mc_sides(DualityReport& r, const std::vector<double>& lhs, const std::vector<double>& rhs)
{
    Accumulator a, b;
    for (double x : lhs)
        a.add(x);
    for (double x : rhs)
        b.add(x);
    r.lhs = normal_estimate(a);
    r.rhs = normal_estimate(b);
    r.pooled = pooled_se(r.lhs.se, r.rhs.se);
}

std::uint32_t site_mask(const SiteConfig& eta)
{
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < eta.size(); ++i)
        if (eta[i])
            m |= 1u << i;
    return m;
}

template <class Fwd, class Dual>
void exact_set_duality(DualityReport& r, const Topology& g, const DualityQuery& q, const Fwd& fwd, const Dual& dual)
{
    const std::size_t n = g.vertex_count();
    if (n > 16)
        return;
    const std::uint32_t eta = site_mask(q.eta0);
    const std::uint32_t a = exact::vertex_mask(g, q.C);
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(Eigen::Index{1} << n);
    p0(eta) = 1.0;
    const Eigen::VectorXd pf = fwd.transient(p0, q.t);
    Eigen::VectorXd d0 = Eigen::VectorXd::Zero(Eigen::Index{1} << n);
    d0(a) = 1.0;
    const Eigen::VectorXd pd = dual.transient(d0, q.t);
    r.lhs_exact = r.rhs_exact = 0.0;
    for (Eigen::Index s = 0; s < pf.size(); ++s)
    {
        const auto m = static_cast<std::uint32_t>(s);
        if ((m & a) == a)
            r.lhs_exact += pf(s);
        if ((m & eta) == m)
            r.rhs_exact += pd(s);
    }
    r.has_exact = true;
}

} // namespace

DualityReport duality_check_voter(const Topology& g, const DualityQuery& q, const SeedScheme& seeds)
{
    check_sites(g, q.eta0);
    if (q.t < 0.0)
        throw DomainError("t must be non-negative");
    DualityReport r;
    r.model = Model::voter;
    r.t = q.t;
    if (q.exact && g.vertex_count() <= 12)
        exact_set_duality(r, g, q, exact::voter(g, q.R), exact::coalescing_sets(g, q.R));
    if (q.N > 0)
    {
        const SeedScheme dual_seeds = derived(seeds, 1);
        SimOptions opt;
        opt.horizon = q.t;
        const auto lhs = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
            if (q.t == 0.0)
                return ones_on(g, q.eta0, q.C) ? 1.0 : 0.0;
            const Trajectory tr = simulate_voter(g, q.eta0, q.R, opt, seeds, rep);
            return ones_on(g, tr.final_state.eta, q.C) ? 1.0 : 0.0;
        });
        const auto rhs = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
            if (q.C.empty())
                return 1.0;
            const CoalescingResult res = simulate_coalescing(g, q.C, q.t, dual_seeds, rep, q.R);
            return ones_on(g, q.eta0, res.live_set()) ? 1.0 : 0.0;
        });
        mc_sides(r, lhs, rhs);
    }
    finish(r);
    return r;
}

DualityReport duality_check_stirring(const Topology& g, const DualityQuery& q, const SeedScheme& seeds)
{
    check_sites(g, q.eta0);
    check_rate(q.v);
    if (q.t < 0.0)
        throw DomainError("t must be non-negative");
    DualityReport r;
    r.model = Model::stirring;
    r.t = q.t;
    if (q.exact && g.vertex_count() <= 12)
        exact_set_duality(r, g, q, exact::stirring(g, q.v), exact::stirring_sets(g, q.v));
    if (q.N > 0)
    {
        const SeedScheme dual_seeds = derived(seeds, 2);
        SimOptions opt;
        opt.horizon = q.t;
        const auto lhs = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
            if (q.t == 0.0)
                return ones_on(g, q.eta0, q.C) ? 1.0 : 0.0;
            const Trajectory tr = simulate_stirring(g, q.eta0, q.v, opt, seeds, rep);
            return ones_on(g, tr.final_state.eta, q.C) ? 1.0 : 0.0;
        });
        const auto rhs = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
            if (q.C.empty())
                return 1.0;
            const CoalescingResult res = simulate_coalescing_stirring(g, q.C, q.v, q.t, dual_seeds, rep);
            return ones_on(g, q.eta0, res.live_set()) ? 1.0 : 0.0;
        });
        mc_sides(r, lhs, rhs);
    }
    finish(r);
    return r;
}

DualityReport duality_check_vmdyn(const Topology& g, const DualityQuery& q, const SeedScheme& seeds)
{
    check_sites(g, q.eta0);
    check_probability(q.p);
    check_rate(q.v);
    check_dual_start(g, q.C, q.E, q.F);
    if (q.t < 0.0)
        throw DomainError("t must be non-negative");
    const std::vector<Edge> edges = g.edges();
    if (q.zeta0.size() != edges.size())
        throw DomainError("edge configuration has the wrong size");
    DualityReport r;
    r.model = Model::vmdyn;
    r.t = q.t;
    if ((q.p == 0.0 && !q.E.empty()) || (q.p == 1.0 && !q.F.empty()))
    {
        r.excluded = true;
        r.note = "dual weights p^-|A| (1-p)^-|B| are undefined at this boundary value of p; reported as excluded";
        r.pass = true;
        return r;
    }
    const double p = q.p;
    auto weight = [&](std::size_t nE, std::size_t nF, std::size_t nA, std::size_t nB) {
        return std::pow(p, static_cast<double>(nE) - static_cast<double>(nA)) *
               std::pow(1.0 - p, static_cast<double>(nF) - static_cast<double>(nB));
    };
    auto edges_match = [&](const EdgeConfig& z, const std::vector<Edge>& open, const std::vector<Edge>& closed) {
        for (const auto& e : open)
            if (!z[edge_position(edges, e)])
                return false;
        for (const auto& e : closed)
            if (z[edge_position(edges, e)])
                return false;
        return true;
    };

    const std::size_t n = g.vertex_count(), m = edges.size();
    if (q.exact && n + m <= 16)
    {
        const exact::DualSpace sp = exact::dual_space(g);
        if (sp.size() <= exact::kMaxStates)
        {
            const std::uint32_t eta = site_mask(q.eta0);
            std::uint32_t zeta = 0;
            for (std::size_t i = 0; i < m; ++i)
                if (q.zeta0[i])
                    zeta |= 1u << i;
            const std::uint32_t c = exact::vertex_mask(g, q.C);
            const std::uint32_t e = exact::edge_mask(g, q.E), f = exact::edge_mask(g, q.F);
            const auto fwd = exact::vmdyn(g, p, q.v, q.R);
            Eigen::VectorXd p0 = Eigen::VectorXd::Zero(fwd.size());
            p0(static_cast<Eigen::Index>(eta | (zeta << n))) = 1.0;
            const Eigen::VectorXd pf = fwd.transient(p0, q.t);
            r.lhs_exact = 0.0;
            for (Eigen::Index s = 0; s < pf.size(); ++s)
            {
                const auto st = static_cast<std::uint32_t>(s);
                const std::uint32_t et = st & ((1u << n) - 1), zt = st >> n;
                if ((et & c) == c && (zt & e) == e && (zt & f) == 0)
                    r.lhs_exact += pf(s);
            }
            const auto dual = exact::dual_chain(g, p, q.v, q.R);
            Eigen::VectorXd d0 = Eigen::VectorXd::Zero(dual.size());
            d0(static_cast<Eigen::Index>(sp.index(c, e, f))) = 1.0;
            const Eigen::VectorXd pd = dual.transient(d0, q.t);
            r.rhs_exact = 0.0;
            for (Eigen::Index s = 0; s < pd.size(); ++s)
            {
                if (pd(s) == 0.0)
                    continue;
                std::uint32_t C, A, B;
                sp.decode(static_cast<std::size_t>(s), C, A, B);
                if ((C & eta) != C || (A & zeta) != A || (B & zeta) != 0)
                    continue;
                r.rhs_exact += pd(s) * weight(q.E.size(), q.F.size(), static_cast<std::size_t>(__builtin_popcount(A)),
                                              static_cast<std::size_t>(__builtin_popcount(B)));
            }
            r.has_exact = true;
        }
    }
    if (q.N > 0)
    {
        const SeedScheme dual_seeds = derived(seeds, 3);
        SimOptions opt;
        opt.horizon = q.t;
        const JointState init{q.eta0, q.zeta0};
        const auto lhs = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
            if (q.t == 0.0)
                return ones_on(g, q.eta0, q.C) && edges_match(q.zeta0, q.E, q.F) ? 1.0 : 0.0;
            const Trajectory tr = simulate_vmdyn(g, init, p, q.v, q.R, opt, seeds, rep);
            return ones_on(g, tr.final_state.eta, q.C) && edges_match(tr.final_state.zeta, q.E, q.F) ? 1.0 : 0.0;
        });
        const auto rhs = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
            const DualChainResult res =
                simulate_dual_chain(g, q.C, q.E, q.F, p, q.v, q.R, q.t, dual_seeds, rep, q.method);
            const DualChainState& s = res.final_state;
            if (!ones_on(g, q.eta0, s.C) || !edges_match(q.zeta0, s.A, s.B))
                return 0.0;
            return weight(q.E.size(), q.F.size(), s.A.size(), s.B.size());
        });
        mc_sides(r, lhs, rhs);
    }
    finish(r);
    return r;
}

// ------------------------------------------------------- correlations

namespace
{

struct DualSample
{
    std::size_t at_t = 0;
    std::size_t at_end = 0;
};

DualSample dual_sizes(const Topology& g, const ModelParams& m, const std::vector<Vertex>& C,
                      const std::vector<Edge>& E, const std::vector<Edge>& F, double t_star, double end,
                      const SeedScheme& seeds, std::uint64_t rep)
{
    DualSample s;
    if (C.empty())
        return s;
    const std::vector<double> snaps{t_star};
    switch (m.model)
    {
    case Model::voter: {
        const CoalescingResult res = simulate_coalescing(g, C, end, seeds, rep, m.R, snaps);
        s.at_t = res.snapshot_counts.at(0);
        s.at_end = res.live_count();
        break;
    }
    case Model::stirring: {
        const CoalescingResult res = simulate_coalescing_stirring(g, C, m.v, end, seeds, rep, snaps);
        s.at_t = res.snapshot_counts.at(0);
        s.at_end = res.live_count();
        break;
    }
    case Model::vmdyn: {
        const DualChainResult res =
            simulate_dual_chain(g, C, E, F, m.p, m.v, m.R, end, seeds, rep, m.method, snaps);
        s.at_t = res.snapshots.at(0).C.size();
        s.at_end = res.final_state.C.size();
        break;
    }
    }
    return s;
}

} // namespace

CorrelationReport estimate_mu_correlation(const Topology& g, const ModelParams& m, const CorrelationQuery& q,
                                          const SeedScheme& seeds)
{
    check_probability(q.alpha, "alpha");
    if (q.N == 0)
        throw DomainError("replica count must be positive");
    if (!(q.t_star >= 0.0))
        throw DomainError("truncation time must be non-negative");
    if (m.model == Model::vmdyn)
    {
        check_probability(m.p);
        check_dual_start(g, q.C, q.E, q.F);
    }
    else if (!q.E.empty() || !q.F.empty())
        throw DomainError("revealed edges only make sense for the dynamical-percolation model");
    const double ext = q.bias_extension < 0.0 ? q.t_star : q.bias_extension;
    const double edge_weight = std::pow(m.p, static_cast<double>(q.E.size())) *
                               std::pow(1.0 - m.p, static_cast<double>(q.F.size()));
    const auto samples = run_replicas(q.N, q.workers, [&](std::uint64_t rep) {
        return dual_sizes(g, m, q.C, q.E, q.F, q.t_star, q.t_star + ext, seeds, rep);
    });
    CorrelationReport out;
    Accumulator acc;
    std::uint64_t later = 0;
    out.samples.reserve(samples.size());
    for (const auto& s : samples)
    {
        const double value = edge_weight * std::pow(q.alpha, static_cast<double>(s.at_t));
        out.samples.push_back(value);
        acc.add(value);
        later += s.at_end < s.at_t ? 1 : 0;
    }
    out.estimate = normal_estimate(acc);
    out.bias = wilson(later, q.N);
    out.bias_bound = ext > 0.0 ? out.bias.ci_high : 0.0;
    return out;
}

Estimate forward_density(const Topology& g, const ModelParams& m, double alpha, double t, std::uint64_t N,
                         const SeedScheme& seeds, int workers)
{
    check_probability(alpha, "alpha");
    if (N == 0)
        throw DomainError("replica count must be positive");
    SimOptions opt;
    opt.horizon = t;
    const auto vals = run_replicas(N, workers, [&](std::uint64_t rep) {
        const SiteConfig eta0 = bernoulli_sites(g, alpha, seeds, rep);
        Trajectory tr;
        switch (m.model)
        {
        case Model::voter:
            tr = simulate_voter(g, eta0, m.R, opt, seeds, rep);
            break;
        case Model::stirring:
            tr = simulate_stirring(g, eta0, m.v, opt, seeds, rep);
            break;
        case Model::vmdyn:
            tr = simulate_vmdyn(g, JointState{eta0, stationary_edges(g, m.p, seeds, rep)}, m.p, m.v, m.R, opt,
                                seeds, rep);
            break;
        }
        double ones = 0.0;
        for (auto s : tr.final_state.eta)
            ones += s;
        return ones / static_cast<double>(tr.final_state.eta.size());
    });
    Accumulator acc;
    for (double x : vals)
        acc.add(x);
    return normal_estimate(acc);
}

// ----------------------------------------------------------- collisions

CollisionReport collision_experiment(const Topology& g, const Vertex& x, const Vertex& y,
                                     const std::vector<double>& horizons, const CollisionParams& c,
                                     const SeedScheme& seeds)
{
    check_probability(c.p);
    check_rate(c.v);
    if (horizons.empty() || c.N == 0)
        throw DomainError("need at least one horizon and a positive replica count");
    if (!g.has_balls())
        throw UnsupportedTopology("walker flows need l1 balls");
    const double H = *std::max_element(horizons.begin(), horizons.end());
    const auto hit_times = run_replicas(c.N, c.workers, [&](std::uint64_t rep) {
        if (g.distance(x, y) <= c.ell)
            return 0.0;
        const bool single = c.env == EnvMode::single;
        Environment env1(seeds, c.p, c.v, rep, single ? 0 : 1), env2(seeds, c.p, c.v, rep, 2);
        FlowWalker w[2];
        w[0].pos = x;
        w[1].pos = y;
        w[0].manual = make_manual(seeds, 0, c.R, g.dim(), rep);
        w[1].manual = make_manual(seeds, 1, c.R, g.dim(), rep);
        w[0].env = &env1;
        w[1].env = single ? &env1 : &env2;
        while (true)
        {
            const int i = w[0].manual.peek().time <= w[1].manual.peek().time ? 0 : 1;
            const double t = w[i].manual.peek().time;
            if (t > H)
                return kInf;
            flow_attempt(g, w[i], Reveal::none);
            if (g.distance(w[0].pos, w[1].pos) <= c.ell)
                return t;
        }
    });
    CollisionReport out;
    out.horizons = horizons;
    for (double h : horizons)
    {
        std::uint64_t hits = 0;
        for (double t : hit_times)
            hits += t <= h ? 1 : 0;
        out.hit.push_back(wilson(hits, c.N));
    }
    return out;
}

DecayReport meeting_decay_check(int d, int L, const std::vector<int>& distances, double horizon, std::uint64_t N,
                                const SeedScheme& seeds, int workers)
{
    if (d < 1 || d > kMaxDim)
        throw DomainError("dimension out of range");
    if (L < 0 || !(horizon > 0.0) || N == 0 || distances.empty())
        throw DomainError("need L >= 0, a positive horizon, replicas and distances");
    DecayReport out;
    out.distances = distances;
    for (int k : distances)
    {
        const auto hits = run_replicas(N, workers, [&](std::uint64_t rep) {
            if (k <= L)
                return 1;
            // difference of two independent rate-1 walks: a rate-2 walk
            CounterRng rng = seeds.stream(StreamTag::walker, static_cast<std::uint64_t>(k), rep);
            int pos[kMaxDim] = {k, 0, 0, 0};
            int norm = k;
            double t = rng.exponential(2.0);
            while (t <= horizon)
            {
                const auto c = rng.below(static_cast<std::uint64_t>(2 * d));
                int& coord = pos[c / 2];
                const int step = (c % 2) ? 1 : -1;
                norm += std::abs(coord + step) - std::abs(coord);
                coord += step;
                if (norm <= L)
                    return 1;
                t += rng.exponential(2.0);
            }
            return 0;
        });
        std::uint64_t h = 0;
        for (int x : hits)
            h += static_cast<std::uint64_t>(x);
        out.hit.push_back(wilson(h, N));
    }
    out.decreasing = true;
    for (std::size_t i = 1; i < out.hit.size(); ++i)
        out.decreasing = out.decreasing && out.hit[i].mean < out.hit[i - 1].mean;
    std::vector<double> lx, ly, w;
    for (std::size_t i = 0; i < distances.size(); ++i)
        if (out.hit[i].mean > 0.0 && distances[i] > L)
        {
            lx.push_back(std::log(static_cast<double>(distances[i])));
            ly.push_back(std::log(out.hit[i].mean));
            const double rel = out.hit[i].se / out.hit[i].mean;
            w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
        }
    if (lx.size() >= 2)
    {
        out.fit = linear_fit(lx, ly, w);
        out.consistent = std::abs(out.fit.slope + (d - 2)) <= 0.75;
    }
    return out;
}

// -------------------------------------------------------- regenerations

RegenerationReport regeneration_experiment(const Topology& g, const Vertex& x, const Vertex& y, double p, double v,
                                           int R, int horizon, std::uint64_t N, const SeedScheme& seeds, int workers)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    struct Row
    {
        int s1 = -1, s2 = -1;
        int rel1 = 0, rel2 = 0;
        std::uint64_t S1 = 0;
    };
    const auto rows = run_replicas(N, workers, [&](std::uint64_t rep) {
        const SeparatePairRecord rec = simulate_separate_pair(g, x, y, p, v, R, horizon, seeds, rep);
        const RegenerationRecord reg = detect_regenerations(rec);
        Row row;
        if (reg.sigma.size() > 1)
        {
            row.s1 = reg.sigma[1];
            row.rel1 = reg.dX[0](0) - reg.dY[0](0);
            row.S1 = reg.S[0];
        }
        if (reg.sigma.size() > 2)
        {
            row.s2 = reg.sigma[2];
            row.rel2 = reg.dX[1](0) - reg.dY[1](0);
        }
        return row;
    });
    RegenerationReport out;
    out.N = N;
    out.horizon = horizon;
    std::uint64_t seen = 0;
    std::vector<double> inc1, inc2;
    Accumulator attempts;
    std::vector<std::uint64_t> survive(static_cast<std::size_t>(horizon) + 1, 0);
    for (const auto& r : rows)
    {
        if (r.s1 >= 0)
        {
            ++seen;
            attempts.add(static_cast<double>(r.S1));
        }
        const int s1 = r.s1 >= 0 ? r.s1 : horizon + 1;
        for (int t = 0; t < s1 && t <= horizon; ++t)
            ++survive[static_cast<std::size_t>(t)];
        if (r.s2 >= 0)
        {
            out.first.push_back(r.s1);
            out.second.push_back(r.s2 - r.s1);
            inc1.push_back(r.rel1);
            inc2.push_back(r.rel2);
        }
    }
    out.observed = wilson(seen, N);
    out.mean_attempts = normal_estimate(attempts);
    if (!out.first.empty())
    {
        out.ks_gaps = ks_two_sample(out.first, out.second);
        out.ks_increments = ks_two_sample(inc1, inc2);
    }
    std::vector<double> ts, logp, w;
    for (int t = 1; t <= horizon; ++t)
    {
        const double c = static_cast<double>(survive[static_cast<std::size_t>(t)]);
        const double pr = c / static_cast<double>(N);
        out.tail_t.push_back(t);
        out.tail_p.push_back(pr);
        // keep points with enough survivors for a stable logarithm
        if (c >= 20.0 && pr < 1.0)
        {
            ts.push_back(t);
            logp.push_back(std::log(pr));
            w.push_back(c * static_cast<double>(N) / (static_cast<double>(N) - c));
        }
    }
    if (ts.size() >= 3)
        out.tail_fit = linear_fit(ts, logp, w);
    return out;
}

// -------------------------------------------------------------- mixing

namespace
{

Vertex shift_vector(int d, int s)
{
    Vertex z = origin(d);
    z(0) = s;
    return z;
}

} // namespace

MixingReport mixing_check(const Topology& g, const std::vector<Vertex>& A, const std::vector<Vertex>& B,
                          const std::vector<Edge>& E1, const std::vector<Edge>& E2, double alpha,
                          const std::vector<int>& shifts, const ModelParams& m, double t_star, std::uint64_t N,
                          const SeedScheme& seeds, int workers)
{
    if (shifts.empty())
        throw DomainError("need at least one shift");
    CorrelationQuery q;
    q.alpha = alpha;
    q.t_star = t_star;
    q.N = N;
    q.workers = workers;
    MixingReport out;
    out.shifts = shifts;

    q.C = A;
    q.E = E1;
    const CorrelationReport left = estimate_mu_correlation(g, m, q, derived(seeds, 11));
    q.C = B;
    q.E = E2;
    const CorrelationReport right = estimate_mu_correlation(g, m, q, derived(seeds, 12));
    out.left = left.estimate;
    out.right = right.estimate;
    out.bias_bound = std::max(left.bias_bound, right.bias_bound);

    for (int s : shifts)
    {
        const Vertex z = shift_vector(g.dim(), s);
        std::vector<Vertex> C = A;
        std::vector<Edge> E = E1;
        for (const auto& b : B)
        {
            const auto bz = g.translate(b, z);
            if (!bz)
                throw DomainError("shifted set leaves the graph");
            if (std::any_of(C.begin(), C.end(), [&](const Vertex& a) { return same_vertex(a, *bz); }))
                throw DomainError("shifted site set overlaps the first set at shift " + std::to_string(s));
            C.push_back(*bz);
        }
        for (const auto& e : E2)
        {
            const auto lo = g.translate(e.lo, z), hi = g.translate(e.hi, z);
            if (!lo || !hi)
                throw DomainError("shifted edge leaves the graph");
            const Edge ez = make_edge(*lo, *hi);
            if (std::find(E.begin(), E.end(), ez) != E.end())
                throw DomainError("shifted edge set overlaps the first set at shift " + std::to_string(s));
            E.push_back(ez);
        }
        q.C = C;
        q.E = E;
        const CorrelationReport joint = estimate_mu_correlation(g, m, q, derived(seeds, 100 + static_cast<std::uint64_t>(s)));
        out.joint.push_back(joint.estimate);
        out.bias_bound = std::max(out.bias_bound, joint.bias_bound);
        Estimate gap;
        gap.mean = joint.estimate.mean - left.estimate.mean * right.estimate.mean;
        gap.se = std::sqrt(joint.estimate.se * joint.estimate.se +
                           std::pow(right.estimate.mean * left.estimate.se, 2) +
                           std::pow(left.estimate.mean * right.estimate.se, 2));
        gap.ci_low = gap.mean - kZ95 * gap.se;
        gap.ci_high = gap.mean + kZ95 * gap.se;
        gap.n = N;
        out.gap.push_back(gap);
    }
    return out;
}

ExchangeabilityReport exchangeability_check(const Topology& g, const std::vector<std::vector<Vertex>>& shapes,
                                            double alpha, const ModelParams& m, double t_star, std::uint64_t N,
                                            const SeedScheme& seeds, int workers)
{
    if (shapes.empty())
        throw DomainError("need at least one shape");
    const std::size_t k = shapes.front().size();
    ExchangeabilityReport out;
    out.shapes = shapes;
    double eps = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i)
    {
        if (shapes[i].size() != k)
            throw DomainError("all shapes must have the same number of sites");
        CorrelationQuery q;
        q.C = shapes[i];
        q.alpha = alpha;
        q.t_star = t_star;
        q.N = N;
        q.workers = workers;
        out.q.push_back(estimate_mu_correlation(g, m, q, derived(seeds, 200 + i)));
        eps = std::max(eps, out.q.back().bias_bound);
    }
    out.overlap = true;
    for (std::size_t i = 0; i < out.q.size(); ++i)
        for (std::size_t j = i + 1; j < out.q.size(); ++j)
        {
            const Estimate& a = out.q[i].estimate;
            const Estimate& b = out.q[j].estimate;
            out.overlap = out.overlap && std::abs(a.mean - b.mean) <= 3.0 * pooled_se(a.se, b.se) + 2.0 * eps;
        }
    return out;
}

// ---------------------------------------------------- coupling summaries

ContainmentSummary containment_experiment(const Topology& g, const std::vector<Vertex>& start, double horizon,
                                          std::uint64_t N, const SeedScheme& seeds, int R, int workers)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    const auto res = run_replicas(N, workers, [&](std::uint64_t rep) {
        return couple_coalescing_independent(g, start, horizon, seeds, rep, R);
    });
    ContainmentSummary out;
    out.N = N;
    std::uint64_t coalesced = 0;
    for (const auto& r : res)
    {
        out.checks += r.checks;
        out.violations += r.violations;
        coalesced += r.coalesced ? 1 : 0;
    }
    out.coalesced = wilson(coalesced, N);
    return out;
}

SingleSeparateSummary single_separate_experiment(const Topology& g, int distance, double p, double v, int R,
                                                 double horizon, std::uint64_t N, const SeedScheme& seeds,
                                                 int workers)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    const Vertex x = origin(g.dim());
    const Vertex y = shift_vector(g.dim(), distance);
    const auto res = run_replicas(N, workers, [&](std::uint64_t rep) {
        return couple_single_separate(g, x, y, p, v, R, horizon, seeds, rep);
    });
    std::uint64_t breaks = 0, hitsR = 0;
    Accumulator occ;
    for (const auto& r : res)
    {
        breaks += r.break_time <= horizon ? 1 : 0;
        hitsR += r.proximity.hit[0] ? 1 : 0;
        occ.add(r.proximity.occupation[1]);
    }
    SingleSeparateSummary out;
    out.distance = distance;
    out.breaks = wilson(breaks, N);
    out.g2R = normal_estimate(occ);
    out.fR = wilson(hitsR, N);
    out.bound_holds = out.breaks.mean <= 2.0 * out.g2R.mean + 3.0 * pooled_se(out.breaks.se, 2.0 * out.g2R.se);
    return out;
}

ProximitySummary proximity_experiment(const Topology& g, int distance, int ell, double p, double v, int R,
                                      double horizon, std::uint64_t N, const SeedScheme& seeds, int workers)
{
    if (N == 0)
        throw DomainError("replica count must be positive");
    const Vertex x = origin(g.dim());
    const Vertex y = shift_vector(g.dim(), distance);
    const auto res = run_replicas(N, workers, [&](std::uint64_t rep) {
        return separate_proximity(g, x, y, {ell}, p, v, R, horizon, seeds, rep);
    });
    std::uint64_t hits = 0;
    Accumulator occ;
    for (const auto& r : res)
    {
        hits += r.hit[0] ? 1 : 0;
        occ.add(r.occupation[0]);
    }
    ProximitySummary out;
    out.distance = distance;
    out.ell = ell;
    out.f = wilson(hits, N);
    out.g = normal_estimate(occ);
    return out;
}

} // namespace ips
