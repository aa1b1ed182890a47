#include "ips/config.hpp"

#include "ips/dynamics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ips
{

namespace
{

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? sep : "") + v[i];
    return s;
}

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        if (!trim(cur).empty())
            out.push_back(trim(cur));
    return out;
}

const std::map<std::string, std::set<std::string>>& allowed_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"kind", "seed", "reps", "horizon", "workers"}},
        {"topology", {"kind", "d", "side", "width", "height", "degree", "depth"}},
        {"model", {"name", "p", "v", "R", "alpha"}},
        {"query",
         {"eta0", "zeta0", "sites", "open_edges", "closed_edges", "t", "t_star", "x", "y", "ell", "distances",
          "shifts", "horizons", "env", "shapes", "branches", "tree_x", "coupling", "walk", "exact", "method"}},
        {"output", {"out"}},
    };
    return keys;
}

template <class T>
T number(const std::string& field, const std::string& value, std::vector<std::string>& problems)
{
    try
    {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_same_v<T, double>)
            out = std::stod(value, &used);
        else if constexpr (std::is_same_v<T, std::uint64_t>)
        {
            if (!value.empty() && value[0] == '-')
                throw std::invalid_argument("negative");
            out = std::stoull(value, &used);
        }
        else
            out = static_cast<T>(std::stoi(value, &used));
        if (used != value.size())
            throw std::invalid_argument("trailing characters");
        return out;
    }
    catch (const std::exception&)
    {
        problems.push_back("field '" + field + "': cannot read '" + value + "' as a number");
        return T{};
    }
}

std::vector<int> int_list(const std::string& field, const std::string& value, std::vector<std::string>& problems)
{
    std::vector<int> out;
    for (const auto& part : split(value, ','))
        out.push_back(number<int>(field, part, problems));
    return out;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems, "; ")), problems_(std::move(problems))
{
}

Topology make_topology(const TopologySpec& s)
{
    if (s.kind == "torus")
        return Topology::torus(s.d, s.side);
    if (s.kind == "lattice")
        return Topology::lattice(s.d);
    if (s.kind == "box")
        return Topology::box(s.d, s.side);
    if (s.kind == "comb")
        return Topology::comb(s.width, s.height);
    if (s.kind == "tree")
        return Topology::regular_tree(s.degree, s.depth);
    throw DomainError("unknown topology kind '" + s.kind + "' (expected torus, lattice, box, comb or tree)");
}

Vertex parse_vertex(const std::string& s)
{
    std::vector<int> c;
    for (const auto& part : split(s, ','))
    {
        std::size_t used = 0;
        int x = 0;
        try
        {
            x = std::stoi(part, &used);
        }
        catch (const std::exception&)
        {
            used = 0;
        }
        if (used != part.size() || part.empty())
            throw DomainError("cannot read vertex '" + s + "'");
        c.push_back(x);
    }
    if (c.empty() || c.size() > static_cast<std::size_t>(kMaxDim))
        throw DomainError("vertex '" + s + "' needs 1 to 4 coordinates");
    Vertex v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = c[i];
    return v;
}

std::vector<Vertex> parse_vertex_list(const std::string& s)
{
    std::vector<Vertex> out;
    for (const auto& part : split(s, ';'))
        out.push_back(parse_vertex(part));
    return out;
}

Edge parse_edge(const std::string& s)
{
    // the separator is the first '-' after a digit, so coordinates may be negative
    std::size_t pos = std::string::npos;
    for (std::size_t i = 1; i < s.size() && pos == std::string::npos; ++i)
        if (s[i] == '-' && (std::isdigit(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == ' '))
            pos = i;
    if (pos == std::string::npos)
        throw DomainError("cannot read edge '" + s + "' (expected a,b-c,d)");
    return make_edge(parse_vertex(s.substr(0, pos)), parse_vertex(s.substr(pos + 1)));
}

ExperimentConfig parse_config_string(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try
    {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    }
    catch (const pt::ini_parser_error& e)
    {
        throw ConfigError({std::string("malformed config: ") + e.message() + " at line " + std::to_string(e.line())});
    }

    std::vector<std::string> problems;
    std::map<std::string, std::string> flat;
    for (const auto& [section, body] : tree)
    {
        const auto it = allowed_keys().find(section);
        if (it == allowed_keys().end())
        {
            problems.push_back(body.empty() ? "top-level key '" + section + "' outside any section"
                                            : "unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, value] : body)
        {
            if (!it->second.count(key))
                problems.push_back("unknown key '" + section + "." + key + "'");
            else
                flat[section + "." + key] = trim(value.data());
        }
    }

    ExperimentConfig c;
    auto get = [&](const std::string& k) -> const std::string* {
        const auto it = flat.find(k);
        return it == flat.end() ? nullptr : &it->second;
    };
    auto guarded = [&](const std::string& field, auto&& fn) {
        try
        {
            fn();
        }
        catch (const std::exception& e)
        {
            problems.push_back("field '" + field + "': " + e.what());
        }
    };

    if (auto s = get("experiment.kind"))
        c.kind = *s;
    if (auto s = get("experiment.seed"))
        c.seed = number<std::uint64_t>("experiment.seed", *s, problems);
    if (auto s = get("experiment.reps"))
        c.reps = number<std::uint64_t>("experiment.reps", *s, problems);
    if (auto s = get("experiment.horizon"))
        c.horizon = number<double>("experiment.horizon", *s, problems);
    if (auto s = get("experiment.workers"))
        c.workers = number<int>("experiment.workers", *s, problems);

    if (auto s = get("topology.kind"))
        c.topology.kind = *s;
    else
        problems.push_back("missing required field 'topology.kind'");
    if (auto s = get("topology.d"))
        c.topology.d = number<int>("topology.d", *s, problems);
    if (auto s = get("topology.side"))
        c.topology.side = number<int>("topology.side", *s, problems);
    if (auto s = get("topology.width"))
        c.topology.width = number<int>("topology.width", *s, problems);
    if (auto s = get("topology.height"))
        c.topology.height = number<int>("topology.height", *s, problems);
    if (auto s = get("topology.degree"))
        c.topology.degree = number<int>("topology.degree", *s, problems);
    if (auto s = get("topology.depth"))
        c.topology.depth = number<int>("topology.depth", *s, problems);

    if (auto s = get("model.name"))
        guarded("model.name", [&] { c.model = parse_model(*s); });
    if (auto s = get("model.p"))
        c.p = number<double>("model.p", *s, problems);
    if (auto s = get("model.v"))
        c.v = number<double>("model.v", *s, problems);
    if (auto s = get("model.R"))
        c.R = number<int>("model.R", *s, problems);
    if (auto s = get("model.alpha"))
        c.alpha = number<double>("model.alpha", *s, problems);

    if (auto s = get("query.eta0"))
        c.eta0 = *s;
    if (auto s = get("query.zeta0"))
        c.zeta0 = *s;
    if (auto s = get("query.sites"))
        guarded("query.sites", [&] { c.sites = parse_vertex_list(*s); });
    if (auto s = get("query.open_edges"))
        guarded("query.open_edges", [&] {
            for (const auto& part : split(*s, ';'))
                c.open_edges.push_back(parse_edge(part));
        });
    if (auto s = get("query.closed_edges"))
        guarded("query.closed_edges", [&] {
            for (const auto& part : split(*s, ';'))
                c.closed_edges.push_back(parse_edge(part));
        });
    if (auto s = get("query.t"))
        c.t = number<double>("query.t", *s, problems);
    if (auto s = get("query.t_star"))
        c.t_star = number<double>("query.t_star", *s, problems);
    if (auto s = get("query.x"))
        guarded("query.x", [&] { c.x = parse_vertex(*s); });
    if (auto s = get("query.y"))
        guarded("query.y", [&] { c.y = parse_vertex(*s); });
    if (auto s = get("query.ell"))
        c.ell = number<int>("query.ell", *s, problems);
    if (auto s = get("query.distances"))
        c.distances = int_list("query.distances", *s, problems);
    if (auto s = get("query.shifts"))
        c.shifts = int_list("query.shifts", *s, problems);
    if (auto s = get("query.horizons"))
        for (const auto& part : split(*s, ','))
            c.horizons.push_back(number<double>("query.horizons", part, problems));
    if (auto s = get("query.env"))
    {
        if (*s == "single")
            c.env = EnvMode::single;
        else if (*s == "separate")
            c.env = EnvMode::separate;
        else
            problems.push_back("field 'query.env': expected single or separate");
    }
    if (auto s = get("query.shapes"))
        guarded("query.shapes", [&] {
            for (const auto& part : split(*s, '|'))
                c.shapes.push_back(parse_vertex_list(part));
        });
    if (auto s = get("query.branches"))
        c.branches = int_list("query.branches", *s, problems);
    if (auto s = get("query.tree_x"))
        c.tree_x = int_list("query.tree_x", *s, problems);
    if (auto s = get("query.coupling"))
        c.coupling = *s;
    if (auto s = get("query.walk"))
        c.walk = *s;
    if (auto s = get("query.exact"))
    {
        if (*s == "true" || *s == "1")
            c.exact = true;
        else if (*s == "false" || *s == "0")
            c.exact = false;
        else
            problems.push_back("field 'query.exact': expected true or false");
    }
    if (auto s = get("query.method"))
        c.method = *s;
    if (auto s = get("output.out"))
        c.out = *s;

    if (!problems.empty())
        throw ConfigError(problems);
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({"cannot read config file '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

std::vector<std::string> validate(const ExperimentConfig& c)
{
    std::vector<std::string> out;
    static const std::set<std::string> kinds{"simulate", "duality", "mu", "collision", "regen",
                                             "mixing", "couple-check", "exchangeability", "tree-measure"};
    if (!c.kind.empty() && !kinds.count(c.kind))
        out.push_back("unknown experiment kind '" + c.kind + "'");
    if (c.reps == 0)
        out.push_back("reps must be positive");
    if (!(c.horizon > 0.0))
        out.push_back("horizon must be positive");
    if (c.workers < 0)
        out.push_back("workers must be non-negative");
    if (!(c.p >= 0.0 && c.p <= 1.0))
        out.push_back("p must lie in [0,1]");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0))
        out.push_back("alpha must lie in [0,1]");
    if (!(c.v >= 0.0) || !std::isfinite(c.v))
        out.push_back("v must be a finite non-negative rate");
    if (c.model == Model::vmdyn && !(c.v > 0.0))
        out.push_back("v must be positive for dynamical percolation");
    if (c.R < 1)
        out.push_back("R must be at least 1");
    if (c.t < 0.0)
        out.push_back("t must be non-negative");
    if (c.t_star < 0.0)
        out.push_back("t_star must be non-negative");
    if (c.ell < 0)
        out.push_back("ell must be non-negative");
    if (c.coupling != "containment" && c.coupling != "single-separate" && c.coupling != "stirring-identity" &&
        c.coupling != "collision-identity")
        out.push_back("coupling must be containment, single-separate, stirring-identity or collision-identity");
    if (c.walk != "flow" && c.walk != "static")
        out.push_back("walk must be flow or static");
    if (c.method != "constructive" && c.method != "gillespie")
        out.push_back("method must be constructive or gillespie");

    std::optional<Topology> g;
    try
    {
        g = make_topology(c.topology);
    }
    catch (const std::exception& e)
    {
        out.push_back(std::string("topology: ") + e.what());
    }
    if (g && g->kind() == TopologyKind::torus && (c.model == Model::vmdyn || c.R > 1) &&
        g->side() <= 2 * c.R + 1)
        out.push_back("ball geometry constraint violated: torus side " + std::to_string(g->side()) +
                      " must exceed 2R+1 = " + std::to_string(2 * c.R + 1));

    for (const auto& e : c.open_edges)
        if (std::find(c.closed_edges.begin(), c.closed_edges.end(), e) != c.closed_edges.end())
            out.push_back("revealed sets must be disjoint: edge " + to_string(e) + " is both open and closed");

    if (g)
    {
        const bool tree = g->kind() == TopologyKind::tree;
        auto check_vertex = [&](const Vertex& x, const std::string& what) {
            if (tree || !g->contains(x))
                out.push_back(what + " " + to_string(x) + " is not a vertex of " + g->describe());
        };
        for (const auto& x : c.sites)
            check_vertex(x, "site");
        for (const auto* set : {&c.open_edges, &c.closed_edges})
            for (const auto& e : *set)
            {
                if (tree || !g->contains(e.lo) || !g->contains(e.hi) || g->distance(e.lo, e.hi) != 1)
                    out.push_back("edge " + to_string(e) + " is not an edge of " + g->describe());
            }
        if (c.x)
            check_vertex(*c.x, "x");
        if (c.y)
            check_vertex(*c.y, "y");
        for (const auto& shape : c.shapes)
            for (const auto& x : shape)
                check_vertex(x, "shape site");
        const bool needs_finite = c.kind == "simulate" || c.kind == "duality";
        if (needs_finite && !g->finite())
            out.push_back(c.kind + " needs a finite topology");
        if ((c.kind == "collision" || c.kind == "regen") && c.walk == "flow" && (!c.x || !c.y))
            out.push_back(c.kind + " needs query.x and query.y");
        if (c.kind == "tree-measure" && !tree)
            out.push_back("tree-measure needs a tree topology");
        if (g->finite() && (c.kind == "simulate" || c.kind == "duality"))
        {
            const auto n = g->vertex_count();
            if (c.eta0 != "all0" && c.eta0 != "all1" && c.eta0 != "bernoulli" && c.eta0 != "stripe" &&
                split(c.eta0, ',').size() != n)
                out.push_back("eta0 must be all0, all1, bernoulli, stripe or a list of " + std::to_string(n) +
                              " values");
            if (c.model == Model::vmdyn && c.zeta0 != "all_open" && c.zeta0 != "all_closed" &&
                c.zeta0 != "stationary" && split(c.zeta0, ',').size() != g->edges().size())
                out.push_back("zeta0 must be all_open, all_closed, stationary or a list of " +
                              std::to_string(g->edges().size()) + " values");
        }
    }
    if (c.kind == "mixing" && c.shifts.empty())
        out.push_back("mixing needs query.shifts");
    if (c.kind == "exchangeability" && c.shapes.empty())
        out.push_back("exchangeability needs query.shapes");
    return out;
}

namespace
{

/// Shortest text that reads back to the same double.
std::string num(double x)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string vertex_text(const Vertex& x)
{
    std::string out;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out += (i ? "," : "") + std::to_string(x(i));
    return out;
}

std::string vertices_text(const std::vector<Vertex>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        out += (i ? ";" : "") + vertex_text(xs[i]);
    return out;
}

std::string edges_text(const std::vector<Edge>& es)
{
    std::string out;
    for (std::size_t i = 0; i < es.size(); ++i)
        out += (i ? ";" : "") + vertex_text(es[i].lo) + "-" + vertex_text(es[i].hi);
    return out;
}

template <class T>
std::string list_text(const std::vector<T>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        out += i ? "," : "";
        if constexpr (std::is_floating_point_v<T>)
            out += num(xs[i]);
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

} // namespace

std::string config_echo(const ExperimentConfig& c)
{
    std::ostringstream os;
    auto line = [&](const char* key, const std::string& value) {
        if (!value.empty())
            os << key << " = " << value << "\n";
    };
    os << "[experiment]\n";
    line("kind", c.kind);
    line("seed", std::to_string(c.seed));
    line("reps", std::to_string(c.reps));
    line("horizon", num(c.horizon));
    os << "\n[topology]\n";
    line("kind", c.topology.kind);
    line("d", std::to_string(c.topology.d));
    line("side", std::to_string(c.topology.side));
    line("width", std::to_string(c.topology.width));
    line("height", std::to_string(c.topology.height));
    line("degree", std::to_string(c.topology.degree));
    line("depth", std::to_string(c.topology.depth));
    os << "\n[model]\n";
    line("name", to_string(c.model));
    line("p", num(c.p));
    line("v", num(c.v));
    line("R", std::to_string(c.R));
    line("alpha", num(c.alpha));
    os << "\n[query]\n";
    line("eta0", c.eta0);
    line("zeta0", c.zeta0);
    line("sites", vertices_text(c.sites));
    line("open_edges", edges_text(c.open_edges));
    line("closed_edges", edges_text(c.closed_edges));
    line("t", num(c.t));
    line("t_star", num(c.t_star));
    if (c.x)
        line("x", vertex_text(*c.x));
    if (c.y)
        line("y", vertex_text(*c.y));
    line("ell", std::to_string(c.ell));
    line("distances", list_text(c.distances));
    line("shifts", list_text(c.shifts));
    line("horizons", list_text(c.horizons));
    line("env", c.env == EnvMode::single ? "single" : "separate");
    std::string shapes;
    for (std::size_t i = 0; i < c.shapes.size(); ++i)
        shapes += (i ? "|" : "") + vertices_text(c.shapes[i]);
    line("shapes", shapes);
    line("branches", list_text(c.branches));
    line("tree_x", list_text(c.tree_x));
    line("coupling", c.coupling);
    line("walk", c.walk);
    line("exact", c.exact ? "true" : "false");
    line("method", c.method);
    return os.str();
}

SiteConfig initial_sites(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds,
                         std::uint64_t replica)
{
    if (c.eta0 == "all0")
        return constant_sites(g, 0);
    if (c.eta0 == "all1")
        return constant_sites(g, 1);
    if (c.eta0 == "bernoulli")
        return bernoulli_sites(g, c.alpha, seeds, replica);
    if (c.eta0 == "stripe")
    {
        // ones on the lower half of the first coordinate
        SiteConfig eta(g.vertex_count(), 0);
        const int half = (g.side() + 1) / 2;
        for (std::size_t i = 0; i < eta.size(); ++i)
            eta[i] = g.vertex_at(i)(0) < half ? 1 : 0;
        return eta;
    }
    SiteConfig eta;
    for (const auto& part : split(c.eta0, ','))
    {
        if (part != "0" && part != "1")
            throw DomainError("eta0 entries must be 0 or 1");
        eta.push_back(part == "1" ? 1 : 0);
    }
    if (eta.size() != g.vertex_count())
        throw DomainError("eta0 has the wrong number of entries");
    return eta;
}

EdgeConfig initial_edges(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds,
                         std::uint64_t replica)
{
    if (c.zeta0 == "all_open")
        return constant_edges(g, 1);
    if (c.zeta0 == "all_closed")
        return constant_edges(g, 0);
    if (c.zeta0 == "stationary")
        return stationary_edges(g, c.p, seeds, replica);
    EdgeConfig z;
    for (const auto& part : split(c.zeta0, ','))
    {
        if (part != "0" && part != "1")
            throw DomainError("zeta0 entries must be 0 or 1");
        z.push_back(part == "1" ? 1 : 0);
    }
    if (z.size() != g.edges().size())
        throw DomainError("zeta0 has the wrong number of entries");
    return z;
}

} // namespace ips
