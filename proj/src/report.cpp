#include "ips/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ips
{

namespace
{

/// JSON has no infinity; unbounded values are written as null.
Json num(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json vertex_json(const Vertex& x)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        a.push_back(x(i));
    return a;
}

} // namespace

Json to_json(const Estimate& e)
{
    return Json{{"estimate", num(e.mean)}, {"se", num(e.se)}, {"ci_low", num(e.ci_low)},
                {"ci_high", num(e.ci_high)}, {"N", e.n}};
}

Json to_json(const LinearFit& f)
{
    return Json{{"slope", num(f.slope)},
                {"intercept", num(f.intercept)},
                {"slope_se", num(f.slope_se)},
                {"slope_ci_low", num(f.slope_ci_low)},
                {"slope_ci_high", num(f.slope_ci_high)}};
}

Json to_json(const KsResult& k)
{
    return Json{{"statistic", num(k.statistic)}, {"p_value", num(k.p_value)}};
}

Json to_json(const DualityReport& r)
{
    Json j{{"model", to_string(r.model)}, {"t", r.t}, {"lhs", to_json(r.lhs)}, {"rhs", to_json(r.rhs)},
           {"pooled_se", num(r.pooled)}};
    if (r.has_exact)
    {
        j["lhs_exact"] = r.lhs_exact;
        j["rhs_exact"] = r.rhs_exact;
        j["exact_difference"] = std::abs(r.lhs_exact - r.rhs_exact);
    }
    j["excluded"] = r.excluded;
    if (!r.note.empty())
        j["note"] = r.note;
    j["pass"] = r.pass;
    return j;
}

Json to_json(const CorrelationReport& r)
{
    return Json{{"correlation", to_json(r.estimate)},
                {"later_coalescence", to_json(r.bias)},
                {"truncation_bias_bound", num(r.bias_bound)}};
}

Json to_json(const CollisionReport& r)
{
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.horizons.size(); ++i)
        rows.push_back(Json{{"horizon", r.horizons[i]}, {"hit", to_json(r.hit[i])}});
    return Json{{"by_horizon", rows}};
}

Json to_json(const DecayReport& r)
{
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.distances.size(); ++i)
        rows.push_back(Json{{"distance", r.distances[i]}, {"hit", to_json(r.hit[i])}});
    return Json{{"by_distance", rows},
                {"loglog_fit", to_json(r.fit)},
                {"decreasing", r.decreasing},
                {"slope_consistent", r.consistent}};
}

Json to_json(const RegenerationReport& r)
{
    Json tail = Json::array();
    for (std::size_t i = 0; i < r.tail_t.size(); ++i)
        tail.push_back(Json{{"t", r.tail_t[i]}, {"survival", r.tail_p[i]}});
    return Json{{"N", r.N},
                {"horizon", r.horizon},
                {"first_regeneration_observed", to_json(r.observed)},
                {"pairs_with_two_regenerations", r.first.size()},
                {"ks_inter_regeneration_times", to_json(r.ks_gaps)},
                {"ks_relative_displacements", to_json(r.ks_increments)},
                {"attempts_first_interval", to_json(r.mean_attempts)},
                {"tail_fit", to_json(r.tail_fit)},
                {"tail", tail}};
}

Json to_json(const MixingReport& r)
{
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.shifts.size(); ++i)
        rows.push_back(Json{{"shift", r.shifts[i]}, {"joint", to_json(r.joint[i])}, {"gap", to_json(r.gap[i])}});
    return Json{{"left", to_json(r.left)},
                {"right", to_json(r.right)},
                {"by_shift", rows},
                {"truncation_bias_bound", num(r.bias_bound)}};
}

Json to_json(const ExchangeabilityReport& r)
{
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.shapes.size(); ++i)
    {
        Json shape = Json::array();
        for (const auto& x : r.shapes[i])
            shape.push_back(vertex_json(x));
        rows.push_back(Json{{"shape", shape}, {"q", to_json(r.q[i])}});
    }
    return Json{{"by_shape", rows}, {"overlap", r.overlap}};
}

Json to_json(const ContainmentSummary& r)
{
    return Json{{"N", r.N}, {"checks", r.checks}, {"violations", r.violations}, {"coalesced", to_json(r.coalesced)}};
}

Json to_json(const SingleSeparateSummary& r)
{
    return Json{{"distance", r.distance},
                {"break", to_json(r.breaks)},
                {"g_2R", to_json(r.g2R)},
                {"f_R", to_json(r.fR)},
                {"bound_holds", r.bound_holds}};
}

Json to_json(const ProximitySummary& r)
{
    return Json{{"distance", r.distance}, {"ell", r.ell}, {"f", to_json(r.f)}, {"g", to_json(r.g)}};
}

Json to_json(const IdentityReport& r)
{
    return Json{{"lhs", to_json(r.lhs)}, {"rhs", to_json(r.rhs)}, {"pooled_se", num(r.pooled)},
                {"z", num(r.z)},         {"within_3se", r.within}, {"alternative", to_json(r.alt)},
                {"alternative_z", num(r.alt_z)}, {"alternative_within_3se", r.alt_within}};
}

Json to_json(const TreeMeasure& r)
{
    return Json{{"estimate", num(r.estimate)},
                {"ci_low", num(r.ci_low)},
                {"ci_high", num(r.ci_high)},
                {"truncation_bias", num(r.truncation_bias)},
                {"N", r.N}};
}

Json to_json(const FunctionalReport& r)
{
    return Json{{"functional", r.functional}, {"estimate", num(r.estimate.mean)}, {"ci_low", num(r.estimate.ci_low)},
                {"ci_high", num(r.estimate.ci_high)}, {"N", r.N}, {"horizon", r.horizon}, {"seed", r.seed}};
}

std::string digest(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json make_report(const std::string& experiment, const Json& params, const Json& results, bool accepted,
                 const RunManifest& manifest)
{
    // replicas are seeded from (master seed, replica); each worker runs a fixed residue class
    Json workers = Json::array();
    for (int w = 0; w < std::max(1, manifest.workers); ++w)
        workers.push_back(Json{{"worker", w},
                               {"master_seed", manifest.master_seed},
                               {"replicas", "r mod " + std::to_string(std::max(1, manifest.workers)) + " == " +
                                                std::to_string(w)}});
    Json j;
    j["schema"] = kReportSchema;
    j["experiment"] = experiment;
    j["params"] = params;
    j["results"] = results;
    j["accepted"] = accepted;
    j["manifest"] = Json{{"artifact_version", kArtifactVersion},
                         {"master_seed", manifest.master_seed},
                         {"workers", manifest.workers},
                         {"replica_partition", "replica r runs on worker r mod workers; reduction in replica order"},
                         {"worker_seeds", workers},
                         {"config", manifest.config},
                         {"results_digest", digest(results.dump())},
                         {"wall_seconds", manifest.wall_seconds}};
    return j;
}

std::string dump_report(const Json& report, bool with_wall_time)
{
    if (with_wall_time || !report.contains("manifest"))
        return report.dump(2);
    Json copy = report;
    copy["manifest"].erase("wall_seconds");
    return copy.dump(2);
}

} // namespace ips
