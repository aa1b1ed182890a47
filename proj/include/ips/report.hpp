#pragma once

#include "ips/couplings.hpp"
#include "ips/duals.hpp"
#include "ips/experiments.hpp"
#include "ips/stats.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>

namespace ips
{

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "ips-duality-lab/1";
inline constexpr const char* kArtifactVersion = "0.1.0";

/// Everything needed to rerun a report bit-exactly.
struct RunManifest
{
    std::string config;      ///< config echo with defaults filled in
    std::uint64_t master_seed = 0;
    int workers = 1;
    double wall_seconds = 0.0;
};

Json to_json(const Estimate& e);
Json to_json(const LinearFit& f);
Json to_json(const KsResult& k);
Json to_json(const DualityReport& r);
Json to_json(const CorrelationReport& r);
Json to_json(const CollisionReport& r);
Json to_json(const DecayReport& r);
Json to_json(const RegenerationReport& r);
Json to_json(const MixingReport& r);
Json to_json(const ExchangeabilityReport& r);
Json to_json(const ContainmentSummary& r);
Json to_json(const SingleSeparateSummary& r);
Json to_json(const ProximitySummary& r);
Json to_json(const IdentityReport& r);
Json to_json(const TreeMeasure& r);
Json to_json(const FunctionalReport& r);

/// 64-bit FNV-1a digest in hex.
std::string digest(const std::string& bytes);

/// Full report: schema, experiment name, parameters, results, acceptance
/// verdict and the manifest (whose digest covers the results).
Json make_report(const std::string& experiment, const Json& params, const Json& results, bool accepted,
                 const RunManifest& manifest);

/// Serialized report; `with_wall_time = false` drops the only field allowed to
/// differ between reruns.
std::string dump_report(const Json& report, bool with_wall_time = true);

} // namespace ips
