#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "jumpcons/inference.hpp"
#include "jumpcons/model.hpp"
#include "jumpcons/priors.hpp"
#include "jumpcons/simulator.hpp"

namespace jumpcons {

using Json = nlohmann::json;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Throws InputError naming `context` if `obj` is not an object or holds a
/// key outside `allowed`.
void require_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view context);

/// Parses JSON text; parse failures become InputError with the byte offset.
Json parse_json(std::string_view text, std::string_view source);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

Json domain_to_json(const DomainSpec& domain);
DomainSpec domain_from_json(const Json& j);

/// {"d", "r", "s", "k", "J", "coeffs": [{"j": [...], "a": scalar or [d]}]}
Json drift_to_json(const DriftSpec& drift);
DriftSpec drift_from_json(const Json& j);

/// {"lambda", "mass_tol", "atoms": [{"w", "z": [...], "tau"}]}; the domain
/// comes from the enclosing model.
Json levy_to_json(const LevyMixture& levy);
LevyMixture levy_from_json(const Json& j, const DomainSpec& domain);

Json model_to_json(const JumpDiffusionModel& model);
JumpDiffusionModel model_from_json(const Json& j);
std::string model_hash(const JumpDiffusionModel& model);

/// A model file as accepted by the checker: either a full model or an
/// affine drift {"linear": {"d", "r", "matrix", "offset"}} with a Levy part.
struct ModelFile {
  DomainSpec domain;
  std::shared_ptr<const VectorField> drift;
  LevyMixture levy;
  std::optional<JumpDiffusionModel> model;
};
ModelFile model_file_from_json(const Json& j);
ModelFile load_model_file(const std::filesystem::path& path);

Json gaussian_prior_to_json(const GaussianPriorConfig& cfg);
GaussianPriorConfig gaussian_prior_from_json(const Json& j, const DomainSpec& domain);
Json dpmix_to_json(const DPMixConfig& cfg);
DPMixConfig dpmix_from_json(const Json& j);
Json estimator_to_json(const EstimatorConfig& cfg);
EstimatorConfig estimator_from_json(const Json& j);
Json proposal_to_json(const ProposalConfig& cfg);
ProposalConfig proposal_from_json(const Json& j);

Json condition_report_to_json(const ConditionReport& report);
Json lamperti_report_to_json(const LampertiReport& report);
Json kl_terms_to_json(const KLBoundTerms& terms);

/// CSV with a "# {json}" first line (model hash, dt, seed) then
/// t, x_1..x_d, jump_flag.
std::string path_to_csv(const PathSkeleton& path, const std::string& model_hash);
std::string observations_to_csv(const ObservationSeries& series, const std::string& model_hash, double dt,
                                std::uint64_t seed);
ObservationSeries observations_from_csv(std::string_view text);
ObservationSeries load_observations(const std::filesystem::path& path);

/// One JSON object per line: coefficients, levy, log_score.
std::string chain_to_jsonl(const Chain& chain);
Json chain_summary_to_json(const Chain& chain);

/// n, mass_outside, median_distance, stderr.
std::string curve_to_csv(const ContractionCurve& curve);

}  // namespace jumpcons
