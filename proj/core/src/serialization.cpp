#include "jumpcons/serialization.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "jumpcons/errors.hpp"

namespace jumpcons {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf.data(), 16);
}

void require_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view context) {
  if (!obj.is_object()) throw InputError(std::string(context) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw InputError(std::string(context) + ": unknown key '" + key + "'");
  }
}

Json parse_json(std::string_view text, std::string_view source) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw InputError(std::string(source) + ": JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

namespace {

template <class T>
T get(const Json& obj, const char* key, std::string_view context) {
  if (!obj.contains(key)) throw InputError(std::string(context) + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InputError(std::string(context) + ": bad value for '" + key + "': " + e.what());
  }
}

template <class T>
T get_or(const Json& obj, const char* key, T fallback, std::string_view context) {
  return obj.contains(key) ? get<T>(obj, key, context) : fallback;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from(const Json& j, std::string_view context) {
  std::vector<double> v;
  try {
    v = j.get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw InputError(std::string(context) + ": expected an array of numbers");
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json estimate_json(const ConstantEstimate& e) {
  Json w = Json::array();
  for (const auto& x : e.witnesses) w.push_back(vector_json(x));
  Json out{{"value", e.value}, {"violated", e.violated}, {"witnesses", w}};
  if (!e.note.empty()) out["note"] = e.note;
  return out;
}

void append_row(std::string& out, double t, const Vector& x, int flag) {
  out += format_double(t);
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    out += ',';
    out += format_double(x(c));
  }
  out += ',';
  out += std::to_string(flag);
  out += '\n';
}

std::string csv_header(int d) {
  std::string h = "t";
  for (int c = 1; c <= d; ++c) h += ",x_" + std::to_string(c);
  return h + ",jump_flag\n";
}

double parse_number(std::string_view field) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw InputError("bad number in CSV: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

Json domain_to_json(const DomainSpec& domain) { return {{"d", domain.d}, {"r", domain.r}}; }

DomainSpec domain_from_json(const Json& j) {
  require_keys(j, {"d", "r"}, "domain");
  return DomainSpec(get<int>(j, "d", "domain"), get<double>(j, "r", "domain"));
}

Json drift_to_json(const DriftSpec& drift) {
  const int d = drift.domain().d;
  Json coeffs = Json::array();
  for (std::size_t f = 0; f < drift.basis_size(); ++f) {
    const auto j = multi_index(f, d, drift.level());
    Json entry{{"j", j}};
    if (d == 1) {
      entry["a"] = drift.coefficient(0, j);
    } else {
      Json a = Json::array();
      for (int c = 0; c < d; ++c) a.push_back(drift.coefficient(c, j));
      entry["a"] = a;
    }
    coeffs.push_back(entry);
  }
  return {{"d", d}, {"r", drift.domain().r}, {"s", drift.s()}, {"k", drift.k()}, {"J", drift.level()},
          {"coeffs", coeffs}};
}

DriftSpec drift_from_json(const Json& j) {
  constexpr std::string_view ctx = "drift";
  require_keys(j, {"d", "r", "s", "k", "J", "coeffs"}, ctx);
  const DomainSpec domain(get<int>(j, "d", ctx), get<double>(j, "r", ctx));
  DriftSpec drift(domain, get<double>(j, "s", ctx), get<double>(j, "k", ctx), get<int>(j, "J", ctx));
  if (!j.contains("coeffs")) return drift;
  if (!j.at("coeffs").is_array()) throw InputError("drift: 'coeffs' must be an array");
  std::set<std::size_t> seen;
  for (const auto& entry : j.at("coeffs")) {
    require_keys(entry, {"j", "a"}, "drift coefficient");
    const auto idx = get<MultiIndex>(entry, "j", "drift coefficient");
    if (static_cast<int>(idx.size()) != domain.d) throw InputError("drift coefficient: multi-index has wrong length");
    if (!seen.insert(flat_index(idx, drift.level())).second) throw InputError("drift coefficient: duplicate index");
    const Json& a = entry.at("a");
    if (domain.d == 1 && a.is_number()) {
      drift.set_coefficient(0, idx, a.get<double>());
    } else {
      const Vector v = vector_from(a, "drift coefficient");
      if (v.size() != domain.d) throw InputError("drift coefficient: 'a' must have d entries");
      for (int c = 0; c < domain.d; ++c) drift.set_coefficient(c, idx, v(c));
    }
  }
  return drift;
}

Json levy_to_json(const LevyMixture& levy) {
  Json atoms = Json::array();
  for (const auto& a : levy.atoms()) atoms.push_back({{"w", a.weight}, {"z", vector_json(a.center)}, {"tau", a.tau}});
  return {{"lambda", levy.lambda()}, {"mass_tol", levy.mass_tol()}, {"atoms", atoms}};
}

LevyMixture levy_from_json(const Json& j, const DomainSpec& domain) {
  constexpr std::string_view ctx = "levy";
  require_keys(j, {"lambda", "mass_tol", "atoms"}, ctx);
  std::vector<LevyAtom> atoms;
  if (!j.contains("atoms") || !j.at("atoms").is_array()) throw InputError("levy: 'atoms' must be an array");
  for (const auto& entry : j.at("atoms")) {
    require_keys(entry, {"w", "z", "tau"}, "levy atom");
    LevyAtom atom;
    atom.weight = get<double>(entry, "w", "levy atom");
    if (!entry.contains("z")) throw InputError("levy atom: missing key 'z'");
    atom.center = vector_from(entry.at("z"), "levy atom");
    atom.tau = get<double>(entry, "tau", "levy atom");
    atoms.push_back(std::move(atom));
  }
  return LevyMixture(domain, get<double>(j, "lambda", ctx), get_or<double>(j, "mass_tol", 1e-3, ctx),
                     std::move(atoms));
}

Json model_to_json(const JumpDiffusionModel& model) {
  return {{"drift", drift_to_json(model.drift())}, {"levy", levy_to_json(model.levy())}};
}

JumpDiffusionModel model_from_json(const Json& j) {
  require_keys(j, {"drift", "levy"}, "model");
  if (!j.contains("drift") || !j.contains("levy")) throw InputError("model: 'drift' and 'levy' are required");
  DriftSpec drift = drift_from_json(j.at("drift"));
  LevyMixture levy = levy_from_json(j.at("levy"), drift.domain());
  return JumpDiffusionModel(std::move(drift), std::move(levy));
}

std::string model_hash(const JumpDiffusionModel& model) { return hex64(fnv1a(model_to_json(model).dump())); }

ModelFile model_file_from_json(const Json& j) {
  require_keys(j, {"drift", "levy"}, "model");
  if (!j.contains("drift") || !j.contains("levy")) throw InputError("model: 'drift' and 'levy' are required");
  const Json& dj = j.at("drift");
  if (dj.is_object() && dj.contains("linear")) {
    require_keys(dj, {"linear"}, "drift");
    const Json& lj = dj.at("linear");
    require_keys(lj, {"d", "r", "matrix", "offset"}, "linear drift");
    const DomainSpec domain(get<int>(lj, "d", "linear drift"), get<double>(lj, "r", "linear drift"));
    const auto rows = get<std::vector<std::vector<double>>>(lj, "matrix", "linear drift");
    if (static_cast<int>(rows.size()) != domain.d) throw InputError("linear drift: matrix must be d x d");
    Matrix a(domain.d, domain.d);
    for (int r = 0; r < domain.d; ++r) {
      if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != domain.d) {
        throw InputError("linear drift: matrix must be d x d");
      }
      for (int c = 0; c < domain.d; ++c) a(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    Vector offset = Vector::Zero(domain.d);
    if (lj.contains("offset")) offset = vector_from(lj.at("offset"), "linear drift");
    if (offset.size() != domain.d) throw InputError("linear drift: offset must have d entries");
    LevyMixture levy = levy_from_json(j.at("levy"), domain);
    return ModelFile{domain, std::make_shared<AffineField>(a, offset), std::move(levy), std::nullopt};
  }
  JumpDiffusionModel model = model_from_json(j);
  auto drift = std::make_shared<DriftSpec>(model.drift());
  return ModelFile{model.domain(), drift, model.levy(), std::move(model)};
}

ModelFile load_model_file(const std::filesystem::path& path) { return model_file_from_json(read_json_file(path)); }

Json gaussian_prior_to_json(const GaussianPriorConfig& cfg) {
  return {{"s", cfg.s}, {"J", cfg.level}, {"k", cfg.k}};
}

GaussianPriorConfig gaussian_prior_from_json(const Json& j, const DomainSpec& domain) {
  constexpr std::string_view ctx = "drift_prior";
  require_keys(j, {"s", "J", "k"}, ctx);
  GaussianPriorConfig cfg{domain};
  cfg.s = get_or<double>(j, "s", domain.d + 3.0, ctx);
  cfg.level = get_or<int>(j, "J", cfg.level, ctx);
  cfg.k = get_or<double>(j, "k", cfg.k, ctx);
  cfg.validate();
  return cfg;
}

Json dpmix_to_json(const DPMixConfig& cfg) {
  return {{"zeta_mass", cfg.zeta_mass},       {"tau_log_mean", cfg.tau_log_mean}, {"tau_log_sd", cfg.tau_log_sd},
          {"mass_tol", cfg.mass_tol},         {"lambda_shape", cfg.lambda_shape}, {"lambda_rate", cfg.lambda_rate},
          {"max_atoms", cfg.max_atoms}};
}

DPMixConfig dpmix_from_json(const Json& j) {
  constexpr std::string_view ctx = "levy_prior";
  require_keys(j, {"zeta_mass", "tau_log_mean", "tau_log_sd", "mass_tol", "lambda_shape", "lambda_rate", "max_atoms"},
               ctx);
  DPMixConfig cfg;
  cfg.zeta_mass = get_or(j, "zeta_mass", cfg.zeta_mass, ctx);
  cfg.tau_log_mean = get_or(j, "tau_log_mean", cfg.tau_log_mean, ctx);
  cfg.tau_log_sd = get_or(j, "tau_log_sd", cfg.tau_log_sd, ctx);
  cfg.mass_tol = get_or(j, "mass_tol", cfg.mass_tol, ctx);
  cfg.lambda_shape = get_or(j, "lambda_shape", cfg.lambda_shape, ctx);
  cfg.lambda_rate = get_or(j, "lambda_rate", cfg.lambda_rate, ctx);
  cfg.max_atoms = get_or(j, "max_atoms", cfg.max_atoms, ctx);
  cfg.validate();
  return cfg;
}

Json estimator_to_json(const EstimatorConfig& cfg) {
  Json out{{"replicates", cfg.replicates},
           {"dt", cfg.dt},
           {"refresh_prob", cfg.refresh_prob},
           {"include_stationary_factor", cfg.include_stationary_factor}};
  out["bandwidth"] = cfg.bandwidth ? Json(*cfg.bandwidth) : Json("auto");
  return out;
}

EstimatorConfig estimator_from_json(const Json& j) {
  constexpr std::string_view ctx = "estimator";
  require_keys(j, {"replicates", "dt", "bandwidth", "refresh_prob", "include_stationary_factor"}, ctx);
  EstimatorConfig cfg;
  cfg.replicates = get_or(j, "replicates", cfg.replicates, ctx);
  cfg.dt = get_or(j, "dt", cfg.dt, ctx);
  if (j.contains("bandwidth")) {
    const Json& b = j.at("bandwidth");
    if (b.is_string()) {
      if (b.get<std::string>() != "auto") throw InputError("estimator: bandwidth must be a number or \"auto\"");
    } else {
      cfg.bandwidth = get<double>(j, "bandwidth", ctx);
    }
  }
  cfg.refresh_prob = get_or(j, "refresh_prob", cfg.refresh_prob, ctx);
  cfg.include_stationary_factor = get_or(j, "include_stationary_factor", cfg.include_stationary_factor, ctx);
  cfg.validate();
  return cfg;
}

Json proposal_to_json(const ProposalConfig& cfg) {
  return {{"beta_pcn", cfg.beta_pcn},
          {"stick_step", cfg.stick_step},
          {"center_step", cfg.center_step},
          {"log_tau_step", cfg.log_tau_step},
          {"log_lambda_step", cfg.log_lambda_step},
          {"atoms", cfg.atoms},
          {"adapt", cfg.adapt},
          {"target_acceptance", cfg.target_acceptance},
          {"adapt_interval", cfg.adapt_interval},
          {"prior_only", cfg.prior_only}};
}

ProposalConfig proposal_from_json(const Json& j) {
  constexpr std::string_view ctx = "sampler";
  require_keys(j,
               {"beta_pcn", "stick_step", "center_step", "log_tau_step", "log_lambda_step", "atoms", "adapt",
                "target_acceptance", "adapt_interval", "prior_only"},
               ctx);
  ProposalConfig cfg;
  cfg.beta_pcn = get_or(j, "beta_pcn", cfg.beta_pcn, ctx);
  cfg.stick_step = get_or(j, "stick_step", cfg.stick_step, ctx);
  cfg.center_step = get_or(j, "center_step", cfg.center_step, ctx);
  cfg.log_tau_step = get_or(j, "log_tau_step", cfg.log_tau_step, ctx);
  cfg.log_lambda_step = get_or(j, "log_lambda_step", cfg.log_lambda_step, ctx);
  cfg.atoms = get_or(j, "atoms", cfg.atoms, ctx);
  cfg.adapt = get_or(j, "adapt", cfg.adapt, ctx);
  cfg.target_acceptance = get_or(j, "target_acceptance", cfg.target_acceptance, ctx);
  cfg.adapt_interval = get_or(j, "adapt_interval", cfg.adapt_interval, ctx);
  cfg.prior_only = get_or(j, "prior_only", cfg.prior_only, ctx);
  cfg.validate();
  return cfg;
}

Json condition_report_to_json(const ConditionReport& report) {
  return {{"ok", report.ok()},
          {"C1", estimate_json(report.c1)},
          {"C2", estimate_json(report.c2)},
          {"C3", estimate_json(report.c3)},
          {"C4", estimate_json(report.c4)},
          {"C5", estimate_json(report.c5)},
          {"grid_size", report.grid_size},
          {"probe_pairs", report.probe_pairs}};
}

Json lamperti_report_to_json(const LampertiReport& report) {
  return {{"satisfied", report.satisfied},
          {"max_residual", report.max_residual},
          {"worst_point", vector_json(report.worst_point)},
          {"worst_triple", report.worst_triple}};
}

Json kl_terms_to_json(const KLBoundTerms& terms) {
  return {{"drift_term", terms.drift_term},
          {"jump_term", terms.jump_term},
          {"total", terms.total},
          {"clipped", terms.clipped}};
}

std::string path_to_csv(const PathSkeleton& path, const std::string& hash) {
  const int d = path.states.empty() ? 0 : static_cast<int>(path.states.front().size());
  const Json header{{"model_hash", hash}, {"dt", path.dt}, {"seed", path.seed}, {"d", d}};
  std::string out = "# " + header.dump() + "\n" + csv_header(d);
  for (std::size_t i = 0; i < path.states.size(); ++i) append_row(out, path.times[i], path.states[i], path.jump_flag[i]);
  return out;
}

std::string observations_to_csv(const ObservationSeries& series, const std::string& hash, double dt,
                                std::uint64_t seed) {
  const int d = series.observations.empty() ? 0 : static_cast<int>(series.observations.front().size());
  const Json header{{"model_hash", hash}, {"dt", dt}, {"seed", seed}, {"d", d}, {"delta", series.delta}};
  std::string out = "# " + header.dump() + "\n" + csv_header(d);
  for (std::size_t i = 0; i < series.observations.size(); ++i) {
    append_row(out, static_cast<double>(i) * series.delta, series.observations[i], 0);
  }
  return out;
}

ObservationSeries observations_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw InputError("observations: missing '# {json}' header");
  const Json header = parse_json(line.substr(2), "observations header");
  if (!header.contains("delta")) throw InputError("observations: header lacks 'delta'");
  const int d = get<int>(header, "d", "observations header");
  ObservationSeries series;
  series.delta = get<double>(header, "delta", "observations header");
  if (!std::getline(in, line) || line != csv_header(d).substr(0, csv_header(d).size() - 1)) {
    throw InputError("observations: unexpected column header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      fields.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (static_cast<int>(fields.size()) != d + 2) throw InputError("observations: wrong number of columns");
    Vector x(d);
    for (int c = 0; c < d; ++c) x(c) = parse_number(fields[static_cast<std::size_t>(c) + 1]);
    if (!x.allFinite()) throw InputError("observations: non-finite value");
    series.observations.push_back(std::move(x));
  }
  if (series.observations.empty()) throw InputError("observations: no rows");
  return series;
}

ObservationSeries load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return observations_from_csv(ss.str());
}

std::string chain_to_jsonl(const Chain& chain) {
  std::string out;
  for (const auto& s : chain.samples) {
    const Json line{{"coefficients", s.coefficients}, {"levy", levy_to_json(s.levy)}, {"log_score", s.log_score}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

Json chain_summary_to_json(const Chain& chain) {
  Json blocks = Json::array();
  for (const auto& b : chain.blocks) {
    blocks.push_back({{"name", b.name},
                      {"proposed", b.proposed},
                      {"accepted", b.accepted},
                      {"acceptance_rate", b.acceptance_rate},
                      {"final_scale", b.final_scale}});
  }
  return {{"iterations", chain.iterations},     {"warmup", chain.warmup},
          {"seed", chain.seed},                 {"samples", chain.samples.size()},
          {"aux_refreshes", chain.aux_refreshes}, {"tuning_failure", chain.tuning_failure},
          {"diagnostics", chain.diagnostics},   {"blocks", blocks},
          {"drift", drift_to_json(chain.drift_template)}};
}

std::string curve_to_csv(const ContractionCurve& curve) {
  std::string out = "n,mass_outside,median_distance,stderr\n";
  for (const auto& e : curve.entries) {
    out += std::to_string(e.n) + "," + format_double(e.mass_outside) + "," + format_double(e.median_distance) + "," +
           format_double(e.stderr) + "\n";
  }
  return out;
}

}  // namespace jumpcons
