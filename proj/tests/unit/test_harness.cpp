#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "jumpcons/conditions.hpp"
#include "jumpcons/errors.hpp"
#include "jumpcons/experiment.hpp"
#include "jumpcons/rng.hpp"
#include "jumpcons/serialization.hpp"

using namespace jumpcons;
namespace fs = std::filesystem;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "jumpcons_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

JumpDiffusionModel small_truth() {
  const DomainSpec domain(1, 3.0);
  DriftSpec drift(domain, 4.0, 1.0, 4);
  drift.set_coefficient(0, {1}, 0.3);
  drift.set_coefficient(0, {2}, 1.5);
  return JumpDiffusionModel(drift, LevyMixture(domain, 0.5, 1e-3, {LevyAtom{1.0, vec({1.0}), 4.0}}));
}

}  // namespace

TEST_CASE("doubles are printed in shortest round-trip form") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("model JSON round trip preserves every field") {
  const DomainSpec domain(2, 1.5);
  const JumpDiffusionModel model(sample_drift_prior(GaussianPriorConfig{domain, 5.0, 3, 0.7}, 4),
                                 sample_levy_prior(DPMixConfig{}, domain, 4));
  const Json j = model_to_json(model);
  const auto back = model_from_json(parse_json(j.dump(), "test"));
  CHECK(back.drift() == model.drift());
  CHECK(back.levy().lambda() == model.levy().lambda());
  REQUIRE(back.levy().atoms().size() == model.levy().atoms().size());
  for (std::size_t i = 0; i < back.levy().atoms().size(); ++i) {
    CHECK(back.levy().atoms()[i].weight == model.levy().atoms()[i].weight);
    CHECK(back.levy().atoms()[i].tau == model.levy().atoms()[i].tau);
    CHECK((back.levy().atoms()[i].center.array() == model.levy().atoms()[i].center.array()).all());
  }
  CHECK(model_hash(back) == model_hash(model));
  CHECK(j.at("drift").contains("coeffs"));
  CHECK(j.at("levy").contains("atoms"));
}

TEST_CASE("unknown keys and malformed JSON are input errors") {
  CHECK_THROWS_AS(parse_json("{\"d\": 1,", "x"), InputError);
  Json j = model_to_json(small_truth());
  j["drift"]["extra"] = 1;
  CHECK_THROWS_AS(model_from_json(j), InputError);
  CHECK_THROWS_AS(estimator_from_json(Json{{"replicate", 10}}), InputError);
  CHECK_THROWS_AS(dpmix_from_json(Json{{"zeta", 1.0}}), InputError);
  try {
    parse_json("{\"a\": [1, 2,, 3]}", "bad.json");
    FAIL("expected a parse error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("config JSON round trips") {
  EstimatorConfig est;
  est.replicates = 321;
  est.bandwidth = 0.25;
  est.include_stationary_factor = true;
  const auto est2 = estimator_from_json(estimator_to_json(est));
  CHECK(est2.replicates == 321u);
  CHECK(est2.bandwidth.value() == 0.25);
  CHECK(est2.include_stationary_factor);
  CHECK_FALSE(estimator_from_json(Json{{"bandwidth", "auto"}}).bandwidth.has_value());

  ProposalConfig prop;
  prop.atoms = 5;
  prop.beta_pcn = 0.4;
  const auto prop2 = proposal_from_json(proposal_to_json(prop));
  CHECK(prop2.atoms == 5u);
  CHECK(prop2.beta_pcn == 0.4);

  DPMixConfig dp;
  dp.zeta_mass = 2.5;
  CHECK(dpmix_from_json(dpmix_to_json(dp)).zeta_mass == 2.5);
  const GaussianPriorConfig g{DomainSpec(1, 2.0), 4.5, 6, 2.0};
  const auto g2 = gaussian_prior_from_json(gaussian_prior_to_json(g), g.domain);
  CHECK(g2.s == 4.5);
  CHECK(g2.level == 6);
  CHECK(g2.k == 2.0);
}

TEST_CASE("observation CSV round trip is exact") {
  const auto series = sample_observations(small_truth(), 30, 0.5, 0.01, 3);
  const std::string csv = observations_to_csv(series, model_hash(small_truth()), 0.01, 3);
  const auto back = observations_from_csv(csv);
  CHECK(back.delta == 0.5);
  REQUIRE(back.observations.size() == series.observations.size());
  for (std::size_t i = 0; i < back.observations.size(); ++i) {
    CHECK((back.observations[i].array() == series.observations[i].array()).all());
  }
  CHECK(csv.rfind("# {", 0) == 0);
  CHECK_THROWS_AS(observations_from_csv("t,x_1,jump_flag\n0,1,0\n"), InputError);
}

TEST_CASE("path CSV carries header metadata and jump flags") {
  const auto path = simulate_path(small_truth(), vec({0.0}), 5.0, 0.01, 8);
  const std::string csv = path_to_csv(path, "abc");
  const auto first = csv.substr(2, csv.find('\n') - 2);
  const Json header = parse_json(first, "header");
  CHECK(header.at("model_hash") == "abc");
  CHECK(header.at("seed") == 8);
  CHECK(header.at("dt") == 0.01);
  std::size_t flagged = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) flagged += (line.size() > 2 && line.substr(line.size() - 2) == ",1") ? 1 : 0;
  CHECK(flagged == path.jumps.size());
  CHECK(path_to_csv(simulate_path(small_truth(), vec({0.0}), 5.0, 0.01, 8), "abc") == csv);
}

TEST_CASE("experiment config parsing rejects bad schedules and unknown keys") {
  Json j{{"truth", model_to_json(small_truth())}, {"n_schedule", {50, 200}}, {"iterations", 100}, {"warmup", 20},
         {"thin", 4}};
  CHECK_NOTHROW(experiment_config_from_json(j));
  j["n_schedule"] = {200, 50};
  CHECK_THROWS_AS(experiment_config_from_json(j), InputError);
  j["n_schedule"] = {50};
  j["unexpected"] = true;
  CHECK_THROWS_AS(experiment_config_from_json(j), InputError);
}

TEST_CASE("experiment smoke run emits a curve row and a complete manifest") {
  const fs::path dir = scratch("smoke");
  Json j{{"truth", model_to_json(small_truth())},
         {"n_schedule", {50}},
         {"iterations", 200},
         {"warmup", 60},
         {"thin", 5},
         {"seed", 3},
         {"estimator", {{"replicates", 100}, {"dt", 0.1}}},
         {"sampler", {{"atoms", 2}}},
         {"metric", {{"replicates", 32}, {"dt", 0.05}}},
         {"epsilon", {0.05, 0.2}},
         {"output", dir.string()}};
  const auto cfg = experiment_config_from_json(j);
  const auto result = run_experiment(cfg);
  REQUIRE(result.rows.size() == 1u);
  REQUIRE(result.curves.size() == 2u);
  CHECK(result.curves[0].entries.size() == 1u);
  const Json manifest = read_json_file(dir / "manifest.json");
  for (const auto& f : manifest.at("files")) CHECK(fs::exists(dir / f.get<std::string>()));
  for (const char* name : {"observations.csv", "chain_n50.jsonl", "curve_eps0.csv", "curve_eps1.csv"}) {
    bool listed = false;
    for (const auto& f : manifest.at("files")) listed = listed || f == name;
    CHECK(listed);
  }
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.at("version") == version());

  // Re-running from the manifest's config reproduces the numerics byte for byte.
  const fs::path again = scratch("smoke_again");
  Json cfg2 = manifest.at("config");
  cfg2["output"] = again.string();
  run_experiment(experiment_config_from_json(cfg2));
  for (const char* name : {"observations.csv", "chain_n50.jsonl", "curve_eps0.csv", "curve_eps1.csv"}) {
    CHECK(slurp(dir / name) == slurp(again / name));
  }
}

TEST_CASE("experiment data are nested across the schedule") {
  const auto cfg_json = Json{{"truth", model_to_json(small_truth())}, {"n_schedule", {50, 200}}};
  const auto cfg = experiment_config_from_json(cfg_json);
  const auto full = sample_observations(cfg.truth, 200, cfg.delta, cfg.dt, derive_seed(cfg.seed, {10}));
  const auto small = sample_observations(cfg.truth, 50, cfg.delta, cfg.dt, derive_seed(cfg.seed, {10}));
  for (std::size_t i = 0; i <= 50; ++i) CHECK((full.observations[i].array() == small.observations[i].array()).all());
}

#ifdef JUMPCONS_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(JUMPCONS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("command line exit codes and determinism") {
  const fs::path dir = scratch("cli");
  const std::string zero = (dir / "zero.json").string();
  write_text_file(zero, model_to_json(small_truth()).dump());
  const std::string c5 = (dir / "c5.json").string();
  write_text_file(c5, R"({"drift":{"linear":{"d":1,"r":3,"matrix":[[1.0]],"offset":[0.0]}},)"
                      R"("levy":{"lambda":0.5,"atoms":[{"w":1,"z":[0.0],"tau":1}]}})");
  const std::string bad = (dir / "bad.json").string();
  write_text_file(bad, "{\"drift\": ");

  CHECK(run_cli("check " + zero) == 0);
  CHECK(run_cli("check " + c5) == 1);
  CHECK(run_cli("check " + bad) == 2);
  CHECK(run_cli("check " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("--bogus-flag check " + zero) == 2);
  CHECK(run_cli("simulate " + zero + " --horizon 1 --dt 1") == 2);

  const std::string a = (dir / "a.csv").string();
  const std::string b = (dir / "b.csv").string();
  CHECK(run_cli("simulate " + zero + " --seed 5 --horizon 2 --dt 0.01 --out " + a) == 0);
  CHECK(run_cli("simulate " + zero + " --seed 5 --horizon 2 --dt 0.01 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(run_cli("simulate " + zero + " --seed 5 --observations 20 --delta 0.5 --out " + a) == 0);
  CHECK(load_observations(a).n() == 20u);

  const std::string kl = (dir / "kl.json").string();
  CHECK(run_cli("klbound " + zero + " " + zero + " --samples 100 --out " + kl) == 0);
  CHECK(read_json_file(kl).at("total") == 0.0);
}

TEST_CASE("command line prior draws all pass the checker") {
  const fs::path dir = scratch("cli_prior");
  const std::string cfg = (dir / "prior.json").string();
  write_text_file(cfg, R"({"domain": {"d": 1, "r": 3}, "drift_prior": {"s": 4, "J": 4}})");
  const fs::path out = dir / "models";
  REQUIRE(run_cli("sample-prior --config " + cfg + " --count 1000 --seed 2 --out " + out.string()) == 0);
  std::size_t files = 0;
  std::size_t passing = 0;
  for (const auto& entry : fs::directory_iterator(out)) {
    ++files;
    const auto file = load_model_file(entry.path());
    if (check_conditions(*file.model, 8, 20, 1).ok()) ++passing;
  }
  CHECK(files == 1000u);
  CHECK(passing == 1000u);
  CHECK(run_cli("check " + (out / "model_00000.json").string()) == 0);
}
#endif
