#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mobnet/config.hpp"
#include "mobnet/experiments.hpp"

using namespace mobnet;
namespace fs = std::filesystem;

namespace {

const char* kSymmetric = R"({
  // two nodes, symmetric mobility
  "kind": "identity-suite",
  "rates": [[null, 1], [1, null]],
  "arrival": [0.5, 0.5],
  "capacity": [1, 1],
  /* short pathwise section */
  "paths": 50,
  "t_max": 3,
  "seed": 7
})";

std::string with(const std::string& extra) {
  std::string s = kSymmetric;
  s.insert(s.rfind('}'), ",\n" + extra);
  return s;
}

ConfigErrc error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a ConfigError";
  return ConfigErrc::Io;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("mobnet_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Config, ParsesCommentsAndNullDiagonal) {
  ExperimentConfig c = parse_config(kSymmetric);
  EXPECT_EQ(c.kind, ExperimentKind::IdentitySuite);
  EXPECT_FALSE(c.rates[0][0].has_value());
  EXPECT_DOUBLE_EQ(*c.rates[0][1], 1.0);
  EXPECT_EQ(c.paths, 50);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_NEAR(spectral_of(c).trace_rate(), 2.0, 1e-12);
}

TEST(Config, UnknownKeysAreErrors) {
  EXPECT_EQ(error_of(with(R"("pahts": 3)")), ConfigErrc::ConfigInvalid);
  EXPECT_EQ(error_of(with(R"("plan": {"replica": 3})")), ConfigErrc::ConfigInvalid);
  try {
    parse_config(with(R"("plan": {"replica": 3})"));
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("replica"), std::string::npos) << e.what();
  }
}

TEST(Config, FieldLevelMessages) {
  try {
    parse_config(with(R"("plan": {"replicas": -1})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ConfigErrc::ConfigInvalid);
    EXPECT_NE(std::string(e.what()).find("replicas"), std::string::npos) << e.what();
  }
}

TEST(Config, RegimeMismatchIsInvalid) {
  std::string text = kSymmetric;
  text.replace(text.find("identity-suite"), 14, "fluid");
  text.replace(text.find("[0.5, 0.5]"), 10, "[1, 1]");
  EXPECT_EQ(error_of(text.insert(text.rfind('}'), R"(, "regime": "subcritical")")), ConfigErrc::ConfigInvalid);
}

TEST(Config, ReducibleMatrixIsSpectralRejection) {
  std::string text = kSymmetric;
  text.replace(text.find("[[null, 1], [1, null]]"), 22, "[[null, 1], [0, null]]");
  EXPECT_EQ(error_of(text), ConfigErrc::SpectralRejection);
}

TEST(Config, TrappingThresholdsRespectEps0) {
  std::string text = kSymmetric;
  text.replace(text.find("identity-suite"), 14, "trapping");
  text.replace(text.find("[0.5, 0.5]"), 10, "[2, 2]");
  // eps0 = 0.5 (min pi / 2)^2 = 0.03125 for two nodes.
  EXPECT_EQ(error_of(std::string(text).insert(text.rfind('}'), R"(, "eps": 0.05, "delta": 0.01)")),
            ConfigErrc::ConfigInvalid);
  EXPECT_NO_THROW(parse_config(std::string(text).insert(text.rfind('}'), R"(, "eps": 0.02, "delta": 0.01)")));
}

TEST(Config, RoundTripThroughCanonicalText) {
  ExperimentConfig a = parse_config(
      with(R"("plan": {"ladder": [10, 20], "replicas": 3, "start": "corner", "delta_exponent": 0.25, "rho": [0.5, 0.5]},
              "alphas": [0.3, 0.7], "times": [0, 1], "output": "somewhere")"));
  ExperimentConfig b = parse_config(to_json_text(a));
  EXPECT_TRUE(equivalent(a, b));
  EXPECT_EQ(b.plan.ladder, (std::vector<long>{10, 20}));
  EXPECT_EQ(b.plan.replicas, 3);
  EXPECT_EQ(b.plan.start, StartRecipe::Corner);
  EXPECT_DOUBLE_EQ(b.plan.delta_exponent, 0.25);
  EXPECT_TRUE(b.plan.rho.isApprox(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_EQ(b.alphas, a.alphas);
  EXPECT_EQ(b.times, a.times);
  EXPECT_EQ(b.output, "somewhere");
  EXPECT_EQ(b.rates, a.rates);
  EXPECT_EQ(b.seed, a.seed);
}

TEST(Run, IdentitySuiteOnSymmetricPairPasses) {
  ExperimentConfig c = parse_config(kSymmetric);
  c.output = scratch("identity").string();
  RunResult r = run_experiment(c);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_FALSE(r.hard_failure);
  EXPECT_TRUE(fs::exists(fs::path(c.output) / "manifest.json"));
  EXPECT_TRUE(fs::exists(fs::path(c.output) / "summary.json"));
  for (const auto& f : r.files) EXPECT_TRUE(fs::exists(fs::path(c.output) / f)) << f;
}

TEST(Run, ManifestReparsesToEquivalentConfig) {
  ExperimentConfig c = parse_config(kSymmetric);
  c.kind = ExperimentKind::Simulate;
  c.output = scratch("manifest").string();
  run_experiment(c);
  ExperimentConfig back = config_from_manifest(slurp(fs::path(c.output) / "manifest.json"));
  EXPECT_TRUE(equivalent(c, back));
}

TEST(Run, SameSeedGivesByteIdenticalCsv) {
  ExperimentConfig c = parse_config(
      with(R"("plan": {"ladder": [20, 40], "replicas": 4, "horizon": 1})"));
  c.kind = ExperimentKind::Kelly;
  std::vector<std::string> csv;
  for (const char* tag : {"a", "b"}) {
    c.output = scratch(std::string("rerun_") + tag).string();
    RunResult r = run_experiment(c);
    for (const auto& f : r.files)
      if (f.ends_with(".csv")) csv.push_back(slurp(fs::path(c.output) / f));
  }
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_FALSE(csv[0].empty());
  EXPECT_EQ(csv[0], csv[1]);
}

TEST(Run, WorkerCountDoesNotChangeResults) {
  ExperimentConfig c = parse_config(
      with(R"("plan": {"ladder": [20, 40], "replicas": 6, "horizon": 1})"));
  c.kind = ExperimentKind::Kelly;
  std::vector<std::string> csv;
  for (int w : {1, 3}) {
    c.workers = w;
    c.plan.workers = w;
    c.output = scratch("workers_" + std::to_string(w)).string();
    run_experiment(c);
    csv.push_back(slurp(fs::path(c.output) / "replicas.csv"));
  }
  EXPECT_EQ(csv[0], csv[1]);
}

TEST(Describe, PrintsDerivedQuantities) {
  // lambda = 1, mu = 2, a = 1
  ExperimentConfig c = parse_config(with(R"("plan": {"ladder": [16, 256], "scale": 1})"));
  const std::string d = describe(c);
  EXPECT_NE(d.find("theta       2"), std::string::npos) << d;
  EXPECT_NE(d.find("t_a         1"), std::string::npos) << d;
  EXPECT_NE(d.find("delta_N = N^-0.25"), std::string::npos) << d;
  // delta_16 = 16^{-1/4} = 0.5
  EXPECT_NE(d.find("        16           0.5"), std::string::npos) << d;
}
