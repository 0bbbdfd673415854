#include <doctest.h>

#include <string>

#include "ciest/config.hpp"
#include "ciest/errors.hpp"

using namespace ciest;

namespace {

const char* kMinimal = R"({
  "theta_star": [0.5],
  "agents": [{"family": "gaussian_linear", "A": [[1.0]], "Sigma": [[1.0]]}],
  "graph": {"mode": "static", "edges": []}
})";

std::string two_agent(const std::string& schedule_extra = "", const std::string& a1 = "[[0.0, 1.0]]") {
  return R"({
  "theta_star": [1.0, -1.0],
  "agents": [
    {"family": "gaussian_linear", "A": [[1.0, 0.0]], "Sigma": [[1.0]]},
    {"family": "gaussian_linear", "A": )" + a1 + R"(, "Sigma": [[2.0]]}
  ],
  "graph": {"mode": "erdos_renyi", "p": 0.5},
  "schedule": {"a": 1, "b": 1, "tau2": 0.3, "phi0": 1, "tau_phi": 0.45, "t0": "auto")" +
         schedule_extra + R"(},
  "horizon": 50,
  "replications": 3,
  "seed": 7
})";
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.network.size() == 1);
  CHECK(c.horizon == 1000);
  CHECK(c.replications == 1);
  CHECK(c.seed == 0);
  CHECK(c.t0_auto);
  CHECK(c.schedule.tau2 == 0.3);
  CHECK(c.checkpoints.ratio == 1.2);
  CHECK(c.diagnostics.comparator);
  CHECK(c.init.gain_init == GainInit::kFisher);
  CHECK(c.observability.pass);
  CHECK(c.warnings.empty());
}

TEST_CASE("schedule range is enforced") {
  std::string text = two_agent();
  text.replace(text.find("0.3"), 3, "0.6");
  const std::string err = error_of(text);
  CHECK(err.find("schedule.tau2") != std::string::npos);
  CHECK(error_of(two_agent().replace(two_agent().find("\"b\": 1"), 6, "\"b\": 0")).find("schedule.b") !=
        std::string::npos);
}

TEST_CASE("dimension errors name the agent") {
  const std::string err = error_of(two_agent("", "[[0.0, 1.0, 2.0]]"));
  CHECK(err.find("agents[1].A") != std::string::npos);
}

TEST_CASE("schema errors") {
  CHECK(error_of(R"({"theta_star": [1], "agents": [], "graph": {"mode": "static", "edges": []}})")
            .find("agents") != std::string::npos);
  std::string extra = kMinimal;
  extra.insert(extra.rfind('}'), R"(, "horizn": 5)");
  CHECK(error_of(extra).find("horizn") != std::string::npos);
  CHECK_FALSE(error_of("{ not json").empty());
  CHECK(error_of(two_agent().replace(two_agent().find("\"seed\": 7"), 9, "\"seed\": -1")).find("seed") !=
        std::string::npos);
}

TEST_CASE("round trip and hash") {
  const RunConfig c = parse_config(two_agent());
  const RunConfig back = parse_config(to_json(c).dump());
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  // Same document with keys in a different order.
  const std::string reordered = R"({
  "seed": 7, "replications": 3, "horizon": 50,
  "schedule": {"t0": "auto", "tau_phi": 0.45, "phi0": 1, "tau2": 0.3, "b": 1, "a": 1},
  "graph": {"p": 0.5, "mode": "erdos_renyi"},
  "agents": [
    {"Sigma": [[1.0]], "A": [[1.0, 0.0]], "family": "gaussian_linear"},
    {"Sigma": [[2.0]], "A": [[0.0, 1.0]], "family": "gaussian_linear"}
  ],
  "theta_star": [1.0, -1.0]
})";
  CHECK(config_hash(parse_config(reordered)) == config_hash(c));

  std::string changed = two_agent();
  changed.replace(changed.find("\"seed\": 7"), 9, "\"seed\": 8");
  CHECK(config_hash(parse_config(changed)) != config_hash(c));

  const RunConfig fixed = parse_config(two_agent().replace(two_agent().find("\"auto\""), 6, "4"));
  CHECK_FALSE(fixed.t0_auto);
  CHECK(fixed.schedule.t0 == 4);
  CHECK(parse_config(to_json(fixed).dump()) == fixed);
}

TEST_CASE("checkpoint times") {
  CHECK(checkpoint_times(1, 1.2) == std::vector<std::int64_t>{1});
  const auto ts = checkpoint_times(100, 1.2);
  CHECK(ts.front() == 1);
  CHECK(ts.back() == 100);
  for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] > ts[i - 1]);
  CHECK(checkpoint_times(20000, 1.2).size() == 56);
}

TEST_CASE("pre-flight warnings") {
  const std::string blind = R"({
  "theta_star": [0.5, 0.5],
  "agents": [{"family": "gaussian_linear", "A": [[1.0, 0.0]], "Sigma": [[1.0]]},
             {"family": "gaussian_linear", "A": [[2.0, 0.0]], "Sigma": [[1.0]]}],
  "graph": {"mode": "erdos_renyi", "p": 1.0}
})";
  const RunConfig b = parse_config(blind);
  CHECK_FALSE(b.observability.pass);
  REQUIRE(b.warnings.size() == 1);
  CHECK(b.warnings[0].find("not globally observable") != std::string::npos);

  const std::string pois = R"({
  "theta_star": [0.2],
  "agents": [{"family": "poisson_log_linear", "a": [1.0]}],
  "graph": {"mode": "static", "edges": []}
})";
  const RunConfig p = parse_config(pois);
  REQUIRE(p.warnings.size() == 1);
  CHECK(p.warnings[0].find("experimental") != std::string::npos);

  const std::string split = R"({
  "theta_star": [0.2],
  "agents": [{"family": "bernoulli_logit", "a": [1.0]}, {"family": "bernoulli_logit", "a": [1.0]},
             {"family": "bernoulli_logit", "a": [1.0]}],
  "graph": {"mode": "edge_subsample", "edges": [[0, 1]], "p": 0.5}
})";
  const RunConfig s = parse_config(split);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("disconnected") != std::string::npos);
}

TEST_CASE("suite configs parse") {
  for (const char* name : {"cstar", "bernoulli", "unobservable", "disconnected"}) {
    INFO(name);
    const RunConfig c = load_config(std::string(CIEST_SUITE_DIR) + "/" + name + ".json");
    CHECK(c.horizon == 20000);
  }
  CHECK(load_config(std::string(CIEST_SUITE_DIR) + "/cstar.json").schedule.t0 == 13);
  CHECK_THROWS_AS(load_config(std::string(CIEST_SUITE_DIR) + "/nope.json"), InputError);
}
