#include "ciest/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ciest/errors.hpp"

namespace ciest {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!ok.contains(item.key())) fail(path + "." + item.key(), "unknown key");
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(path.empty() ? key : path + "." + key, "missing required field");
  return j.at(key);
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::int64_t read_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

Vector read_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = read_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix read_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty nested array");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].empty()) fail(rp, "expected a non-empty row");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols)
      fail(rp, "row has " + std::to_string(j[r].size()) + " entries, expected " +
                   std::to_string(cols));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = read_number(
          j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  return m;
}

std::vector<Edge> read_edges(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of index pairs");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto ep = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) fail(ep, "expected a pair [i, j]");
    edges.emplace_back(static_cast<int>(read_integer(j[i][0], ep + "[0]")),
                       static_cast<int>(read_integer(j[i][1], ep + "[1]")));
  }
  return edges;
}

AgentModel read_agent(const json& j, const std::string& path, int param_dim) {
  const std::string family = [&] {
    const json& f = require(j, path, "family");
    if (!f.is_string()) fail(path + ".family", "expected a string");
    return f.get<std::string>();
  }();
  try {
    if (family == "gaussian_linear") {
      check_keys(j, path, {"family", "A", "Sigma"});
      Matrix A = read_matrix(require(j, path, "A"), path + ".A");
      if (A.cols() != param_dim)
        fail(path + ".A", "has " + std::to_string(A.cols()) + " columns, expected " +
                              std::to_string(param_dim));
      Matrix sigma = read_matrix(require(j, path, "Sigma"), path + ".Sigma");
      return AgentModel::gaussian_linear(std::move(A), std::move(sigma));
    }
    if (family == "poisson_log_linear" || family == "bernoulli_logit") {
      check_keys(j, path, {"family", "a"});
      Vector a = read_vector(require(j, path, "a"), path + ".a");
      if (a.size() != param_dim)
        fail(path + ".a", "has length " + std::to_string(a.size()) + ", expected " +
                              std::to_string(param_dim));
      return family == "bernoulli_logit" ? AgentModel::bernoulli_logit(std::move(a))
                                         : AgentModel::poisson_log_linear(std::move(a));
    }
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    fail(path, msg);
  }
  fail(path + ".family", "unknown family '" + family + "'");
}

RandomGraphProcess read_graph(const json& j, int n_agents) {
  const std::string path = "graph";
  const json& mode = require(j, path, "mode");
  if (!mode.is_string()) fail(path + ".mode", "expected a string");
  const auto tag = mode.get<std::string>();
  try {
    if (tag == "erdos_renyi") {
      check_keys(j, path, {"mode", "p"});
      return RandomGraphProcess(n_agents, ErdosRenyi{read_number(require(j, path, "p"), "graph.p")});
    }
    if (tag == "edge_subsample") {
      check_keys(j, path, {"mode", "edges", "p"});
      return RandomGraphProcess(
          n_agents, EdgeSubsample{read_edges(require(j, path, "edges"), "graph.edges"),
                                  read_number(require(j, path, "p"), "graph.p")});
    }
    if (tag == "static") {
      check_keys(j, path, {"mode", "edges"});
      return RandomGraphProcess(n_agents,
                                StaticGraph{read_edges(require(j, path, "edges"), "graph.edges")});
    }
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    fail(path, msg);
  }
  fail(path + ".mode", "unknown graph mode '" + tag + "'");
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

json edges_json(const std::vector<Edge>& edges) {
  json a = json::array();
  for (const auto& [i, j] : edges) a.push_back({i, j});
  return a;
}

std::vector<Vector> read_vector_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of vectors");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(read_vector(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

Parameter observability_probe(const Parameter& theta_star) {
  return theta_star + Vector::Constant(theta_star.size(), 0.1);
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: malformed document: ") + e.what());
  }
  check_keys(doc, "config",
             {"theta_star", "agents", "graph", "schedule", "horizon", "replications", "seed",
              "checkpoints", "diagnostics", "init", "output", "workers"});

  Parameter theta_star = read_vector(require(doc, "", "theta_star"), "theta_star");
  const int m = static_cast<int>(theta_star.size());

  const json& agents_json = require(doc, "", "agents");
  if (!agents_json.is_array() || agents_json.empty())
    fail("agents", "expected a non-empty array of agent models");
  std::vector<AgentModel> agents;
  std::vector<std::string> warnings;
  for (std::size_t n = 0; n < agents_json.size(); ++n) {
    const auto path = "agents[" + std::to_string(n) + "]";
    agents.push_back(read_agent(agents_json[n], path, m));
    if (family_traits(agents.back().kind()).experimental)
      warnings.push_back(path + ": " + std::string(family_tag(agents.back().kind())) +
                         " is experimental (mean map has no global linear growth bound)");
  }
  SensorNetworkModel network(std::move(agents));
  const int n_agents = network.size();

  RandomGraphProcess graph = read_graph(require(doc, "", "graph"), n_agents);

  WeightSchedule schedule;
  bool t0_auto = true;
  if (doc.contains("schedule")) {
    const json& s = doc.at("schedule");
    check_keys(s, "schedule", {"a", "b", "tau2", "phi0", "tau_phi", "t0"});
    if (s.contains("a")) schedule.a = read_number(s.at("a"), "schedule.a");
    if (s.contains("b")) schedule.b = read_number(s.at("b"), "schedule.b");
    if (s.contains("tau2")) schedule.tau2 = read_number(s.at("tau2"), "schedule.tau2");
    if (s.contains("phi0")) schedule.phi0 = read_number(s.at("phi0"), "schedule.phi0");
    if (s.contains("tau_phi")) schedule.tau_phi = read_number(s.at("tau_phi"), "schedule.tau_phi");
    if (s.contains("t0")) {
      const json& t0 = s.at("t0");
      if (t0.is_string()) {
        if (t0.get<std::string>() != "auto") fail("schedule.t0", "expected an integer or \"auto\"");
      } else {
        schedule.t0 = read_integer(t0, "schedule.t0");
        t0_auto = false;
      }
    }
  }
  if (!(schedule.tau2 > 0.0 && schedule.tau2 < 0.5))
    fail("schedule.tau2", "must lie in (0, 1/2) so that beta_t decays slower than alpha_t "
                          "while staying square-summable against it");
  schedule.validate();
  if (t0_auto) schedule.t0 = auto_schedule_offset(schedule, graph);

  auto positive_int = [&](const char* key, std::int64_t fallback) {
    if (!doc.contains(key)) return fallback;
    const std::int64_t v = read_integer(doc.at(key), key);
    if (v < 1) fail(key, "must be >= 1");
    return v;
  };
  const std::int64_t horizon = positive_int("horizon", 1000);
  const std::int64_t replications = positive_int("replications", 1);
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer()) fail("seed", "expected a 64-bit integer");
    if (s.is_number_unsigned())
      seed = s.get<std::uint64_t>();
    else if (s.get<std::int64_t>() >= 0)
      seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    else
      fail("seed", "must be nonnegative");
  }

  CheckpointPolicy checkpoints;
  if (doc.contains("checkpoints")) {
    check_keys(doc.at("checkpoints"), "checkpoints", {"ratio"});
    if (doc.at("checkpoints").contains("ratio"))
      checkpoints.ratio = read_number(doc.at("checkpoints").at("ratio"), "checkpoints.ratio");
    if (!(checkpoints.ratio > 1.0)) fail("checkpoints.ratio", "must be > 1");
  }

  Diagnostics diagnostics;
  if (doc.contains("diagnostics")) {
    const json& d = doc.at("diagnostics");
    check_keys(d, "diagnostics", {"comparator", "lyapunov", "mle", "debug_checks"});
    if (d.contains("comparator")) diagnostics.comparator = read_bool(d.at("comparator"), "diagnostics.comparator");
    if (d.contains("lyapunov")) diagnostics.lyapunov = read_bool(d.at("lyapunov"), "diagnostics.lyapunov");
    if (d.contains("mle")) diagnostics.mle = read_bool(d.at("mle"), "diagnostics.mle");
    if (d.contains("debug_checks")) diagnostics.debug_checks = read_bool(d.at("debug_checks"), "diagnostics.debug_checks");
  }

  InitOptions init;
  if (doc.contains("init")) {
    const json& i = doc.at("init");
    check_keys(i, "init", {"aux_x", "opt_x", "gain"});
    if (i.contains("aux_x")) init.aux_x = read_vector_list(i.at("aux_x"), "init.aux_x");
    if (i.contains("opt_x")) init.opt_x = read_vector_list(i.at("opt_x"), "init.opt_x");
    if (i.contains("gain")) {
      const json& g = i.at("gain");
      if (g == "fisher")
        init.gain_init = GainInit::kFisher;
      else if (g == "zero")
        init.gain_init = GainInit::kZero;
      else
        fail("init.gain", "expected \"fisher\" or \"zero\"");
    }
    for (const auto* list : {&init.aux_x, &init.opt_x}) {
      if (list->empty()) continue;
      const char* name = list == &init.aux_x ? "init.aux_x" : "init.opt_x";
      if (static_cast<int>(list->size()) != n_agents)
        fail(name, "expected " + std::to_string(n_agents) + " vectors");
      for (std::size_t n = 0; n < list->size(); ++n)
        if ((*list)[n].size() != m)
          fail(std::string(name) + "[" + std::to_string(n) + "]",
               "expected length " + std::to_string(m));
    }
  }
  init.comparator = diagnostics.comparator;

  OutputSpec output;
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_keys(o, "output", {"dir", "trajectory"});
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) fail("output.dir", "expected a string");
      output.dir = o.at("dir").get<std::string>();
    }
    if (o.contains("trajectory")) output.trajectory = read_bool(o.at("trajectory"), "output.trajectory");
  }

  int workers = 0;
  if (doc.contains("workers")) {
    const std::int64_t w = read_integer(doc.at("workers"), "workers");
    if (w < 0) fail("workers", "must be >= 0");
    workers = static_cast<int>(w);
  }

  RunConfig config{std::move(network), std::move(graph), schedule, t0_auto, theta_star,
                   horizon, replications, seed, checkpoints, diagnostics, std::move(init),
                   std::move(output), workers, {}, std::move(warnings)};

  config.observability =
      check_observability(config.network, config.theta_star, observability_probe(config.theta_star));
  if (!config.observability.pass)
    config.warnings.push_back("network is not globally observable at theta_star");
  if (config.network.size() > 1 && fiedler_value(mean_laplacian(config.graph)) <= 1e-12)
    config.warnings.push_back("mean Laplacian is disconnected (lambda_2 = 0)");
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

json to_json(const RunConfig& c) {
  json doc;
  doc["theta_star"] = vector_json(c.theta_star);
  json agents = json::array();
  for (const auto& a : c.network.agents()) {
    json aj;
    aj["family"] = std::string(family_tag(a.kind()));
    if (const auto* g = std::get_if<GaussianLinear>(&a.spec())) {
      aj["A"] = matrix_json(g->A);
      aj["Sigma"] = matrix_json(g->Sigma);
    } else if (const auto* p = std::get_if<PoissonLogLinear>(&a.spec())) {
      aj["a"] = vector_json(p->a);
    } else {
      aj["a"] = vector_json(std::get<BernoulliLogit>(a.spec()).a);
    }
    agents.push_back(std::move(aj));
  }
  doc["agents"] = std::move(agents);

  json graph;
  if (const auto* er = std::get_if<ErdosRenyi>(&c.graph.mode())) {
    graph = {{"mode", "erdos_renyi"}, {"p", er->p}};
  } else if (const auto* es = std::get_if<EdgeSubsample>(&c.graph.mode())) {
    graph = {{"mode", "edge_subsample"}, {"p", es->p}, {"edges", edges_json(es->base_edges)}};
  } else {
    graph = {{"mode", "static"}, {"edges", edges_json(std::get<StaticGraph>(c.graph.mode()).edges)}};
  }
  doc["graph"] = std::move(graph);

  json schedule = {{"a", c.schedule.a},       {"b", c.schedule.b},
                   {"tau2", c.schedule.tau2}, {"phi0", c.schedule.phi0},
                   {"tau_phi", c.schedule.tau_phi}};
  if (c.t0_auto)
    schedule["t0"] = "auto";
  else
    schedule["t0"] = c.schedule.t0;
  doc["schedule"] = std::move(schedule);

  doc["horizon"] = c.horizon;
  doc["replications"] = c.replications;
  doc["seed"] = c.seed;
  doc["checkpoints"] = {{"ratio", c.checkpoints.ratio}};
  doc["diagnostics"] = {{"comparator", c.diagnostics.comparator},
                        {"lyapunov", c.diagnostics.lyapunov},
                        {"mle", c.diagnostics.mle},
                        {"debug_checks", c.diagnostics.debug_checks}};
  json init = {{"gain", c.init.gain_init == GainInit::kFisher ? "fisher" : "zero"}};
  auto list_json = [](const std::vector<Vector>& vs) {
    json a = json::array();
    for (const auto& v : vs) a.push_back(vector_json(v));
    return a;
  };
  if (!c.init.aux_x.empty()) init["aux_x"] = list_json(c.init.aux_x);
  if (!c.init.opt_x.empty()) init["opt_x"] = list_json(c.init.opt_x);
  doc["init"] = std::move(init);
  doc["output"] = {{"dir", c.output.dir}, {"trajectory", c.output.trajectory}};
  doc["workers"] = c.workers;
  return doc;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return to_json(a) == to_json(b) && a.schedule == b.schedule;
}

std::string config_hash(const RunConfig& config) {
  // Object keys are stored sorted, so dump() is canonical.
  const std::string canonical = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::int64_t> checkpoint_times(std::int64_t horizon, double ratio) {
  if (horizon < 1) throw InputError("horizon must be >= 1");
  if (!(ratio > 1.0)) throw InputError("checkpoint ratio must be > 1");
  std::vector<std::int64_t> times;
  double next = 1.0;
  std::int64_t t = 1;
  while (t < horizon) {
    times.push_back(t);
    next *= ratio;
    t = std::max(t + 1, static_cast<std::int64_t>(std::floor(next)));
  }
  times.push_back(horizon);
  return times;
}

}  // namespace ciest
