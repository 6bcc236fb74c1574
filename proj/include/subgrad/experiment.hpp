#pragma once

#include <algorithm>
#include <cstdlib>
#include <future>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subgrad/absolute_probability.hpp"
#include "subgrad/diagnostics.hpp"
#include "subgrad/engine.hpp"
#include "subgrad/error.hpp"
#include "subgrad/graph_conditions.hpp"
#include "subgrad/io.hpp"
#include "subgrad/matrix_sequence.hpp"
#include "subgrad/problems.hpp"
#include "subgrad/random.hpp"
#include "subgrad/step_schedules.hpp"
#include "subgrad/stochastic_matrix.hpp"

namespace subgrad {

using nlohmann::json;

struct CheckFlags {
  bool a1 = false;
  bool a1prime = false;
  bool a1star = false;
  bool a2a3 = false;
  bool embedding = false;

  bool any_graph() const { return a1 || a1prime || a1star; }
};

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> snapshots;
  bool strict = false;
  bool verify = false;
};

namespace detail {

inline void require_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(Errc::config_invalid, where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw Error(Errc::config_invalid, where + " has unknown key '" + item.key() + "'");
  }
}

inline const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key))
    throw Error(Errc::config_invalid, where + " is missing key '" + key + "'");
  return obj.at(key);
}

inline double need_number(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number()) throw Error(Errc::config_invalid, where + " key '" + key + "' must be a number");
  return v.get<double>();
}

inline long need_integer(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number_integer())
    throw Error(Errc::config_invalid, where + " key '" + key + "' must be an integer");
  return v.get<long>();
}

inline std::string need_string(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_string()) throw Error(Errc::config_invalid, where + " key '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(Errc::config_invalid, where + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw Error(Errc::config_invalid, where + " must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<std::vector<double>> number_table(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(Errc::config_invalid, where + " must be an array of rows");
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (const auto& row : v) out.push_back(number_array(row, where + " row"));
  return out;
}

inline std::vector<std::vector<double>> load_rows_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(Errc::config_invalid, path + " has a non-numeric cell '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::config_invalid, path + " contains no data rows");
  return rows;
}

inline int thread_cap() {
  if (const char* env = std::getenv("CONSENSUS_SUBGRAD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, 64));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

}  // namespace detail

inline SnapshotPlan parse_snapshot_plan(const std::string& text) {
  SnapshotPlan plan;
  if (text == "geometric") {
    plan.kind = SnapshotPlan::Kind::geometric;
    return plan;
  }
  if (text.rfind("every:", 0) == 0) {
    char* end = nullptr;
    const long k = std::strtol(text.c_str() + 6, &end, 10);
    if (end && *end == '\0' && k >= 1) {
      plan.kind = SnapshotPlan::Kind::every;
      plan.every = k;
      return plan;
    }
  }
  throw Error(Errc::config_invalid,
              "snapshots must be 'geometric' or 'every:k', got '" + text + "'");
}

/// Parsed and validated experiment description. `effective` is the config
/// document after CLI overrides; the hash covers it minus the output path.
struct Experiment {
  json effective;
  std::string config_hash;
  std::string algorithm;
  long steps = 0;
  std::optional<std::uint64_t> seed;
  SnapshotPlan plan;
  std::string output = "out";
  CheckFlags checks;
  bool skip_descent_until_positive = false;
  double convergence_threshold = 1e-2;
  std::vector<std::string> compare_algorithms;

  std::shared_ptr<ConvexProblem> problem;
  std::optional<MatrixSequence> seq;
  std::shared_ptr<AbsProbSequence> abs_prob;  // null when not computable
  std::string abs_prob_failure;               // reason when null
  std::optional<StepSchedule> schedule;       // direct algorithms
  double c = 0.0, alpha = 0.0;                // scalar-step algorithms
  std::vector<double> x0;                     // w0 for push algorithms
  std::vector<double> y0;
};

namespace detail {

inline std::shared_ptr<ConvexProblem> build_problem(const json& spec,
                                                    std::optional<std::uint64_t> seed,
                                                    bool* randomized) {
  require_keys(spec, "problem",
               {"type", "anchors", "anchors_csv", "agents", "dim", "box", "rows", "rows_csv"});
  const std::string type = need_string(spec, "type", "problem");
  if (type == "l1_median") {
    if (spec.contains("anchors"))
      return std::make_shared<L1MedianInstance>(number_table(spec.at("anchors"), "problem.anchors"));
    if (spec.contains("anchors_csv"))
      return std::make_shared<L1MedianInstance>(
          load_rows_csv(spec.at("anchors_csv").get<std::string>()));
    const int agents = static_cast<int>(need_integer(spec, "agents", "problem"));
    const int dim = static_cast<int>(need_integer(spec, "dim", "problem"));
    double lo = -1.0, hi = 1.0;
    if (spec.contains("box")) {
      const auto box = number_array(spec.at("box"), "problem.box");
      if (box.size() != 2 || !(box[0] < box[1]))
        throw Error(Errc::config_invalid, "problem.box must be [lo, hi] with lo < hi");
      lo = box[0];
      hi = box[1];
    }
    *randomized = true;
    if (!seed) throw Error(Errc::config_invalid, "seed is required for a seeded problem");
    const std::uint64_t pseed = splitmix64(*seed ^ fnv1a("problem"));
    return std::make_shared<L1MedianInstance>(L1MedianInstance::seeded(agents, dim, pseed, lo, hi));
  }
  if (type == "l1_regression") {
    if (spec.contains("rows"))
      return std::make_shared<L1RegressionInstance>(number_table(spec.at("rows"), "problem.rows"));
    if (spec.contains("rows_csv"))
      return std::make_shared<L1RegressionInstance>(
          load_rows_csv(spec.at("rows_csv").get<std::string>()));
    throw Error(Errc::config_invalid, "problem of type l1_regression needs 'rows' or 'rows_csv'");
  }
  throw Error(Errc::config_invalid, "problem.type must be l1_median or l1_regression");
}

inline MatrixSequence build_sequence(const json& spec, std::optional<std::uint64_t> seed,
                                     bool* randomized) {
  require_keys(spec, "sequence", {"rule", "matrix", "matrices", "n", "kind", "density",
                                  "positive_diagonal", "no_zero_rows", "min_weight"});
  const std::string rule = need_string(spec, "rule", "sequence");
  if (rule == "constant") return MatrixSequence::constant(matrix_from_json(need(spec, "matrix", "sequence")));
  if (rule == "periodic" || rule == "explicit") {
    const json& arr = need(spec, "matrices", "sequence");
    if (!arr.is_array() || arr.empty())
      throw Error(Errc::config_invalid, "sequence.matrices must be a nonempty array");
    std::vector<StochasticMatrix> mats;
    mats.reserve(arr.size());
    for (const auto& m : arr) mats.push_back(matrix_from_json(m));
    return rule == "periodic" ? MatrixSequence::periodic(std::move(mats))
                              : MatrixSequence::explicit_then_hold(std::move(mats));
  }
  if (rule == "random") {
    RandomMatrixFamily fam;
    fam.n = static_cast<int>(need_integer(spec, "n", "sequence"));
    fam.kind = stochasticity_from_string(need_string(spec, "kind", "sequence"));
    if (spec.contains("density")) fam.density = spec.at("density").get<double>();
    if (spec.contains("positive_diagonal")) fam.positive_diagonal = spec.at("positive_diagonal").get<bool>();
    if (spec.contains("no_zero_rows")) fam.no_zero_rows = spec.at("no_zero_rows").get<bool>();
    if (spec.contains("min_weight")) fam.min_weight = spec.at("min_weight").get<double>();
    if (fam.density < 0.0 || fam.density > 1.0 || fam.min_weight <= 0.0 || fam.min_weight >= 1.0)
      throw Error(Errc::config_invalid, "sequence family parameters out of range");
    *randomized = true;
    if (!seed) throw Error(Errc::config_invalid, "seed is required for a random sequence");
    return MatrixSequence::seeded_random(fam, splitmix64(*seed ^ fnv1a("sequence")));
  }
  throw Error(Errc::config_invalid, "sequence.rule must be constant, periodic, explicit or random");
}

inline std::vector<double> build_x0(const json* spec, const ConvexProblem& problem,
                                    std::optional<std::uint64_t> seed, bool* randomized) {
  const int n = problem.agents(), d = problem.dim();
  std::string mode;
  if (spec) {
    require_keys(*spec, "x0", {"mode", "values", "box"});
    mode = need_string(*spec, "mode", "x0");
  } else {
    mode = dynamic_cast<const L1MedianInstance*>(&problem) ? "anchors" : "zeros";
  }
  if (mode == "zeros") return std::vector<double>(static_cast<std::size_t>(n) * d, 0.0);
  if (mode == "anchors") {
    const auto* median = dynamic_cast<const L1MedianInstance*>(&problem);
    if (!median)
      throw Error(Errc::config_invalid, "x0 mode 'anchors' needs an l1_median problem");
    std::vector<double> x0(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k)
        x0[static_cast<std::size_t>(i) * d + k] = median->anchors()[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return x0;
  }
  if (mode == "explicit") {
    const auto table = number_table(need(*spec, "values", "x0"), "x0.values");
    if (static_cast<int>(table.size()) != n)
      throw Error(Errc::config_invalid, "x0.values must have one row per agent");
    std::vector<double> x0;
    x0.reserve(static_cast<std::size_t>(n) * d);
    for (const auto& row : table) {
      if (static_cast<int>(row.size()) != d)
        throw Error(Errc::config_invalid, "x0.values rows must have length dim");
      x0.insert(x0.end(), row.begin(), row.end());
    }
    return x0;
  }
  if (mode == "random") {
    *randomized = true;
    if (!seed) throw Error(Errc::config_invalid, "seed is required for random x0");
    double lo = -1.0, hi = 1.0;
    if (spec->contains("box")) {
      const auto box = number_array(spec->at("box"), "x0.box");
      if (box.size() != 2 || !(box[0] < box[1]))
        throw Error(Errc::config_invalid, "x0.box must be [lo, hi] with lo < hi");
      lo = box[0];
      hi = box[1];
    }
    std::vector<double> x0(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
      auto rng = seeded_engine(splitmix64(*seed ^ fnv1a("x0")), static_cast<std::uint64_t>(i));
      for (int k = 0; k < d; ++k) x0[static_cast<std::size_t>(i) * d + k] = uniform(rng, lo, hi);
    }
    return x0;
  }
  throw Error(Errc::config_invalid, "x0.mode must be anchors, zeros, explicit or random");
}

inline bool is_push(const std::string& algorithm) {
  return algorithm == "subgradient_push" || algorithm == "push_first";
}

inline bool is_direct(const std::string& algorithm) {
  return algorithm == "dgd" || algorithm == "dgd_post" || algorithm == "unified";
}

inline void check_algorithm_kind(const std::string& algorithm, const MatrixSequence& seq) {
  const Stochasticity kind = seq.kind();
  if (algorithm == "dgd" && kind != Stochasticity::doubly)
    throw Error(Errc::config_invalid, "dgd needs a doubly stochastic sequence");
  if (is_direct(algorithm) && kind == Stochasticity::column)
    throw Error(Errc::config_invalid, algorithm + " needs a row-stochastic sequence");
  if (algorithm == "row_stochastic") {
    if (kind == Stochasticity::column)
      throw Error(Errc::config_invalid, "row_stochastic needs a row-stochastic matrix");
    if (seq.rule() != MatrixSequence::Rule::constant)
      throw Error(Errc::config_invalid, "row_stochastic needs a constant sequence");
  }
  if (is_push(algorithm) && kind == Stochasticity::row)
    throw Error(Errc::config_invalid, algorithm + " needs a column-stochastic sequence");
}

}  // namespace detail

/// Parses, validates and assembles one experiment. Throws ConfigInvalid with
/// the offending key in the message; never repairs inputs.
inline Experiment build_experiment(json config, const Overrides& over) {
  detail::require_keys(config, "config",
                       {"schema_version", "algorithm", "algorithms", "steps", "seed", "snapshots",
                        "output", "problem", "sequence", "schedule", "x0", "y0", "checks",
                        "skip_descent_until_positive", "convergence_threshold"});
  if (detail::need_integer(config, "schema_version", "config") != 1)
    throw Error(Errc::config_invalid, "schema_version must be 1");
  if (over.seed) config["seed"] = *over.seed;
  if (over.snapshots) config["snapshots"] = *over.snapshots;
  if (over.out) config["output"] = *over.out;

  Experiment exp;
  exp.effective = config;
  {
    json hashed = config;
    hashed.erase("output");
    exp.config_hash = to_hex(fnv1a(hashed.dump()));
  }
  if (config.contains("algorithm")) exp.algorithm = config.at("algorithm").get<std::string>();
  exp.steps = detail::need_integer(config, "steps", "config");
  if (exp.steps < 0) throw Error(Errc::config_invalid, "steps must be >= 0");
  if (config.contains("seed")) {
    if (!config.at("seed").is_number_integer() || config.at("seed").get<long long>() < 0)
      throw Error(Errc::config_invalid, "seed must be a nonnegative integer");
    exp.seed = config.at("seed").get<std::uint64_t>();
  }
  exp.plan = parse_snapshot_plan(config.value("snapshots", std::string("geometric")));
  exp.output = config.value("output", std::string("out"));
  if (config.contains("checks")) {
    const json& c = config.at("checks");
    detail::require_keys(c, "checks", {"a1", "a1prime", "a1star", "a2a3", "embedding"});
    exp.checks.a1 = c.value("a1", false);
    exp.checks.a1prime = c.value("a1prime", false);
    exp.checks.a1star = c.value("a1star", false);
    exp.checks.a2a3 = c.value("a2a3", false);
    exp.checks.embedding = c.value("embedding", false);
  }
  exp.skip_descent_until_positive = config.value("skip_descent_until_positive", false);
  exp.convergence_threshold = config.value("convergence_threshold", 1e-2);
  if (config.contains("algorithms")) {
    const json& arr = config.at("algorithms");
    if (!arr.is_array()) throw Error(Errc::config_invalid, "algorithms must be an array");
    for (const auto& a : arr) exp.compare_algorithms.push_back(a.get<std::string>());
  }

  const std::vector<std::string> known = {"dgd",  "dgd_post",   "row_stochastic",
                                          "subgradient_push", "push_first", "unified"};
  auto known_algorithm = [&](const std::string& a) {
    return std::find(known.begin(), known.end(), a) != known.end();
  };
  if (!exp.algorithm.empty() && !known_algorithm(exp.algorithm))
    throw Error(Errc::config_invalid, "unknown algorithm '" + exp.algorithm + "'");
  for (const auto& a : exp.compare_algorithms)
    if (!known_algorithm(a)) throw Error(Errc::config_invalid, "unknown algorithm '" + a + "'");

  bool randomized = false;
  exp.problem = detail::build_problem(detail::need(config, "problem", "config"), exp.seed, &randomized);
  exp.seq = detail::build_sequence(detail::need(config, "sequence", "config"), exp.seed, &randomized);
  if (exp.seq->n() != exp.problem->agents())
    throw Error(Errc::config_invalid, "sequence size and problem agents disagree");
  if (!exp.algorithm.empty()) detail::check_algorithm_kind(exp.algorithm, *exp.seq);

  const bool push = detail::is_push(exp.algorithm);
  const json* x0_spec = config.contains("x0") ? &config.at("x0") : nullptr;
  exp.x0 = detail::build_x0(x0_spec, *exp.problem, exp.seed, &randomized);
  if (config.contains("y0")) {
    if (!push && exp.compare_algorithms.empty())
      throw Error(Errc::config_invalid, "y0 only applies to push algorithms");
    exp.y0 = detail::number_array(config.at("y0"), "y0");
    if (static_cast<int>(exp.y0.size()) != exp.problem->agents())
      throw Error(Errc::config_invalid, "y0 must have one entry per agent");
  } else {
    exp.y0.assign(static_cast<std::size_t>(exp.problem->agents()), 1.0);
  }

  // Absolute probability sequence: push-sum mass for push algorithms, a
  // backward-product/Perron computation behind an A1 gate otherwise.
  const int n = exp.problem->agents();
  try {
    if (push) {
      exp.abs_prob = std::make_shared<AbsProbSequence>(
          pushsum_abs_prob(*exp.seq, exp.y0, exp.steps));
    } else {
      const long t_max = std::max<long>(64, 4L * n * n);
      const auto a1 = check_A1(*exp.seq, t_max, 8);
      if (!a1.holds) {
        exp.abs_prob_failure = a1.failure_reason;
      } else {
        exp.abs_prob = std::make_shared<AbsProbSequence>(compute_abs_prob(*exp.seq, exp.steps, a1));
      }
    }
  } catch (const Error& e) {
    exp.abs_prob_failure = e.what();
  }

  const json& sched = detail::need(config, "schedule", "config");
  detail::require_keys(sched, "schedule", {"rule", "c", "alpha", "eps0", "rho", "table"});
  const std::string rule = detail::need_string(sched, "rule", "schedule");
  const bool scalar_step = push || exp.algorithm == "row_stochastic";
  if (rule == "common_power") {
    exp.c = detail::need_number(sched, "c", "schedule");
    exp.alpha = detail::need_number(sched, "alpha", "schedule");
    if (exp.c <= 0.0) throw Error(Errc::config_invalid, "schedule.c must be positive");
    exp.schedule = StepSchedule::common_power(n, exp.c, exp.alpha);
  } else if (scalar_step) {
    throw Error(Errc::config_invalid, exp.algorithm + " needs schedule.rule common_power");
  } else if (rule == "pi_scaled_power") {
    if (!exp.abs_prob)
      throw Error(Errc::precondition_a1,
                  "pi-scaled schedule needs absolute probabilities: " + exp.abs_prob_failure);
    exp.schedule = StepSchedule::pi_scaled_power(detail::need_number(sched, "c", "schedule"),
                                                 detail::need_number(sched, "alpha", "schedule"),
                                                 exp.abs_prob);
  } else if (rule == "pi_scaled_perturbed") {
    if (!exp.abs_prob)
      throw Error(Errc::precondition_a1,
                  "pi-scaled schedule needs absolute probabilities: " + exp.abs_prob_failure);
    auto eps0 = detail::number_array(detail::need(sched, "eps0", "schedule"), "schedule.eps0");
    exp.schedule = StepSchedule::pi_scaled_perturbed(
        detail::need_number(sched, "c", "schedule"), detail::need_number(sched, "alpha", "schedule"),
        std::move(eps0), detail::need_number(sched, "rho", "schedule"), exp.abs_prob);
  } else if (rule == "per_agent_explicit") {
    auto table = detail::number_table(detail::need(sched, "table", "schedule"), "schedule.table");
    if (static_cast<long>(table.size()) < exp.steps)
      throw Error(Errc::config_invalid, "schedule.table is shorter than steps");
    exp.schedule = StepSchedule::per_agent_explicit(std::move(table));
  } else {
    throw Error(Errc::config_invalid, "unknown schedule.rule '" + rule + "'");
  }
  if (exp.schedule->agents() != n)
    throw Error(Errc::config_invalid, "schedule and problem disagree on agents");
  if (exp.algorithm == "dgd" && !exp.schedule->agent_independent())
    throw Error(Errc::config_invalid, "dgd needs an agent-independent schedule");
  if (exp.checks.embedding && (detail::is_direct(exp.algorithm) && exp.algorithm != "dgd_post"))
    throw Error(Errc::config_invalid,
                "embedding check applies to dgd_post, row_stochastic and the push variants");
  if ((exp.checks.a1 || exp.checks.a1prime) && exp.seq->kind() == Stochasticity::column)
    throw Error(Errc::config_invalid, "a1/a1prime checks need a row-stochastic sequence");
  if (exp.checks.a1star && exp.seq->kind() == Stochasticity::row)
    throw Error(Errc::config_invalid, "a1star check needs a column-stochastic sequence");
  if (randomized && !exp.seed) throw Error(Errc::config_invalid, "seed is required");
  return exp;
}

struct RunResult {
  int exit_code = 0;
  Trajectory trajectory;
  std::vector<DiagnosticsRow> diagnostics;
  json checks;
  json summary;
};

namespace detail {

inline json condition_json(const ConditionReport& r) {
  json j{{"condition", to_string(r.condition)},
         {"holds", r.holds},
         {"probe_window", r.probe_window},
         {"exact", r.exact}};
  j["witness_T"] = r.witness_T ? json(*r.witness_T) : json(nullptr);
  j["p_plus"] = r.p_plus ? json(*r.p_plus) : json(nullptr);
  if (!r.failure_reason.empty()) j["failure_reason"] = r.failure_reason;
  return j;
}

inline json audit_json(const AssumptionAudit& a) {
  return json{{"a2_partial_sum", a.a2_partial_sum},
              {"a2_verdict", to_string(a.a2_verdict)},
              {"a3_divergence_proxy", a.a3_divergence_proxy},
              {"a3_sqrt_t_sum", a.a3_sqrt_t_sum},
              {"a3_verdict", to_string(a.a3_verdict)},
              {"notes", a.notes}};
}

inline json embedding_json(const EmbeddingReport& r) {
  return json{{"algorithm", r.algorithm},
              {"steps", r.steps},
              {"tol", r.tol},
              {"max_rel_deviation", r.max_rel_deviation},
              {"pass", r.pass}};
}

inline Trajectory dispatch_run(const Experiment& exp) {
  RunOptions opt{exp.steps, exp.plan, exp.skip_descent_until_positive};
  if (exp.algorithm == "unified")
    return run_unified(*exp.problem, *exp.seq, *exp.schedule, exp.x0, opt);
  if (exp.algorithm == "dgd") return run_dgd(*exp.problem, *exp.seq, *exp.schedule, exp.x0, opt);
  if (exp.algorithm == "dgd_post")
    return run_dgd_post(*exp.problem, *exp.seq, *exp.schedule, exp.x0, opt);
  if (exp.algorithm == "row_stochastic")
    return run_row_stochastic(*exp.problem, exp.seq->at(0), exp.c, exp.alpha, exp.x0, opt);
  if (exp.algorithm == "subgradient_push")
    return run_subgradient_push(*exp.problem, *exp.seq, exp.c, exp.alpha, exp.x0, exp.y0, opt);
  if (exp.algorithm == "push_first")
    return run_push_first(*exp.problem, *exp.seq, exp.c, exp.alpha, exp.x0, exp.y0, opt);
  throw Error(Errc::config_invalid, "config has no runnable algorithm");
}

inline EmbeddingReport dispatch_embedding_check(const Experiment& exp) {
  const long steps = std::min<long>(exp.steps, 1000);
  if (exp.algorithm == "dgd_post")
    return verify_embedding_dgd_post(*exp.problem, *exp.seq, *exp.schedule, exp.x0, steps);
  if (exp.algorithm == "row_stochastic")
    return verify_embedding_row_stochastic(*exp.problem, exp.seq->at(0), exp.c, exp.alpha, exp.x0,
                                           steps, 1e-10, exp.skip_descent_until_positive);
  if (exp.algorithm == "subgradient_push")
    return verify_embedding_subgradient_push(*exp.problem, *exp.seq, exp.c, exp.alpha, exp.x0,
                                             exp.y0, steps);
  if (exp.algorithm == "push_first")
    return verify_embedding_push_first(*exp.problem, *exp.seq, exp.c, exp.alpha, exp.x0, exp.y0,
                                       steps);
  throw Error(Errc::embedding_unavailable, exp.algorithm + " has no specialized embedding");
}

}  // namespace detail

/// Runs all requested checks and the configured algorithm. The exit code is 2
/// when `strict` and any requested check failed, otherwise 0; errors throw.
inline RunResult run_experiment(const Experiment& exp, bool strict) {
  RunResult result;
  result.checks = json::object();
  result.checks["config_hash"] = exp.config_hash;
  bool check_failed = false;
  const int n = exp.problem->agents();
  json conditions = json::object();
  if (exp.checks.a1) {
    const auto rep = check_A1(*exp.seq, std::max<long>(64, 4L * n * n), 8);
    conditions["a1"] = detail::condition_json(rep);
    check_failed = check_failed || !rep.holds;
  }
  if (exp.checks.a1prime) {
    const auto rep = check_A1_prime(*exp.seq, n, 8);
    conditions["a1prime"] = detail::condition_json(rep);
    check_failed = check_failed || !rep.holds;
  }
  if (exp.checks.a1star) {
    const auto rep = check_A1_star(*exp.seq, std::max<long>(64, 4L * n * n), 8);
    conditions["a1star"] = detail::condition_json(rep);
    check_failed = check_failed || !rep.holds;
  }
  if (!conditions.empty()) result.checks["conditions"] = conditions;
  if (exp.checks.a2a3) {
    if (!exp.abs_prob) {
      result.checks["assumption_audit"] =
          json{{"error", "absolute probabilities unavailable: " + exp.abs_prob_failure}};
      check_failed = true;
    } else {
      const long horizon = std::clamp<long>(exp.steps, 10, 10000);
      const auto audit = audit_assumptions(*exp.schedule, *exp.abs_prob, horizon);
      result.checks["assumption_audit"] = detail::audit_json(audit);
      check_failed = check_failed || audit.a2_verdict == AuditVerdict::analytic_fail ||
                     audit.a3_verdict == AuditVerdict::analytic_fail;
    }
  }
  if (exp.checks.embedding) {
    const auto rep = detail::dispatch_embedding_check(exp);
    result.checks["embedding"] = detail::embedding_json(rep);
    check_failed = check_failed || !rep.pass;
  }
  if (!exp.abs_prob && !exp.abs_prob_failure.empty())
    result.checks["abs_prob_failure"] = exp.abs_prob_failure;

  result.trajectory = detail::dispatch_run(exp);
  if (exp.abs_prob) {
    const auto ctx = make_measure_context(*exp.problem, *exp.abs_prob);
    result.diagnostics = measure_trajectory(result.trajectory, ctx);
  }

  const auto& final_snap = result.trajectory.snapshots.back();
  const int d = exp.problem->dim();
  double final_error = 0.0;
  for (int i = 0; i < n; ++i)
    final_error = std::max(final_error,
                           exp.problem->distance_to_argmin(std::span<const double>(final_snap.state)
                                                               .subspan(static_cast<std::size_t>(i) * d,
                                                                        static_cast<std::size_t>(d))));
  result.summary = json::object();
  result.summary["config_hash"] = exp.config_hash;
  result.summary["algorithm"] = result.trajectory.algorithm;
  result.summary["steps"] = exp.steps;
  result.summary["seed"] = exp.seed ? json(*exp.seed) : json(nullptr);
  result.summary["final_error"] = final_error;
  result.summary["convergence_threshold"] = exp.convergence_threshold;
  result.summary["converged"] = final_error <= exp.convergence_threshold;
  result.summary["snapshot_count"] = result.trajectory.snapshots.size();
  if (!result.trajectory.skipped_descents.empty())
    result.summary["skipped_descents"] = result.trajectory.skipped_descents.size();
  if (!result.diagnostics.empty()) {
    const auto& last = result.diagnostics.back();
    result.summary["final_consensus_error"] = last.consensus_error;
    result.summary["final_objective_gap"] = last.objective_gap;
    result.summary["final_state_norm"] = last.state_norm;
  }
  result.exit_code = (strict && check_failed) ? 2 : 0;
  return result;
}

inline std::string trajectory_csv(const Trajectory& traj, const std::string& preamble) {
  std::string out = preamble;
  out += "t,agent,coordinate,value\n";
  for (const auto& snap : traj.snapshots)
    for (int i = 0; i < traj.n; ++i)
      for (int k = 0; k < traj.d; ++k) {
        out += std::to_string(snap.t);
        out += ',';
        out += std::to_string(i);
        out += ',';
        out += std::to_string(k);
        out += ',';
        out += format_double(snap.state[static_cast<std::size_t>(i) * traj.d + k]);
        out += '\n';
      }
  return out;
}

inline void write_outputs(const Experiment& exp, const RunResult& result,
                          const std::string& out_dir) {
  const std::string preamble = "# config_hash=" + exp.config_hash + "\n";
  write_file_atomic(out_dir + "/trajectory.csv", trajectory_csv(result.trajectory, preamble));
  write_file_atomic(out_dir + "/diagnostics.csv", diagnostics_csv(result.diagnostics, preamble));
  json checks = result.checks;
  write_file_atomic(out_dir + "/checks.json", checks.dump(2) + "\n");
  write_file_atomic(out_dir + "/summary.json", result.summary.dump(2) + "\n");
  if (exp.abs_prob) write_file_atomic(out_dir + "/pi.csv", exp.abs_prob->to_csv(preamble));
  if (exp.checks.any_graph() && exp.seq)
    write_file_atomic(out_dir + "/graph0.dot", to_dot(graph_from_matrix(exp.seq->at(0))));
}

/// Re-runs the experiment and compares the regenerated trajectory bytes and
/// recorded hashes against what sits in the output directory.
inline int verify_outputs(const Experiment& exp, const RunResult& result,
                          const std::string& out_dir, std::string* message) {
  const std::string preamble = "# config_hash=" + exp.config_hash + "\n";
  std::string disk;
  try {
    disk = read_file(out_dir + "/trajectory.csv");
  } catch (const std::exception&) {
    *message = "verify: no trajectory.csv under " + out_dir;
    return 2;
  }
  if (disk.rfind(preamble, 0) != 0) {
    *message = "verify: config hash mismatch in trajectory.csv";
    return 2;
  }
  const std::string fresh = trajectory_csv(result.trajectory, preamble);
  if (disk != fresh) {
    *message = "verify: trajectory.csv differs from a fresh run";
    return 2;
  }
  *message = "verify: outputs match";
  return 0;
}

inline int run_config(json config, const Overrides& over) {
  Experiment exp = build_experiment(std::move(config), over);
  if (exp.algorithm.empty())
    throw Error(Errc::config_invalid, "config is missing key 'algorithm'");
  const RunResult result = run_experiment(exp, over.strict);
  if (over.verify) {
    std::string message;
    const int code = verify_outputs(exp, result, exp.output, &message);
    std::fputs((message + "\n").c_str(), stdout);
    return code != 0 ? code : result.exit_code;
  }
  write_outputs(exp, result, exp.output);
  std::fputs(("wrote " + exp.output + " (final_error=" +
              format_double(result.summary["final_error"].get<double>()) + ")\n")
                 .c_str(),
             stdout);
  return result.exit_code;
}

/// Runs several algorithms against one problem/topology and merges their
/// diagnostics into one CSV keyed by algorithm.
inline int compare_config(json config, const Overrides& over) {
  if (!config.contains("algorithms"))
    throw Error(Errc::config_invalid, "compare needs key 'algorithms'");
  json base = config;
  Experiment probe = build_experiment(base, over);  // validates shared parts
  if (probe.compare_algorithms.empty())
    throw Error(Errc::config_invalid, "algorithms must be a nonempty array");
  const auto algorithms = probe.compare_algorithms;
  const std::string out_root = probe.output;

  struct PerAlgo {
    std::string algorithm;
    int exit_code = 0;
    std::vector<DiagnosticsRow> diagnostics;
    json summary;
  };
  auto run_one = [&](const std::string& algo) {
    json cfg = config;
    cfg.erase("algorithms");
    cfg["algorithm"] = algo;
    Overrides local = over;
    local.out = out_root + "/" + algo;
    local.verify = false;
    Experiment exp = build_experiment(std::move(cfg), local);
    const RunResult result = run_experiment(exp, over.strict);
    write_outputs(exp, result, exp.output);
    return PerAlgo{algo, result.exit_code, result.diagnostics, result.summary};
  };

  const int cap = detail::thread_cap();
  std::vector<PerAlgo> done;
  std::size_t next = 0;
  while (next < algorithms.size()) {
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cap),
                                                    algorithms.size() - next);
    std::vector<std::future<PerAlgo>> futs;
    futs.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b)
      futs.push_back(std::async(std::launch::async, run_one, algorithms[next + b]));
    for (auto& f : futs) done.push_back(f.get());
    next += batch;
  }

  json hashed = config;
  hashed.erase("output");
  const std::string compare_hash = to_hex(fnv1a(hashed.dump()));
  std::string merged = "# config_hash=" + compare_hash + "\n";
  merged += "algorithm,t,consensus_error,objective_gap,state_norm,sqrt_t_ratio\n";
  json summary = json::object();
  summary["config_hash"] = compare_hash;
  int exit_code = 0;
  for (const auto& pa : done) {
    for (const auto& r : pa.diagnostics) {
      merged += pa.algorithm;
      merged += ',';
      merged += std::to_string(r.t);
      merged += ',';
      merged += format_double(r.consensus_error);
      merged += ',';
      merged += format_double(r.objective_gap);
      merged += ',';
      merged += format_double(r.state_norm);
      merged += ',';
      merged += format_double(r.sqrt_t_ratio);
      merged += '\n';
    }
    summary[pa.algorithm] = pa.summary;
    exit_code = std::max(exit_code, pa.exit_code);
  }
  write_file_atomic(out_root + "/diagnostics_compare.csv", merged);
  write_file_atomic(out_root + "/compare_summary.json", summary.dump(2) + "\n");
  std::fputs(("wrote " + out_root + " for " + std::to_string(done.size()) + " algorithms\n").c_str(),
             stdout);
  return exit_code;
}

inline int run_config_file(const std::string& path, const Overrides& over, bool compare) {
  json config;
  try {
    config = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::config_invalid, std::string("config parse failure: ") + e.what());
  }
  return compare ? compare_config(std::move(config), over) : run_config(std::move(config), over);
}

}  // namespace subgrad
