#pragma once

// Command-line front end. `run_cli` is separate from main() so the tests can
// drive it in-process.
//
// Exit status: 0 success, 1 no finite-cost policy, 2 usage or input error,
// 3 budget exceeded.

#include "detpomdp/detpomdp.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace detpomdp::cli {

enum ExitCode : int { kOk = 0, kNoPolicy = 1, kUsage = 2, kBudget = 3 };

struct Config {
  std::string command;
  std::string model_path;
  std::string policy_path;
  std::string criterion = "minmax";
  std::string algorithm = "explicit";
  std::string heuristic = "fullobs";
  std::size_t budget = kDefaultBudget;
  std::uint64_t seed = 0;
  std::string out;

  // gen
  std::string domain;
  std::size_t length = 2, alphabet = 2, coins = 3, rows = 1, cols = 1, vars = 3, clauses = 3, n = 5;
  std::string matrix, unknown, blocked, start = "0,0", goal = "0,0", cnf, cycles;
  bool random = false;

  // simulate / analyze
  std::string true_state;
  bool all_states = false;
  std::size_t runs = 0;
  bool measure = false;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::size_t to_size(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + what + " '" + s + "'");
  }
}

inline Cell parse_cell(const std::string& s) {
  auto rc = split(s, ',');
  if (rc.size() != 2) throw std::invalid_argument("cell must be 'row,col', got '" + s + "'");
  return {to_size(rc[0], "row"), to_size(rc[1], "column")};
}

inline std::vector<Cell> parse_cells(const std::string& s) {
  std::vector<Cell> cells;
  if (s.empty()) return cells;
  for (const auto& part : split(s, ';')) cells.push_back(parse_cell(part));
  return cells;
}

/// "1 -2 3; -1 2" -> clauses.
inline Cnf parse_cnf(const std::string& s, std::size_t vars) {
  Cnf f;
  f.num_vars = vars;
  for (const auto& part : split(s, ';')) {
    std::istringstream in(part);
    std::vector<int> clause;
    int lit;
    while (in >> lit) clause.push_back(lit);
    if (!in.eof()) throw std::invalid_argument("bad clause '" + part + "'");
    f.clauses.push_back(std::move(clause));
  }
  return f;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write '" + path + "'");
  f << text;
}

template <BeliefType B>
std::string show(const B& b) {
  std::ostringstream os;
  os << b;
  return os.str();
}

inline int status_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return kOk;
    case SolveStatus::NoFinitePolicy: return kNoPolicy;
    case SolveStatus::BudgetExceeded: return kBudget;
  }
  return kUsage;
}

}  // namespace detail

inline int cmd_validate(const Config& cfg, std::ostream& out) {
  const auto m = load_model_file(cfg.model_path);
  const auto report = validate(m);
  if (report.empty()) {
    out << "valid\n";
    return kOk;
  }
  for (const auto& v : report) out << "violation " << v.code << ": " << v.message << "\n";
  return kUsage;
}

inline int cmd_gen(const Config& cfg, std::ostream& out) {
  using namespace detail;
  DetPomdp m;
  const auto& d = cfg.domain;
  if (d == "mastermind") {
    m = gen_mastermind({cfg.length, cfg.alphabet}, cfg.budget);
  } else if (d == "coins") {
    m = gen_coins({cfg.coins});
  } else if (d == "diagnosis") {
    DiagnosisSpec spec;
    for (const auto& row : split(cfg.matrix, ';')) {
      std::vector<int> r;
      for (char c : row) {
        if (c != '0' && c != '1') throw std::invalid_argument("matrix rows are strings of 0 and 1");
        r.push_back(c - '0');
      }
      spec.matrix.push_back(std::move(r));
    }
    m = gen_diagnosis(spec);
  } else if (d == "gridnav") {
    GridNavSpec spec;
    spec.rows = cfg.rows;
    spec.cols = cfg.cols;
    spec.blocked = parse_cells(cfg.blocked);
    spec.unknown = parse_cells(cfg.unknown);
    spec.start = parse_cell(cfg.start);
    spec.goal = parse_cell(cfg.goal);
    m = gen_gridnav(spec);
  } else if (d == "sat") {
    Cnf f;
    if (cfg.random) {
      std::mt19937_64 rng(cfg.seed);
      f = random_3cnf(cfg.vars, cfg.clauses, rng);
    } else {
      f = parse_cnf(cfg.cnf, cfg.vars);
    }
    m = gen_sat(f);
  } else if (d == "large-order") {
    if (cfg.cycles.empty()) {
      m = build_large_order_instance(cfg.n);
    } else {
      std::vector<std::size_t> lengths;
      for (const auto& part : split(cfg.cycles, ',')) lengths.push_back(to_size(part, "cycle length"));
      m = build_large_order_instance_from_cycles(lengths);
    }
  } else {
    throw std::invalid_argument("unknown domain '" + d + "' (mastermind, coins, diagnosis, gridnav, sat, large-order)");
  }
  write_output(cfg.out, save_model(m), out);
  return kOk;
}

template <CriterionType C>
int cmd_solve(const Config& cfg, const DetPomdp& m, std::ostream& out) {
  SolveResult<C> r;
  if (cfg.algorithm == "explicit") {
    r = solve_explicit<C>(m, cfg.budget);
  } else if (cfg.algorithm == "aostar") {
    r = solve_heuristic<C>(m, parse_heuristic(cfg.heuristic), cfg.budget);
  } else if (cfg.algorithm == "unobservable") {
    r = solve_unobservable<C>(m, cfg.budget);
  } else {
    throw std::invalid_argument("unknown algorithm '" + cfg.algorithm + "' (explicit, aostar, unobservable)");
  }
  out << "status " << to_string(r.status) << "\n";
  if (r.status == SolveStatus::Solved) out << "value " << format_value(r.value) << "\n";
  out << "beliefs " << r.stats.beliefs_enumerated << "\n";
  out << "expanded " << r.stats.nodes_expanded << "\n";
  if (r.status == SolveStatus::Solved) {
    out << "policy_entries " << r.policy->size() << "\n";
    if (cfg.algorithm == "unobservable") {
      out << "plan";
      for (auto a : r.plan) out << " " << m.actions[a].name;
      out << "\n";
    }
    if (!cfg.out.empty()) detail::write_output(cfg.out, save_policy<C>(m, *r.policy, r.value), out);
  }
  return detail::status_code(r.status);
}

template <CriterionType C>
int cmd_evaluate(const Config& cfg, const DetPomdp& m, std::ostream& out) {
  const auto doc = load_policy<C>(detail::read_file(cfg.policy_path), m);
  const auto v = evaluate_policy<C>(m, doc.policy);
  out << "value " << format_value(v) << "\n";
  return v.is_finite() ? kOk : kNoPolicy;
}

inline int cmd_analyze(const Config& cfg, const DetPomdp& m, std::ostream& out) {
  out << to_text(diameter_conditions(m));
  for (ActionId a = 0; a < m.num_actions(); ++a) {
    const auto check = action_as_permutation(m, a);
    out << "action " << m.actions[a].name << ": ";
    if (check)
      out << "permutation " << *check.permutation << " order " << order(*check.permutation) << "\n";
    else
      out << "not a permutation (" << check.reason << ")\n";
  }
  if (cfg.measure) {
    try {
      out << "measured_diameter " << measure_diameter(m, cfg.budget) << "\n";
    } catch (const BudgetExceeded&) {
      out << "measured_diameter budget exceeded\n";
      return kBudget;
    }
  }
  return kOk;
}

template <CriterionType C>
int cmd_simulate(const Config& cfg, const DetPomdp& m, std::ostream& out) {
  using B = typename C::belief_type;
  const auto doc = load_policy<C>(detail::read_file(cfg.policy_path), m);
  const auto b0 = initial_belief<B>(m);
  const std::size_t cap = doc.policy.size() + 1;
  auto print_trace = [&](const Trace<B>& t) {
    out << "start " << t.initial_state << "\n";
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      const auto& s = t.steps[k];
      out << "step " << k << " belief " << detail::show(s.belief) << " action " << m.actions[s.action].name << " cost "
          << to_string(s.cost) << " obs " << s.observation << " next " << detail::show(s.next) << "\n";
    }
    out << "total " << to_string(t.total_cost) << " final_state " << t.final_state
        << (t.reached_target ? " target" : " not-target") << "\n";
  };
  if (cfg.all_states) {
    // Worst case over the support, and the b0-weighted mean, next to V_pi.
    Rational worst(0);
    double mean = 0;
    const auto dist = initial_dist_belief(m);
    for (auto s : b0.support()) {
      const auto t = simulate(m, doc.policy, s, cap);
      print_trace(t);
      worst = std::max(worst, t.total_cost);
      mean += dist.prob(s) * to_double(t.total_cost);
    }
    out << "max " << to_string(worst) << " mean " << format_value(ExtendedCost<double>(mean)) << "\n";
    out << (C::kind == Criterion::MinMax ? "V_max " : "V_exp ") << format_value(evaluate_policy<C>(m, doc.policy)) << "\n";
  } else if (!cfg.true_state.empty()) {
    print_trace(simulate(m, doc.policy, static_cast<StateId>(detail::to_size(cfg.true_state, "state")), cap));
  } else {
    throw std::invalid_argument("simulate needs a true state or --all");
  }
  if (cfg.runs > 0) {
    const auto est = monte_carlo_cost(m, doc.policy, cfg.runs, cfg.seed);
    out << "monte_carlo runs " << est.runs << " mean " << format_value(ExtendedCost<double>(est.mean)) << " stderr "
        << format_value(ExtendedCost<double>(est.standard_error)) << "\n";
  }
  return kOk;
}

/// Parses argv and dispatches. Never throws.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic POMDP solver"};
  app.require_subcommand(1);
  Config cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--criterion", cfg.criterion, "minmax or minexp")->check(CLI::IsMember({"minmax", "minexp"}));
    sub->add_option("--budget", cfg.budget, "node budget");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--out", cfg.out, "output file");
  };

  auto* validate_cmd = app.add_subcommand("validate", "check a model file");
  validate_cmd->add_option("model", cfg.model_path)->required();

  auto* gen_cmd = app.add_subcommand("gen", "generate a model");
  gen_cmd->add_option("domain", cfg.domain, "mastermind, coins, diagnosis, gridnav, sat, large-order")->required();
  gen_cmd->add_option("--length", cfg.length, "mastermind word length");
  gen_cmd->add_option("--alphabet", cfg.alphabet, "mastermind alphabet size");
  gen_cmd->add_option("--coins", cfg.coins, "number of coins");
  gen_cmd->add_option("--matrix", cfg.matrix, "diagnosis matrix, rows separated by ';' (e.g. 10;01)");
  gen_cmd->add_option("--rows", cfg.rows);
  gen_cmd->add_option("--cols", cfg.cols);
  gen_cmd->add_option("--unknown", cfg.unknown, "cells 'r,c;r,c'");
  gen_cmd->add_option("--blocked", cfg.blocked, "cells 'r,c;r,c'");
  gen_cmd->add_option("--start", cfg.start, "cell 'r,c'");
  gen_cmd->add_option("--goal", cfg.goal, "cell 'r,c'");
  gen_cmd->add_option("--vars", cfg.vars, "number of variables");
  gen_cmd->add_option("--clauses", cfg.clauses, "number of random clauses");
  gen_cmd->add_option("--cnf", cfg.cnf, "clauses '1 -2 3; -1'");
  gen_cmd->add_flag("--random", cfg.random, "random 3-CNF from --seed");
  gen_cmd->add_option("--n", cfg.n, "state budget for large-order");
  gen_cmd->add_option("--cycles", cfg.cycles, "explicit cycle lengths '2,3'");
  add_common(gen_cmd);

  auto* solve_cmd = app.add_subcommand("solve", "compute an optimal policy");
  solve_cmd->add_option("model", cfg.model_path)->required();
  solve_cmd->add_option("--algorithm", cfg.algorithm)->check(CLI::IsMember({"explicit", "aostar", "unobservable"}));
  solve_cmd->add_option("--heuristic", cfg.heuristic)->check(CLI::IsMember({"zero", "fullobs"}));
  add_common(solve_cmd);

  auto* eval_cmd = app.add_subcommand("evaluate", "value of a policy file");
  eval_cmd->add_option("model", cfg.model_path)->required();
  eval_cmd->add_option("policy", cfg.policy_path)->required();
  add_common(eval_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "diameter conditions and permutation actions");
  analyze_cmd->add_option("model", cfg.model_path)->required();
  analyze_cmd->add_flag("--measure", cfg.measure, "also measure the diameter (exponential)");
  add_common(analyze_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "run a policy against hidden states");
  sim_cmd->add_option("model", cfg.model_path)->required();
  sim_cmd->add_option("policy", cfg.policy_path)->required();
  sim_cmd->add_option("true_state", cfg.true_state);
  sim_cmd->add_flag("--all", cfg.all_states, "every state of the initial support");
  sim_cmd->add_option("--runs", cfg.runs, "Monte-Carlo runs (seeded by --seed)");
  add_common(sim_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(cfg, out);
    if (gen_cmd->parsed()) return cmd_gen(cfg, out);
    const auto m = load_model_file(cfg.model_path);
    if (analyze_cmd->parsed()) return cmd_analyze(cfg, m, out);
    require_valid(m);
    return with_criterion(parse_criterion(cfg.criterion), [&](auto c) {
      using C = decltype(c);
      if (solve_cmd->parsed()) return cmd_solve<C>(cfg, m, out);
      if (eval_cmd->parsed()) return cmd_evaluate<C>(cfg, m, out);
      return cmd_simulate<C>(cfg, m, out);
    });
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kBudget;
  } catch (const WrongModelClass& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace detpomdp::cli
