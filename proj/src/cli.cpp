#include "expmoments/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "expmoments/acceptance.hpp"
#include "expmoments/analysis.hpp"
#include "expmoments/engines.hpp"
#include "expmoments/errors.hpp"
#include "expmoments/format.hpp"
#include "expmoments/model.hpp"
#include "expmoments/schur.hpp"

namespace expmoments {

namespace {

using Json = nlohmann::ordered_json;

enum class Format { table, csv, json };

struct Common {
  std::string format = "table";
  std::string out;
  std::uint64_t seed = 0;
  double tol = 0.0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
};

struct Output {
  std::string text;
  int code = 0;
};

void add_common(CLI::App* cmd, Common& c, bool seeded) {
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"table", "csv", "json"}));
  cmd->add_option("--out", c.out, "Write the result to FILE instead of stdout");
  cmd->add_option("--tol", c.tol, "Relative quadrature tolerance")->check(CLI::PositiveNumber);
  if (seeded) c.seed_opt = cmd->add_option("--seed", c.seed, "Base seed (default: $EXPMOMENTS_SEED or 0)");
  c.tol_opt = cmd->get_option("--tol");
}

Format format_of(const Common& c) {
  if (c.format == "csv") return Format::csv;
  if (c.format == "json") return Format::json;
  return Format::table;
}

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed_opt && c.seed_opt->count()) return c.seed;
  const char* env = std::getenv("EXPMOMENTS_SEED");
  if (!env || !*env) return 0;
  std::uint64_t v = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("EXPMOMENTS_SEED is not an unsigned integer");
  return v;
}

EngineOptions engine_options(const Common& c, std::uint64_t seed) {
  EngineOptions o;
  if (c.tol_opt && c.tol_opt->count()) o.quadrature.rel_tol = c.tol;
  o.seed = seed;
  return o;
}

Json header(std::string_view command) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::string vec_string(const Eigen::VectorXd& x) {
  return join_numbers({x.data(), static_cast<std::size_t>(x.size())}, ',');
}

Json vec_json(const Eigen::VectorXd& x) { return Json(std::vector<double>(x.data(), x.data() + x.size())); }

// Two-column "key  value" table.
class Table {
public:
  void row(std::string key, std::string value) { rows_.emplace_back(std::move(key), std::move(value)); }
  std::string str() const {
    std::size_t w = 0;
    for (const auto& r : rows_) w = std::max(w, r.first.size());
    std::string s;
    for (const auto& [k, v] : rows_) s += k + std::string(w - k.size() + 2, ' ') + v + "\n";
    return s;
  }

private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

// moment

struct MomentArgs {
  std::string model;
  double p = 0.0;
  double shift = 0.0;
  bool signed_moment = false;
  std::string engine;
  std::size_t samples = 1'000'000;
};

Output cmd_moment(const MomentArgs& a, const Common& c) {
  const auto model = parse_model_literal(a.model);
  std::optional<Engine> engine;
  if (!a.engine.empty()) engine = parse_engine(a.engine);
  auto opt = engine_options(c, resolve_seed(c));
  opt.mc_samples = a.samples;
  const auto est = moment(model, {a.p, a.shift, a.signed_moment}, engine, opt);
  const std::string lit = model.literal();
  switch (format_of(c)) {
    case Format::csv:
      return {"model,p,shift,signed,engine,value,error\n" + csv_field(lit) + "," + shortest(a.p) + "," +
              shortest(a.shift) + "," + (a.signed_moment ? "1" : "0") + "," + std::string(to_string(est.engine)) +
              "," + shortest(est.value) + "," + shortest(est.error) + "\n"};
    case Format::json: {
      auto j = header("moment");
      j["model"] = lit;
      j["p"] = a.p;
      j["shift"] = a.shift;
      j["signed"] = a.signed_moment;
      j["engine"] = to_string(est.engine);
      j["value"] = est.value;
      j["error"] = est.error;
      j["fingerprint"] = est.fingerprint;
      return {dump(j)};
    }
    case Format::table: {
      Table t;
      t.row("model", lit);
      t.row("p", shortest(a.p));
      t.row("shift", shortest(a.shift));
      if (a.signed_moment) t.row("signed", "yes");
      t.row("engine", std::string(to_string(est.engine)));
      t.row("value", shortest(est.value));
      t.row("error", shortest(est.error));
      return {t.str()};
    }
  }
  return {};
}

// verify

struct VerifyArgs {
  std::string suite;
  std::vector<double> ps;
  int trials = -1;
  int n = -1;
  std::size_t samples = 200'000;
};

std::vector<VerificationReport> run_suite(const VerifyArgs& a, const Common& c) {
  const std::uint64_t seed = resolve_seed(c);
  auto opt = engine_options(c, seed);
  opt.mc_samples = a.samples;
  const auto trials = [&](int fallback) { return a.trials >= 0 ? a.trials : fallback; };
  const auto ps = [&](std::vector<double> fallback) { return a.ps.empty() ? fallback : a.ps; };
  std::vector<VerificationReport> out;
  const auto per_p = [&](std::vector<double> fallback, auto&& run) {
    const auto list = ps(std::move(fallback));
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(run(list[i], derive_seed(seed, i)));
  };
  if (a.suite == "theorem1") {
    per_p({2.0, 2.5, 3.0, 4.0, 5.0, 6.0},
          [&](double p, std::uint64_t s) { return verify_theorem1(p, trials(200), a.n > 0 ? a.n : 8, s, opt); });
  } else if (a.suite == "hunter") {
    out.push_back(verify_hunter_exact(trials(1000), {2, 4, 6, 8}, seed));
  } else if (a.suite == "mrtt") {
    per_p({-0.5, 0.5, 1.5, 2.5, 4.0}, [&](double p, std::uint64_t s) { return verify_mrtt(p, trials(100), s, opt); });
  } else if (a.suite == "all-equal") {
    out.push_back(verify_all_equal(a.n > 0 ? a.n : 20, ps({2.0, 3.0, 4.0, 6.0})));
  } else if (a.suite == "gamma") {
    out.push_back(verify_gamma_extension(ps({2.0, 3.0, 4.0}), trials(50), seed, opt));
  } else if (a.suite == "claim") {
    out.push_back(verify_claim(trials(10000), seed));
  } else {
    out.push_back(verify_step_ii_bound(trials(300), seed));
  }
  return out;
}

Json report_json(const VerificationReport& r) {
  Json j;
  j["suite"] = r.suite;
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  j["trials"] = r.trials;
  Json viol = Json::array();
  for (const auto& v : r.violations)
    viol.push_back({{"model", v.model}, {"p", v.p}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"budget", v.budget}});
  j["violations"] = viol;
  Json metrics = Json::object();
  for (const auto& m : r.metrics) metrics[m.name] = m.value;
  j["metrics"] = metrics;
  j["notes"] = r.notes;
  j["pass"] = r.pass;
  return j;
}

std::string params_string(const VerificationReport& r) {
  std::string s;
  for (const auto& [k, v] : r.params) s += (s.empty() ? "" : " ") + k + "=" + v;
  return s;
}

Output cmd_verify(const VerifyArgs& a, const Common& c) {
  const auto reports = run_suite(a, c);
  const bool pass = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
  const int code = pass ? 0 : 1;
  switch (format_of(c)) {
    case Format::csv: {
      std::string s = "suite,params,trials,violations,pass\n";
      for (const auto& r : reports)
        s += r.suite + "," + csv_field(params_string(r)) + "," + std::to_string(r.trials) + "," +
             std::to_string(r.violations.size()) + "," + (r.pass ? "true" : "false") + "\n";
      return {s, code};
    }
    case Format::json: {
      auto j = header("verify");
      j["suite"] = a.suite;
      Json list = Json::array();
      for (const auto& r : reports) list.push_back(report_json(r));
      j["reports"] = list;
      j["pass"] = pass;
      return {dump(j), code};
    }
    case Format::table: {
      std::string s;
      for (const auto& r : reports) {
        s += (r.pass ? "PASS " : "FAIL ") + r.suite + " [" + params_string(r) + "] trials " +
             std::to_string(r.trials) + ", violations " + std::to_string(r.violations.size()) + "\n";
        for (const auto& m : r.metrics) s += "  " + m.name + " = " + shortest(m.value) + "\n";
        for (std::size_t i = 0; i < std::min<std::size_t>(r.violations.size(), 5); ++i) {
          const auto& v = r.violations[i];
          s += "  violation: model " + v.model + " p " + shortest(v.p) + " lhs " + shortest(v.lhs) + " rhs " +
               shortest(v.rhs) + " budget " + shortest(v.budget) + "\n";
        }
        for (const auto& n : r.notes) s += "  note: " + n + "\n";
      }
      return {s, code};
    }
  }
  return {};
}

// schur

struct SchurArgs {
  double p = 0.0;
  int n = 2;
  int trials = 500;
};

Json row_json(const ScanRow& r) {
  return {{"x", vec_json(r.x)}, {"y", vec_json(r.y)}, {"mp_x", r.mx}, {"err_x", r.ex},
          {"mp_y", r.my},       {"err_y", r.ey},      {"direction", r.direction}};
}

Output cmd_schur(const SchurArgs& a, const Common& c) {
  const auto scan = schur_scan(a.p, a.n, a.trials, resolve_seed(c), engine_options(c, 0));
  const ScanRow* convex = nullptr;
  const ScanRow* concave = nullptr;
  for (const auto& r : scan.rows) {
    if (r.direction > 0 && !convex) convex = &r;
    if (r.direction < 0 && !concave) concave = &r;
  }
  switch (format_of(c)) {
    case Format::csv:
      return {scan_csv(scan)};
    case Format::json: {
      auto j = header("schur");
      j["p"] = scan.p;
      j["n"] = scan.n;
      j["trials"] = scan.trials;
      j["verdict"] = to_string(scan.verdict);
      j["convex_evidence"] = scan.convex_evidence;
      j["concave_evidence"] = scan.concave_evidence;
      j["convex_witness"] = convex ? row_json(*convex) : Json(nullptr);
      j["concave_witness"] = concave ? row_json(*concave) : Json(nullptr);
      j["notes"] = {std::string(kLemmaFWordingNote)};
      return {dump(j)};
    }
    case Format::table: {
      Table t;
      t.row("p", shortest(scan.p));
      t.row("n", std::to_string(scan.n));
      t.row("trials", std::to_string(scan.trials));
      t.row("verdict", std::string(to_string(scan.verdict)));
      t.row("convex evidence", std::to_string(scan.convex_evidence));
      t.row("concave evidence", std::to_string(scan.concave_evidence));
      const auto witness = [&](const char* name, const ScanRow* r) {
        if (r)
          t.row(name, "x=(" + vec_string(r->x) + ") y=(" + vec_string(r->y) + ") M(x)=" + shortest(r->mx) +
                          " M(y)=" + shortest(r->my));
      };
      witness("convex witness", convex);
      witness("concave witness", concave);
      t.row("note", std::string(kLemmaFWordingNote));
      return {t.str()};
    }
  }
  return {};
}

// failure

Output cmd_failure(double p, const Common& c) {
  const auto prof = failure_profile(p);
  switch (format_of(c)) {
    case Format::csv: {
      std::string s = "x,f,df\n";
      for (const auto& smp : prof.samples) s += shortest(smp.x) + "," + shortest(smp.f) + "," + shortest(smp.df) + "\n";
      return {s};
    }
    case Format::json: {
      auto j = header("failure");
      j["p"] = prof.p;
      j["critical_point"] = prof.critical_point ? Json(*prof.critical_point) : Json(nullptr);
      j["f_at_critical"] = prof.critical_point ? Json(prof.f_at_critical) : Json(nullptr);
      j["f_at_0"] = prof.f_at_0;
      j["f_at_right"] = prof.f_at_right;
      j["d1_at_0"] = prof.d1_at_0;
      j["d1_at_right"] = prof.d1_at_right;
      j["d2_at_right"] = prof.d2_at_right;
      j["d2_closed_form"] = prof.d2_closed_form;
      Json samples = Json::array();
      for (const auto& smp : prof.samples) samples.push_back({smp.x, smp.f, smp.df});
      j["samples"] = {{"columns", {"x", "f", "df"}}, {"rows", samples}};
      return {dump(j)};
    }
    case Format::table: {
      Table t;
      t.row("p", shortest(prof.p));
      if (prof.critical_point) {
        t.row("interior maximum", "x=" + shortest(*prof.critical_point) + " f=" + shortest(prof.f_at_critical));
      } else {
        t.row("interior maximum", "none (f is monotone)");
      }
      t.row("f(0)", shortest(prof.f_at_0));
      t.row("f(1/sqrt2)", shortest(prof.f_at_right));
      t.row("f'(0)", shortest(prof.d1_at_0));
      t.row("f'(1/sqrt2)", shortest(prof.d1_at_right));
      t.row("f''(1/sqrt2)", shortest(prof.d2_at_right));
      t.row("f''(1/sqrt2) closed form", shortest(prof.d2_closed_form));
      t.row("samples", std::to_string(prof.samples.size()) + " (use --format csv)");
      return {t.str()};
    }
  }
  return {};
}

// solve

Output cmd_solve(const std::string& which, const Common& c) {
  const auto r = which == "pstar" ? solve_pstar() : solve_p0();
  switch (format_of(c)) {
    case Format::csv:
      return {"constant,value,lo,hi,residual,iterations\n" + which + "," + shortest(r.value) + "," +
              shortest(r.bracket.first) + "," + shortest(r.bracket.second) + "," + shortest(r.residual) + "," +
              std::to_string(r.iterations) + "\n"};
    case Format::json: {
      auto j = header("solve");
      j["constant"] = which;
      j["value"] = r.value;
      j["bracket"] = {r.bracket.first, r.bracket.second};
      j["residual"] = r.residual;
      j["iterations"] = r.iterations;
      return {dump(j)};
    }
    case Format::table: {
      Table t;
      t.row(which, shortest(r.value));
      t.row("bracket", "[" + shortest(r.bracket.first) + ", " + shortest(r.bracket.second) + "]");
      t.row("residual", shortest(r.residual));
      t.row("iterations", std::to_string(r.iterations));
      return {t.str()};
    }
  }
  return {};
}

// minimize

struct MinimizeArgs {
  int n = 2;
  double p = 3.0;
  int multistart = 8;
};

Output cmd_minimize(const MinimizeArgs& a, const Common& c, std::ostream& err) {
  const auto r = minimize_sphere(a.n, a.p, a.multistart, resolve_seed(c), engine_options(c, 0));
  if (!r.converged) err << "minimize: no convergence after " << r.iterations << " iterations; reporting best iterate\n";
  switch (format_of(c)) {
    case Format::csv: {
      std::string s = "n,p,x_min,value,crux_residual,gradient_norm,iterations,converged\n";
      s += std::to_string(a.n) + "," + shortest(a.p) + "," + csv_field(vec_string(r.x_min)) + "," + shortest(r.value) +
           "," + (r.crux_residual ? shortest(*r.crux_residual) : std::string()) + "," + shortest(r.gradient_norm) +
           "," + std::to_string(r.iterations) + "," + (r.converged ? "true" : "false") + "\n";
      return {s};
    }
    case Format::json: {
      auto j = header("minimize");
      j["n"] = a.n;
      j["p"] = a.p;
      j["x_min"] = vec_json(r.x_min);
      j["value"] = r.value;
      j["crux_residual"] = r.crux_residual ? Json(*r.crux_residual) : Json(nullptr);
      j["gradient_norm"] = r.gradient_norm;
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      return {dump(j)};
    }
    case Format::table: {
      Table t;
      t.row("x_min", "(" + vec_string(r.x_min) + ")");
      t.row("value", shortest(r.value));
      t.row("crux residual", r.crux_residual ? shortest(*r.crux_residual) : std::string("n/a (coordinates coincide)"));
      t.row("gradient norm", shortest(r.gradient_norm));
      t.row("iterations", std::to_string(r.iterations));
      t.row("converged", r.converged ? "yes" : "no");
      return {t.str()};
    }
  }
  return {};
}

// reproduce

Output cmd_reproduce(const Common& c) {
  const auto results = run_acceptance(resolve_seed(c));
  const int failed = static_cast<int>(std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.pass; }));
  const int code = failed ? 1 : 0;
  switch (format_of(c)) {
    case Format::csv: {
      std::string s = "criterion,title,pass,detail\n";
      for (const auto& r : results)
        s += std::to_string(r.id) + "," + csv_field(r.title) + "," + (r.pass ? "true" : "false") + "," +
             csv_field(r.detail) + "\n";
      return {s, code};
    }
    case Format::json: {
      auto j = header("reproduce");
      Json list = Json::array();
      for (const auto& r : results)
        list.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}});
      j["criteria"] = list;
      j["pass"] = failed == 0;
      return {dump(j), code};
    }
    case Format::table: {
      std::string s;
      for (const auto& r : results)
        s += std::string(r.pass ? "PASS " : "FAIL ") + std::to_string(r.id) + " " + r.title + ": " + r.detail + "\n";
      s += std::to_string(kCriterionCount - failed) + "/" + std::to_string(kCriterionCount) + " criteria passed\n";
      return {s, code};
    }
  }
  return {};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moments of weighted sums of independent exponential and gamma variables", "expmoments"};
  app.require_subcommand(1);

  Common c_moment, c_verify, c_schur, c_failure, c_solve, c_minimize, c_reproduce;
  MomentArgs margs;
  auto* moment_cmd = app.add_subcommand("moment", "E|S - shift|^p for a model literal");
  moment_cmd->add_option("-m,--model", margs.model, "Weights, e.g. \"1,-1\" or \"1,2^3\"")->required();
  moment_cmd->add_option("-p", margs.p, "Exponent (> -1)")->required();
  moment_cmd->add_option("--shift", margs.shift, "Subtracted constant");
  moment_cmd->add_flag("--signed", margs.signed_moment, "E|S - shift|^p sgn(S - shift)");
  moment_cmd->add_option("--engine", margs.engine, "exact, density, fourier or montecarlo");
  moment_cmd->add_option("--samples", margs.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
  add_common(moment_cmd, c_moment, true);

  VerifyArgs vargs;
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite");
  verify_cmd->add_option("suite", vargs.suite, "theorem1, hunter, mrtt, all-equal, gamma, claim, stepII-bound")
      ->required()
      ->check(CLI::IsMember({"theorem1", "hunter", "mrtt", "all-equal", "gamma", "claim", "stepII-bound"}));
  verify_cmd->add_option("-p", vargs.ps, "Exponent(s), comma separated")->delimiter(',');
  verify_cmd->add_option("--trials", vargs.trials, "Random trials per exponent")->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("-n", vargs.n, "Largest model size (theorem1, all-equal)")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--samples", vargs.samples, "Monte Carlo samples (gamma)")->check(CLI::PositiveNumber);
  add_common(verify_cmd, c_verify, true);

  SchurArgs sargs;
  auto* schur_cmd = app.add_subcommand("schur", "Schur-monotonicity scan of M_p");
  schur_cmd->add_option("-p", sargs.p, "Exponent (> -1)")->required();
  schur_cmd->add_option("-n", sargs.n, "Dimension (>= 2)");
  schur_cmd->add_option("--trials", sargs.trials, "T-transform trials")->check(CLI::PositiveNumber);
  add_common(schur_cmd, c_schur, true);

  double fp = 5.0;
  auto* failure_cmd = app.add_subcommand("failure", "Profile of f with M_p(x^2, 1 - x^2) = Gamma(p+1) f(x) on [0, 1/sqrt2]");
  failure_cmd->add_option("-p", fp, "Exponent (> -1)");
  add_common(failure_cmd, c_failure, false);

  std::string constant;
  auto* solve_cmd = app.add_subcommand("solve", "Solve for p_star or p_0");
  solve_cmd->add_option("constant", constant, "pstar or p0")->required()->check(CLI::IsMember({"pstar", "p0"}));
  add_common(solve_cmd, c_solve, false);

  MinimizeArgs nargs;
  auto* minimize_cmd = app.add_subcommand("minimize", "Minimise E|S_x|^p on the unit sphere");
  minimize_cmd->add_option("-n", nargs.n, "Dimension (>= 2)");
  minimize_cmd->add_option("-p", nargs.p, "Exponent (>= 2)");
  minimize_cmd->add_option("--multistart", nargs.multistart, "Random starts")->check(CLI::PositiveNumber);
  add_common(minimize_cmd, c_minimize, true);

  auto* reproduce_cmd = app.add_subcommand("reproduce", "Run the acceptance battery");
  add_common(reproduce_cmd, c_reproduce, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const Common* common = &c_reproduce;
  for (const auto& [cmd, c] : {std::pair{moment_cmd, &c_moment}, {verify_cmd, &c_verify}, {schur_cmd, &c_schur},
                               {failure_cmd, &c_failure}, {solve_cmd, &c_solve}, {minimize_cmd, &c_minimize}})
    if (*cmd) common = c;

  Output result;
  try {
    if (*moment_cmd) result = cmd_moment(margs, c_moment);
    else if (*verify_cmd) result = cmd_verify(vargs, c_verify);
    else if (*schur_cmd) result = cmd_schur(sargs, c_schur);
    else if (*failure_cmd) result = cmd_failure(fp, c_failure);
    else if (*solve_cmd) result = cmd_solve(constant, c_solve);
    else if (*minimize_cmd) result = cmd_minimize(nargs, c_minimize, err);
    else result = cmd_reproduce(c_reproduce);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const NotApplicable& e) {
    err << "not applicable: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    err << "no convergence: " << e.what() << " (best estimate " << shortest(e.best_estimate()) << ", error "
        << shortest(e.achieved_error()) << ")\n";
    return 4;
  }

  if (common->out.empty()) {
    out << result.text;
  } else {
    std::ofstream file(common->out, std::ios::binary);
    file << result.text;
    if (!file) {
      err << "error: cannot write " << common->out << "\n";
      return 2;
    }
  }
  return result.code;
}

}  // namespace expmoments
