// Experiment driver: solver runs over Q_p / F_p[[t]], trace + report files,
// root lifting, and a self-check suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fixtures.hpp"
#include "ub/engine.hpp"

using namespace ub;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitAdmissibility = 3;
constexpr int kExitNonConvergence = 4;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Spec {
  std::string field = "qp";
  long prime = 17;
  std::string system = "F1";
  long t_val = 1;
  std::vector<std::string> methods{"broyden"};
  long target = 64;
  std::string mode = "reality";
  std::string alpha = "auto";
  std::string x0;
  std::string out = ".";
  bool tsv = false;
  std::uint64_t seed = 0;
};

FieldContext make_context(const Spec& s) {
  if (s.prime < 2) throw usage_error("prime must be >= 2");
  if (s.field == "qp") return FieldContext::qp(s.prime);
  if (s.field == "fpt") return FieldContext::fpt(s.prime);
  throw usage_error("unknown field '" + s.field + "' (expected qp or fpt)");
}

PolySystem load_system(const std::string& name) {
  if (name == "F1" || name == "F2" || name == "F3")
    return builtin_family(name);
  std::ifstream in(name);
  if (!in) throw usage_error("cannot open system file '" + name + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_system(buf.str());
  } catch (const parse_error& e) {
    throw usage_error(std::string("bad system file: ") + e.what());
  }
}

std::vector<long> parse_residues(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stol(item));
    } catch (...) {
      throw usage_error("bad --x0 entry '" + item + "'");
    }
  }
  if (out.empty()) throw usage_error("--x0 is empty");
  return out;
}

UltraVec initial_point(const Spec& s, const FieldContext& ctx,
                       const PolySystem& sys, long prec) {
  std::vector<long> res;
  if (!s.x0.empty()) {
    res = parse_residues(s.x0);
  } else if (auto baked = fixtures::initial_residues(s.system)) {
    res = *baked;
  } else {
    throw usage_error("--x0 required for systems without baked residues");
  }
  if (res.size() != sys.m)
    throw usage_error("--x0 has " + std::to_string(res.size()) +
                      " entries, system has m = " + std::to_string(sys.m));
  std::vector<UltraScalar> entries;
  for (long r : res) entries.push_back(UltraScalar::from_integer(ctx, r, prec));
  return UltraVec(entries);
}

double resolve_alpha(const Spec& s, std::size_t m) {
  if (s.alpha == "auto") return std::pow(2.0, 1.0 / double(m));
  try {
    double a = std::stod(s.alpha);
    if (a <= 1.0) throw usage_error("--alpha must exceed 1");
    return a;
  } catch (const usage_error&) {
    throw;
  } catch (...) {
    throw usage_error("bad --alpha '" + s.alpha + "'");
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string tsv_of(const std::vector<long>& v) {
  std::ostringstream os;
  os << "k\tv_k\n";
  for (std::size_t k = 0; k < v.size(); ++k) os << k << '\t' << v[k] << "\n";
  return os.str();
}

// One method's outcome, produced on a worker thread.
struct MethodRun {
  std::string method;
  std::vector<long> v;
  std::string trace_csv;
  Termination termination = Termination::MaxIterations;
  CostLedger ledger;
  UltraVec root;
  double model_total = 0;
  double eq_i_bound = 0;
  std::string error;
  int error_code = 0;
};

MethodRun run_method(const Spec& spec, const std::string& method) {
  MethodRun out;
  out.method = method;
  try {
    FieldContext ctx = make_context(spec);
    PolySystem sys = load_system(spec.system);
    const long n = spec.target;
    if (n < 1) throw usage_error("--target-prec must be >= 1");
    const long w = 3 * n + 32;
    UltraScalar t = UltraScalar::uniformizer_pow(ctx, spec.t_val, 12 * n + 64);

    if (method == "newton" || (method == "broyden" && spec.mode == "fixed")) {
      UltraVec x0 = initial_point(spec, ctx, sys, 1);
      check_admissibility(sys, t, x0);
      SolverConfig cfg;
      cfg.target_valuation = n;
      cfg.working_precision = w;
      SolverTrace tr = method == "newton" ? newton_solve(sys, t, x0, cfg)
                                          : broyden_solve(sys, t, x0, cfg);
      out.v = tr.v_sequence();
      out.trace_csv = tr.to_csv();
      out.termination = tr.termination;
      out.ledger = tr.ledger;
      out.root = tr.final_x;
      out.model_total = tr.ledger.model_cost(default_mul_model);
    } else if (method == "broyden") {
      UltraVec x0 = initial_point(spec, ctx, sys, 1);
      EngineConfig cfg;
      cfg.target_valuation = n;
      cfg.mode = spec.mode == "ideal" ? EngineMode::Ideal : EngineMode::Reality;
      if (spec.mode != "ideal" && spec.mode != "reality")
        throw usage_error("unknown --mode '" + spec.mode + "'");
      cfg.plan = PrecisionPlan::defaults(sys.m);
      cfg.plan.alpha = resolve_alpha(spec, sys.m);
      cfg.assert_intervals = false;
      EngineResult res = run_engine(sys, t, x0, cfg);
      out.v = res.v_sequence();
      out.trace_csv = res.to_csv();
      out.termination = res.termination;
      out.ledger = res.ledger;
      out.root = res.root;
      out.model_total = res.model_total;
      out.eq_i_bound = res.eq_i_bound;
    } else if (method == "secant") {
      if (sys.m != 1)
        throw usage_error("secant needs a 1-dimensional system");
      UltraVec x0 = initial_point(spec, ctx, sys, w);
      SolverConfig cfg;
      cfg.target_valuation = n;
      cfg.working_precision = w;
      UltraScalar a = x0[0];
      UltraScalar b = a + UltraScalar::uniformizer_pow(ctx, 1, w);
      SolverTrace tr = secant_solve(sys, t, a, b, cfg);
      out.v = tr.v_sequence();
      out.trace_csv = tr.to_csv();
      out.termination = tr.termination;
      out.ledger = tr.ledger;
      out.root = tr.final_x;
      out.model_total = tr.ledger.model_cost(default_mul_model);
    } else {
      throw usage_error("unknown method '" + method + "'");
    }
    if (out.termination == Termination::MaxIterations) {
      out.error = method + " did not converge to valuation " +
                  std::to_string(spec.target);
      out.error_code = kExitNonConvergence;
    }
  } catch (const usage_error& e) {
    out.error = e.what();
    out.error_code = kExitUsage;
  } catch (const admissibility_error& e) {
    out.error = e.what();
    out.error_code = kExitAdmissibility;
  } catch (const singular_residue& e) {
    out.error = e.what();
    out.error_code = kExitAdmissibility;
  } catch (const basin_violation& e) {
    out.error = e.what();
    out.error_code = kExitNonConvergence;
  } catch (const under_prediction& e) {
    out.error = e.what();
    out.error_code = kExitNonConvergence;
  } catch (const std::exception& e) {
    out.error = e.what();
    out.error_code = 1;
  }
  return out;
}

nlohmann::json ledger_json(const CostLedger& l) {
  nlohmann::json j;
  j["muls"] = l.muls;
  j["divs"] = l.divs;
  j["mat_mat_products"] = l.mat_mat_products;
  j["model_cost"] = l.model_cost(default_mul_model);
  return j;
}

int cmd_run(const Spec& spec) {
  fs::create_directories(spec.out);
  {  // fail fast on spec problems before spawning workers
    make_context(spec);
    load_system(spec.system);
  }
  std::vector<MethodRun> runs(spec.methods.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < spec.methods.size(); ++i)
    pool.emplace_back(
        [&, i] { runs[i] = run_method(spec, spec.methods[i]); });
  for (auto& th : pool) th.join();

  int rc = 0;
  nlohmann::json cost = nlohmann::json::object();
  for (const auto& r : runs) {
    if (r.error_code) {
      std::cerr << "ub run [" << r.method << "]: " << r.error << "\n";
      rc = std::max(rc, r.error_code);
      if (r.v.empty()) continue;
    }
    fs::path base = fs::path(spec.out);
    write_file(base / (r.method + "_trace.csv"), r.trace_csv);
    if (spec.tsv) write_file(base / (r.method + "_v.tsv"), tsv_of(r.v));
    try {
      PolySystem sys = load_system(spec.system);
      OrderReport rep = estimate_orders(r.v, sys.m);
      write_file(base / (r.method + "_order.json"), rep.to_json() + "\n");
    } catch (const std::exception&) {
      // short traces have no order estimate; skip the report
    }
    cost[r.method] = ledger_json(r.ledger);
    if (r.eq_i_bound > 0) cost[r.method]["closed_form_bound"] = r.eq_i_bound;
  }
  {
    PolySystem sys = load_system(spec.system);
    cost["closed_form_newton_style"] =
        double(sys.m) * double(sys.m) * double(sys.m) *
        default_mul_model(spec.target);
  }
  write_file(fs::path(spec.out) / "cost_compare.json", cost.dump(2) + "\n");
  return rc;
}

int cmd_lift(const Spec& spec) {
  FieldContext ctx = make_context(spec);
  PolySystem sys = load_system(spec.system);
  const long n = spec.target;
  if (n < 1) throw usage_error("--target-prec must be >= 1");
  const long w = 3 * n + 32;
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, spec.t_val, 12 * n + 64);
  UltraVec x0 = initial_point(spec, ctx, sys, 1);
  check_admissibility(sys, t, x0);
  SolverConfig cfg;
  cfg.target_valuation = n;
  cfg.working_precision = w;
  SolverTrace tr = broyden_solve(sys, t, x0, cfg);
  if (tr.termination == Termination::MaxIterations) {
    std::cerr << "ub lift: no convergence to valuation " << n << "\n";
    return kExitNonConvergence;
  }
  UltraVec root = tr.final_x;
  root.change_prec_inplace(n);
  for (std::size_t i = 0; i < root.size(); ++i)
    std::cout << "x" << (i + 1) << " = " << root[i].str() << "\n";
  std::cout << "val(f(root)) = "
            << vec_val(evaluate(sys, t, tr.final_x)).str() << "\n";
  return 0;
}

int check_failures = 0;

void check(bool ok, const std::string& what) {
  std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
  if (!ok) ++check_failures;
}

int cmd_check(std::uint64_t seed) {
  // Arithmetic laws: digit oracle is the exact-rational backend for Q_p and a
  // direct convolution for F_p[[t]].
  for (auto kind : {FieldKind::Padic, FieldKind::Series}) {
    FieldContext ctx =
        kind == FieldKind::Padic ? FieldContext::qp(17) : FieldContext::fpt(17);
    bool ok = true;
    for (int i = 0; i < 200 && ok; ++i) {
      UltraScalar a = UltraScalar::sample_unit(ctx, 12, seed * 977 + 2 * i);
      UltraScalar b = UltraScalar::sample_unit(ctx, 9, seed * 977 + 2 * i + 1);
      UltraScalar prod = a * b;
      ok = prod.lo() == a.lo() + b.lo() &&
           prod.rel() == std::min(a.rel(), b.rel());
      if (!ok) break;
      if (kind == FieldKind::Padic) {
        ok = prod.same_value(
            (a.to_exact() * b.to_exact()).to_zealous(ctx, prod.hi()));
      } else {
        for (long k = 0; k < prod.rel() && ok; ++k) {
          unsigned long long acc = 0;
          for (long j = 0; j <= k; ++j)
            acc += static_cast<unsigned long long>(a.digit_at(j)) *
                   b.digit_at(k - j);
          ok = prod.digit_at(k) == acc % 17;
        }
      }
    }
    check(ok, std::string("zealous product law (") +
                  (kind == FieldKind::Padic ? "p-adic" : "series") + ")");
  }
  // Gay-style termination on random linear systems.
  {
    FieldContext ctx = FieldContext::qp(17);
    bool ok = true;
    for (int trial = 0; trial < 5 && ok; ++trial) {
      std::ostringstream text;
      std::size_t m = 2 + trial % 3;
      text << "m = " << m << "\n";
      std::uint64_t s = seed + 31 * trial;
      for (std::size_t i = 0; i < m; ++i) {
        text << "poly:";
        for (std::size_t j = 0; j < m; ++j) {
          s = s * 6364136223846793005ull + 1442695040888963407ull;
          long c = long((s >> 33) % 16) + (i == j ? 1 : 0);
          text << (j ? " + " : " ") << c << " * x" << (j + 1);
        }
        text << " + 17\n";
      }
      PolySystem sys = parse_system(text.str());
      UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 64);
      SolverConfig cfg;
      cfg.target_valuation = 50;
      cfg.working_precision = 60;
      try {
        SolverTrace tr = broyden_solve(
            sys, t, UltraVec::zero(ctx, m, 1), cfg);
        ok = tr.termination == Termination::ExactAtPrecision &&
             tr.rows.size() <= 2 * m + 1;
      } catch (const singular_residue&) {
        // singular draw, skip
      }
    }
    check(ok, "linear systems finish within 2m steps");
  }
  // Baked residues really are residue roots with invertible Jacobians.
  for (const char* fam : {"F1", "F2", "F3"}) {
    PolySystem sys = builtin_family(fam);
    auto baked = fixtures::initial_residues(fam);
    auto found = fixtures::search_residue_roots(sys, 17);
    bool ok = baked.has_value();
    if (ok) {
      std::vector<long> want = *baked;
      for (auto& w : want) w = ((w % 17) + 17) % 17;
      ok = std::find(found.begin(), found.end(), want) != found.end();
    }
    check(ok, std::string("baked residue root for ") + fam);
  }
  return check_failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ultrametric Broyden/Newton experiment harness"};
  app.require_subcommand(1);

  Spec spec;
  if (const char* env = std::getenv("UB_SEED")) spec.seed = std::strtoull(env, nullptr, 10);

  auto add_common = [&](CLI::App* c) {
    c->add_option("--field", spec.field, "qp or fpt");
    c->add_option("--prime", spec.prime, "residue characteristic p");
    c->add_option("--system", spec.system, "F1 | F2 | F3 | path to file");
    c->add_option("--t-val", spec.t_val, "t = pi^k, this is k");
    c->add_option("--target-prec", spec.target, "target valuation N");
    c->add_option("--x0", spec.x0, "comma-separated initial residues");
    c->add_option("--seed", spec.seed, "RNG seed (overrides UB_SEED)");
  };

  CLI::App* run = app.add_subcommand("run", "run solvers and write reports");
  add_common(run);
  run->add_option("--method", spec.methods,
                  "broyden | newton | secant (comma separated)")
      ->delimiter(',');
  run->add_option("--mode", spec.mode, "ideal | reality | fixed");
  run->add_option("--alpha", spec.alpha, "growth exponent or 'auto'");
  run->add_option("--out", spec.out, "output directory");
  run->add_flag("--tsv", spec.tsv, "also write (k, v_k) TSV files");

  CLI::App* lift = app.add_subcommand("lift", "lift a residue root and print it");
  add_common(lift);

  CLI::App* chk = app.add_subcommand("check", "run the invariant self-check");
  chk->add_option("--seed", spec.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(spec);
    if (lift->parsed()) return cmd_lift(spec);
    return cmd_check(spec.seed);
  } catch (const usage_error& e) {
    std::cerr << "ub: " << e.what() << "\n";
    return kExitUsage;
  } catch (const admissibility_error& e) {
    std::cerr << "ub: " << e.what() << "\n";
    return kExitAdmissibility;
  } catch (const singular_residue& e) {
    std::cerr << "ub: " << e.what() << "\n";
    return kExitAdmissibility;
  } catch (const basin_violation& e) {
    std::cerr << "ub: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "ub: " << e.what() << "\n";
    return 1;
  }
}
