#include "ub/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ub {

PrecisionPlan PrecisionPlan::defaults(std::size_t m) {
  PrecisionPlan p;
  p.m = std::max<std::size_t>(m, 1);
  p.alpha = std::pow(2.0, 1.0 / double(p.m));
  return p;
}

PrecisionPlan tune_alpha(PrecisionPlan plan, long v_n, long v_next) {
  if (v_n < 1) throw error("tune_alpha requires v_n >= 1");
  const double m = double(std::max<std::size_t>(plan.m, 1));
  const double rho = double(v_next) / double(v_n);
  const bool first = plan.ratio_history.empty();
  plan.ratio_history.push_back(rho);
  if (!plan.ewma_primed) {
    plan.ratio_ewma = rho;
    plan.ewma_primed = true;
  } else {
    plan.ratio_ewma = 0.5 * (plan.ratio_ewma + rho);
  }
  double a = first ? plan.alpha
                   : plan.ratio_ewma +
                         1.0 / (2.0 * m * double(plan.ratio_history.size()));
  a = std::max(a, 1.0 + 1.0 / (4.0 * m));
  // Stay at or above every ratio seen in the last 2m iterations, so the
  // prediction ceil(alpha v) keeps over-shooting (safe side).
  std::size_t window = std::min(plan.ratio_history.size(), 2 * plan.m);
  double worst = 0;
  for (std::size_t i = plan.ratio_history.size() - window;
       i < plan.ratio_history.size(); ++i)
    worst = std::max(worst, plan.ratio_history[i]);
  if (worst > a) a = worst + 1.0 / (2.0 * m);
  plan.alpha = a;
  return plan;
}

// ---------------------------------------------------------------------------
// Interval checks
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void violate(const char* step, const UltraScalar& e, long lo,
                          long hi) {
  std::ostringstream os;
  os << step << ": computed interval [" << e.lo() << ", " << e.hi()
     << ") falls short of the annotation [" << lo << ", " << hi << ")";
  throw interval_violation(os.str());
}

// Require the computed interval to cover the annotated one, then truncate to
// it, so stored objects carry exactly the annotated intervals.
void fit_scalar(UltraScalar& e, long lo, long hi, const char* step, bool hard) {
  if (hard && !(e.hi() >= hi && (e.is_apparent_zero() || e.lo() >= lo)))
    violate(step, e, lo, hi);
  if (e.hi() != hi) e.change_prec_inplace(hi);
}

void fit_vec(UltraVec& v, long lo, long hi, const char* step, bool hard) {
  for (std::size_t i = 0; i < v.size(); ++i)
    fit_scalar(v[i], lo, hi, step, hard);
}

void fit_mat(UltraMat& a, long lo, long hi, const char* step, bool hard) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      fit_scalar(a.at(i, j), lo, hi, step, hard);
}

void expect_exact_val(const Valuation& v, long want, const char* what,
                      bool hard) {
  if (hard && !(v.is_exact() && v.value() == want))
    throw interval_violation(std::string(what) + ": valuation " + v.str() +
                             ", expected " + std::to_string(want));
}

long entries_hi(const UltraVec& v) {
  long h = v[0].hi();
  for (std::size_t i = 1; i < v.size(); ++i) h = std::max(h, v[i].hi());
  return h;
}

// Steps (6)-(15): the rank-one inverse update at exactly the prescribed
// intervals.  binv arrives on [0, v_next); returns B_{n+1}^-1 on [0, v_next).
UltraMat tail_update(const UltraMat& binv_in, const UltraVec& s,
                     const UltraVec& f_next, long vn, long v_next, bool hard) {
  const FieldContext& ctx = binv_in.context();
  UltraMat binv = binv_in;

  UltraVec fbar = f_next;  // (6)
  fbar.change_prec_inplace(vn + v_next);
  fit_vec(fbar, v_next, vn + v_next, "step 6 (f-bar)", hard);

  UltraVec h = mat_vec(binv, fbar);  // (7)
  fit_vec(h, v_next, vn + v_next, "step 7 (h)", hard);

  // (8): u = s_l^-1 e_l; the invertibility check vector B^-1 y equals h + s
  // up to the common precision because B^-1 f_n = -s.
  UltraVec check = h + s;
  UpdateVector uv = choose_update_vector(s, check);
  fit_vec(uv.u, -vn, v_next - vn, "step 8 (u)", hard);

  UltraMat btrunc = binv;  // (9)
  btrunc.change_prec_inplace(vn);
  UltraVec r = vec_mat(uv.u, btrunc);
  fit_vec(r, -vn, 0, "step 9 (r)", hard);

  fbar.change_prec_inplace(2 * vn);  // (10)
  fit_vec(fbar, v_next, 2 * vn, "step 10 (f-bar)", hard);

  UltraScalar den =  // (11)
      UltraScalar::from_integer(ctx, 1, vn) + dot(r, fbar);
  if (hard) {
    auto dv = den.valuation();
    if (den.hi() < vn || !dv.is_exact() || dv.value() != 0)
      throw interval_violation("step 11 (den): not a unit on [0, v_n)");
  }
  if (den.hi() != vn) den.change_prec_inplace(vn);

  UltraMat num = rank_one(h, r);  // (12)
  fit_mat(num, v_next - vn, v_next, "step 12 (Num)", hard);

  for (std::size_t i = 0; i < num.rows(); ++i)  // (13)
    for (std::size_t j = 0; j < num.cols(); ++j)
      num.at(i, j) = num.at(i, j) / den;
  fit_mat(num, v_next - vn, v_next, "step 13 (N)", hard);

  UltraMat bnew = binv - num;  // (14)
  fit_mat(bnew, 0, v_next, "step 14 (B inverse)", hard);
  if (hard && !is_unimodular(bnew))
    throw interval_violation("updated inverse is not unimodular");
  return bnew;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ideal iteration
// ---------------------------------------------------------------------------

PrecisionState ideal_iteration(const PrecisionState& state, long v_next,
                               long v_next2, const PolySystem& sys,
                               const UltraScalar& t, bool assert_intervals) {
  const bool hard = assert_intervals;
  PrecisionState out = state;
  const long vn = state.v_n();
  if (state.f.is_apparent_zero()) {  // constant continuation
    ++out.n;
    out.v_history.push_back(vn);
    return out;
  }
  if (v_next < vn || v_next2 < v_next)
    throw error("oracle valuations must be nondecreasing");

  out.binv.change_prec_inplace(v_next);  // (1)
  fit_mat(out.binv, 0, v_next, "step 1 (B inverse lift)", hard);

  UltraVec s = -mat_vec(out.binv, out.f);  // (2)
  expect_exact_val(vec_val(s), vn, "step 2 (val of s)", hard);
  fit_vec(s, vn, vn + v_next, "step 2 (s)", hard);

  out.x = out.x + s;  // (3)
  fit_vec(out.x, 0, vn + v_next, "step 3 (x update)", hard);

  out.x.change_prec_inplace(v_next + v_next2);  // (4)

  UltraVec f_next =  // (5)
      evaluate(sys, change_prec(t, v_next + v_next2), out.x);
  if (f_next.is_apparent_zero()) {  // root exact at the working interval
    out.f = f_next;
    ++out.n;
    out.v_history.push_back(vec_val(f_next).bound());
    return out;
  }
  expect_exact_val(vec_val(f_next), v_next, "step 5 (val of f)", hard);
  fit_vec(f_next, v_next, v_next + v_next2, "step 5 (f)", hard);

  out.binv = tail_update(out.binv, s, f_next, vn, v_next, hard);
  out.f = f_next;
  ++out.n;
  out.v_history.push_back(v_next);
  return out;
}

// ---------------------------------------------------------------------------
// Reality iteration
// ---------------------------------------------------------------------------

RealityStep reality_iteration(const PrecisionState& state,
                              const PrecisionPlan& plan, const PolySystem& sys,
                              const UltraScalar& t, bool assert_intervals) {
  const bool hard = assert_intervals;
  RealityStep out{state, plan};
  const long vn = state.v_n();
  if (plan.alpha <= 1.0) throw error("alpha must exceed 1");
  if (state.f.is_apparent_zero()) {
    out.exact_at_precision = true;
    return out;
  }

  const long a = std::max(long(std::ceil(plan.alpha * double(vn))), vn + 1);
  const long a2 =
      std::max(long(std::ceil(plan.alpha * plan.alpha * double(vn))), a + 1);

  out.state.binv.change_prec_inplace(a);  // (1), predicted
  fit_mat(out.state.binv, 0, a, "step 1 (B inverse lift)", hard);

  UltraVec s = -mat_vec(out.state.binv, out.state.f);  // (2)
  expect_exact_val(vec_val(s), vn, "step 2 (val of s)", hard);
  fit_vec(s, vn, vn + a, "step 2 (s)", hard);

  out.state.x = out.state.x + s;  // (3)
  fit_vec(out.state.x, 0, vn + a, "step 3 (x update)", hard);

  out.state.x.change_prec_inplace(a + a2);  // (4)

  UltraVec f_next =  // (5); the true v_{n+1} becomes visible here
      evaluate(sys, change_prec(t, a + a2), out.state.x);
  Valuation v = vec_val(f_next);
  if (!v.is_exact()) {
    // Under-prediction: the valuation escaped the budget.  Double it, raise
    // alpha, retry once; a second vanishing means the root is exact here.
    out.recovered = true;
    const long budget = 2 * (a + a2);
    out.state.x.change_prec_inplace(budget);
    f_next = evaluate(sys, change_prec(t, budget), out.state.x);
    out.plan.alpha = std::max(out.plan.alpha * 2.0,
                              double(v.bound()) / double(std::max(vn, 1L)));
    v = vec_val(f_next);
    if (!v.is_exact()) {
      out.state.f = f_next;
      ++out.state.n;
      out.state.v_history.push_back(v.bound());
      out.exact_at_precision = true;
      return out;
    }
  }
  const long v_next = v.value();
  if (v_next < vn)
    throw under_prediction("observed valuation decreased; outside the basin");
  out.gap = std::labs(a - v_next);
  out.plan.gap_history.push_back(out.gap);

  out.state.binv.change_prec_inplace(v_next);    // (5.1)
  s.change_prec_inplace(vn + v_next);            // (5.2)
  if (out.plan.tuning_enabled)                   // (5.3)
    out.plan = tune_alpha(out.plan, vn, v_next);
  const long a_next =
      std::max(long(std::ceil(out.plan.alpha * double(v_next))), v_next + 1);
  out.state.x.change_prec_inplace(v_next + a_next);  // (5.4)
  f_next.change_prec_inplace(v_next + a_next);       // (5.5)

  out.state.binv = tail_update(out.state.binv, s, f_next, vn, v_next, hard);
  out.state.f = f_next;
  ++out.state.n;
  out.state.v_history.push_back(v_next);
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

void check_admissibility(const PolySystem& sys, const UltraScalar& t,
                         const UltraVec& x0) {
  if (x0.size() != sys.m) throw dimension_mismatch();
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (x0[i].hi() < 1)
      throw admissibility_error("x0 entries need absolute precision >= 1");
    auto v = x0[i].valuation();
    if (!v.is_infinite() && v.bound() < 0)
      throw admissibility_error("x0 lies outside the ring of integers");
  }
  UltraVec xr = x0;
  UltraVec f0 = evaluate(sys, t, xr);
  Valuation fv = vec_val(f0);
  if (!fv.is_infinite() && fv.bound() < 1)
    throw admissibility_error("x0 is not a root of the residue system");
  try {
    residue_inverse(jacobian(sys, t, xr));
  } catch (const singular_residue&) {
    throw admissibility_error("residue Jacobian of x0 is singular");
  }
}

namespace {

// True valuations from a deep fixed-precision run of the plain solver; the
// engine reproduces the same iterates, so these are its v_n.
std::vector<long> reference_oracle(const PolySystem& sys, const UltraScalar& t,
                                   const UltraVec& x0, long n) {
  SolverConfig c;
  c.target_valuation = 8 * n;
  c.working_precision = 10 * n;
  c.max_iterations = 512;
  SolverTrace tr = broyden_solve(sys, t, x0, c);
  std::vector<long> v;
  for (const auto& row : tr.rows) {
    if (row.v_lower_bound) break;
    v.push_back(row.v_fn);
  }
  if (v.size() < 2) throw error("reference run resolved too few valuations");
  return v;
}

}  // namespace

std::vector<long> EngineResult::v_sequence() const {
  std::vector<long> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.v_fn);
  return v;
}

std::string EngineResult::to_csv() const {
  std::ostringstream os;
  os << "n,v_fn,val_step,val_err,mults,interval_lo,interval_hi,alpha,gap,"
        "ledger_mults\n";
  for (const auto& r : rows) {
    os << r.n << ',';
    if (r.v_lower_bound) os << ">=";
    os << r.v_fn << ',';
    if (r.val_step) os << *r.val_step;
    os << ',';
    if (r.val_err) os << *r.val_err;
    os << ',' << r.mults << ',' << r.interval_lo << ',' << r.interval_hi << ','
       << r.alpha << ',' << r.gap << ',' << r.ledger_mults << "\n";
  }
  return os.str();
}

double closed_form_cost_bound(const PolySystem& sys, double alpha, long n) {
  const double m = double(sys.m);
  const double l = double(expected_eval_mults(sys));
  const double a = alpha;
  const long arg = long(std::ceil(double(n) / (a - 1.0)));
  return (5 * m * m + (3 * m * m + m) * a * a + l * (1 + a) * (1 + a) * a * a) *
         default_mul_model(arg);
}

EngineResult run_engine(const PolySystem& sys, const UltraScalar& t,
                        const UltraVec& x0, const EngineConfig& config) {
  check_admissibility(sys, t, x0);
  const long n_target = config.target_valuation;
  if (n_target < 1) throw error("target valuation must be >= 1");

  EngineResult res;
  PrecisionPlan plan =
      config.plan.m == sys.m ? config.plan : [&] {
        PrecisionPlan p = config.plan;
        p.m = sys.m;
        return p;
      }();
  if (plan.alpha <= 1.0) throw error("alpha must exceed 1");

  std::vector<long> oracle = config.oracle_v;
  if (config.mode == EngineMode::Ideal && oracle.empty())
    oracle = reference_oracle(sys, t, x0, n_target);

  CostScope scope(res.ledger);

  // Resolve v_0 by probing at growing precision.
  long v0 = -1;
  for (long probe = 4; probe <= (1L << 24); probe *= 2) {
    UltraVec xp = x0;
    xp.change_prec_inplace(probe);
    Valuation v = vec_val(evaluate(sys, change_prec(t, probe), xp));
    if (v.is_exact()) {
      v0 = v.value();
      break;
    }
  }
  if (v0 < 0)
    throw admissibility_error("f(x0) vanishes at every probed precision");
  if (config.mode == EngineMode::Ideal && oracle.front() != v0)
    throw error("oracle valuation sequence does not start at val(f(x0))");

  auto oracle_at = [&oracle](std::size_t i) {
    while (i >= oracle.size()) oracle.push_back(2 * oracle.back());
    return oracle[i];
  };

  const long vhat1 =
      config.mode == EngineMode::Ideal
          ? oracle_at(1)
          : std::max(long(std::ceil(plan.alpha * double(v0))), v0 + 1);

  PrecisionState st;
  st.n = 0;
  st.v_history = {v0};
  st.x = x0;
  st.x.change_prec_inplace(v0 + vhat1);
  st.f = evaluate(sys, change_prec(t, v0 + vhat1), st.x);
  st.binv = residue_inverse(jacobian(sys, change_prec(t, v0 + vhat1), st.x));
  st.binv.change_prec_inplace(v0);

  std::uint64_t mark = res.ledger.muls;
  std::optional<long> last_step;
  long last_gap = 0;

  for (long iter = 0;; ++iter) {
    const long vn = st.v_n();
    const bool zero = st.f.is_apparent_zero();
    EngineRow row;
    row.n = st.n;
    row.v_fn = vn;
    row.v_lower_bound = zero;
    row.val_step = last_step;
    row.mults = res.ledger.muls - mark;
    mark = res.ledger.muls;
    row.interval_lo = vn;
    row.interval_hi = entries_hi(st.f);
    row.alpha = plan.alpha;
    row.gap = last_gap;
    row.ledger_mults = res.ledger.muls;
    res.rows.push_back(row);

    if (zero) {
      res.termination = Termination::ExactAtPrecision;
      break;
    }
    if (vn >= n_target) {
      res.termination = Termination::ReachedTarget;
      break;
    }
    if (iter >= config.max_iterations) {
      res.termination = Termination::MaxIterations;
      break;
    }

    if (config.mode == EngineMode::Ideal) {
      st = ideal_iteration(st, oracle_at(std::size_t(st.n) + 1),
                           oracle_at(std::size_t(st.n) + 2), sys, t,
                           config.assert_intervals);
      last_gap = 0;
    } else {
      RealityStep step =
          reality_iteration(st, plan, sys, t, config.assert_intervals);
      plan = step.plan;
      last_gap = step.gap;
      if (step.exact_at_precision && step.state.n == st.n) {
        // f_n was already apparently zero; the loop head handles it.
        res.termination = Termination::ExactAtPrecision;
        res.root = st.x;
        break;
      }
      st = step.state;
    }
    last_step = vn;  // val(s_n) = v_n
  }

  res.root = st.x;
  res.plan = plan;
  res.model_total = res.ledger.model_cost(default_mul_model);
  res.eq_i_bound = closed_form_cost_bound(sys, plan.alpha, n_target);
  return res;
}

}  // namespace ub
