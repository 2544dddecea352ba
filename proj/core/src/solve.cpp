#include "ub/solve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace ub {

void SolverConfig::validate() const {
  if (target_valuation < 1) throw error("target valuation must be >= 1");
  if (working_precision < target_valuation)
    throw error("working precision must be at least the target valuation");
}

std::vector<long> SolverTrace::v_sequence() const {
  std::vector<long> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.v_fn);
  return v;
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  os << "n,v_fn,val_step,val_err,mults\n";
  for (const auto& r : rows) {
    os << r.n << ',';
    if (r.v_lower_bound) os << ">=";
    os << r.v_fn << ',';
    if (r.val_step) os << *r.val_step;
    os << ',';
    if (r.val_err) os << *r.val_err;
    os << ',' << r.mults << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

namespace {

long val_bound(const Valuation& v) { return v.bound(); }

std::optional<long> err_val(const SolverConfig& cfg, const UltraVec& x) {
  if (!cfg.reference_root) return std::nullopt;
  return val_bound(vec_val(x - *cfg.reference_root));
}

UltraMat initial_binv(const PolySystem& sys, const UltraScalar& t,
                      const UltraVec& x0, const SolverConfig& cfg, long prec) {
  if (cfg.initial_binv) {
    UltraMat b = *cfg.initial_binv;
    b.change_prec_inplace(prec);
    return b;
  }
  UltraMat b0 = cfg.init_mode == InitMode::Jacobian
                    ? jacobian(sys, t, x0)
                    : divided_difference_matrix(sys, t, x0, 1);
  UltraMat binv = residue_inverse(b0);
  binv.change_prec_inplace(prec);
  return binv;
}

struct IterationCost {
  CostLedger& ledger;
  std::uint64_t last = 0;
  explicit IterationCost(CostLedger& l) : ledger(l) {}
  std::uint64_t take() {
    std::uint64_t d = ledger.muls - last;
    last = ledger.muls;
    return d;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Newton
// ---------------------------------------------------------------------------

UltraMat mat_mul(const UltraMat& a, const UltraMat& b) {
  if (a.cols() != b.rows()) throw dimension_mismatch();
  cost::record_mat_mat();
  UltraMat r(a.rows(), b.cols(), UltraScalar::zero(a.context(), 1));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      UltraScalar acc = a.at(i, 0) * b.at(0, j);
      for (std::size_t k = 1; k < a.cols(); ++k)
        acc = acc + a.at(i, k) * b.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

UltraMat lift_inverse(const UltraMat& a, long prec) {
  const FieldContext& ctx = a.context();
  UltraMat x = residue_inverse(a);
  x.change_prec_inplace(prec);
  UltraMat two_i = UltraMat::identity(ctx, a.rows(), prec);
  for (std::size_t i = 0; i < a.rows(); ++i)
    two_i.at(i, i) = UltraScalar::from_integer(ctx, 2, prec);
  // Precision doubles per step; log2(prec) + 1 steps reach prec.
  long steps = 1;
  while ((1L << steps) < prec) ++steps;
  for (long s = 0; s < steps; ++s) {
    UltraMat ax = mat_mul(a, x);
    UltraMat corr = two_i - ax;
    x = mat_mul(x, corr);
    x.change_prec_inplace(prec);
  }
  return x;
}

SolverTrace newton_solve(const PolySystem& sys, const UltraScalar& t,
                         const UltraVec& x0, const SolverConfig& config) {
  config.validate();
  SolverTrace trace;
  CostScope scope(trace.ledger);
  IterationCost cost(trace.ledger);
  const long w = config.working_precision;
  // t is a family parameter with exact tail; carry it at working precision.
  const UltraScalar tw = change_prec(t, w);

  UltraVec x = x0;
  x.change_prec_inplace(w);
  UltraVec f = evaluate(sys, tw, x);
  f.change_prec_inplace(w);
  std::optional<long> last_step;

  for (long n = 0; n <= config.max_iterations; ++n) {
    Valuation v = vec_val(f);
    trace.rows.push_back(TraceRow{n, val_bound(v), !v.is_exact(), last_step,
                                  err_val(config, x), cost.take()});
    if (f.is_apparent_zero()) {
      trace.termination = Termination::ExactAtPrecision;
      break;
    }
    if (v.value() >= config.target_valuation) {
      trace.termination = Termination::ReachedTarget;
      break;
    }
    if (n == config.max_iterations) break;

    UltraMat j = jacobian(sys, tw, x);  // throws singular_residue if bad
    UltraMat jinv = lift_inverse(j, w);
    UltraVec s = -mat_vec(jinv, f);
    last_step = val_bound(vec_val(s));
    x = x + s;
    x.change_prec_inplace(w);
    f = evaluate(sys, tw, x);
    f.change_prec_inplace(w);
  }
  trace.final_x = x;
  return trace;
}

// ---------------------------------------------------------------------------
// Broyden
// ---------------------------------------------------------------------------

SolverTrace broyden_solve(const PolySystem& sys, const UltraScalar& t,
                          const UltraVec& x0, const SolverConfig& config) {
  config.validate();
  SolverTrace trace;
  CostScope scope(trace.ledger);
  IterationCost cost(trace.ledger);
  const long w = config.working_precision;
  const UltraScalar tw = change_prec(t, w);

  UltraVec x = x0;
  x.change_prec_inplace(w);
  UltraMat binv = initial_binv(sys, tw, x, config, w);
  UltraVec f = evaluate(sys, tw, x);
  f.change_prec_inplace(w);
  std::optional<long> last_step;

  for (long n = 0; n <= config.max_iterations; ++n) {
    Valuation v = vec_val(f);
    trace.rows.push_back(TraceRow{n, val_bound(v), !v.is_exact(), last_step,
                                  err_val(config, x), cost.take()});
    if (f.is_apparent_zero()) {
      trace.termination = Termination::ExactAtPrecision;
      break;
    }
    if (v.value() >= config.target_valuation) {
      trace.termination = Termination::ReachedTarget;
      break;
    }
    if (n == config.max_iterations) break;

    UltraVec s = -mat_vec(binv, f);
    last_step = val_bound(vec_val(s));
    x = x + s;
    x.change_prec_inplace(w);
    UltraVec f_next = evaluate(sys, tw, x);
    f_next.change_prec_inplace(w);
    if (f_next.is_apparent_zero()) {
      // Remark on constancy: report the zero iterate and stop.
      f = f_next;
      continue;
    }
    UltraVec y = f_next - f;
    UltraVec check = mat_vec(binv, y);
    UpdateVector uv = choose_update_vector(s, check);
    binv = sherman_morrison_update(binv, f_next, uv.u, y);
    binv.change_prec_inplace(w);  // lift: basin stability licenses zero digits
    f = f_next;
  }
  trace.final_x = x;
  return trace;
}

// ---------------------------------------------------------------------------
// Secant (dimension 1)
// ---------------------------------------------------------------------------

SolverTrace secant_solve(const PolySystem& sys, const UltraScalar& t,
                         const UltraScalar& x0, const UltraScalar& x1,
                         const SolverConfig& config) {
  config.validate();
  if (sys.m != 1) throw error("secant method requires a 1-dimensional system");
  if ((x0 - x1).is_apparent_zero())
    throw error("secant method needs two distinct starting points");
  SolverTrace trace;
  CostScope scope(trace.ledger);
  IterationCost cost(trace.ledger);
  const long w = config.working_precision;
  const UltraScalar tw = change_prec(t, w);

  auto eval1 = [&](const UltraScalar& z) {
    UltraVec zx(std::vector<UltraScalar>{z});
    UltraVec fz = evaluate(sys, tw, zx);
    fz.change_prec_inplace(w);
    return fz[0];
  };

  UltraScalar xp = change_prec(x0, w);  // x_{n-1}
  UltraScalar xc = change_prec(x1, w);  // x_n
  UltraScalar fp = eval1(xp);
  UltraScalar fc = eval1(xc);
  if (fp.is_apparent_zero() || fc.is_apparent_zero())
    throw error("secant method needs nonzero f at both starting points");
  std::optional<long> last_step = val_bound((xc - xp).valuation());

  for (long n = 0; n <= config.max_iterations; ++n) {
    Valuation v = fc.valuation();
    UltraVec xcv(std::vector<UltraScalar>{xc});
    trace.rows.push_back(TraceRow{n, val_bound(v), !v.is_exact(), last_step,
                                  err_val(config, xcv), cost.take()});
    if (fc.is_apparent_zero()) {
      trace.termination = Termination::ExactAtPrecision;
      break;
    }
    if (v.value() >= config.target_valuation) {
      trace.termination = Termination::ReachedTarget;
      break;
    }
    if (n == config.max_iterations) break;

    UltraScalar den = fc - fp;
    if (den.is_apparent_zero()) throw apparent_zero_division(den.hi());
    UltraScalar s = -(fc * (xc - xp)) / den;
    last_step = val_bound(s.valuation());
    UltraScalar xn = xc + s;
    xn.change_prec_inplace(w);
    xp = xc;
    fp = fc;
    xc = xn;
    fc = eval1(xc);
  }
  trace.final_x = UltraVec(std::vector<UltraScalar>{xc});
  return trace;
}

// ---------------------------------------------------------------------------
// Order estimation
// ---------------------------------------------------------------------------

OrderReport estimate_orders(const std::vector<long>& v, std::size_t m) {
  if (v.size() < 2 * m + 3)
    throw error("trace too short for order estimation (need >= 2m + 3)");
  OrderReport rep;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    rep.q_ratios.push_back(double(v[i + 1]) / double(std::max(v[i], 1L)));

  std::size_t tail = std::max<std::size_t>(3, (rep.q_ratios.size() + 2) / 3);
  tail = std::min(tail, rep.q_ratios.size());
  double sum = 0;
  for (std::size_t i = rep.q_ratios.size() - tail; i < rep.q_ratios.size(); ++i)
    sum += rep.q_ratios[i];
  rep.tail_q_mean = sum / double(tail);

  // log v_n = n log(mu) + c, least squares.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (v[n] < 1) continue;
    double xn = double(n), yn = std::log(double(v[n]));
    sx += xn;
    sy += yn;
    sxx += xn * xn;
    sxy += xn * yn;
    ++cnt;
  }
  double denom = double(cnt) * sxx - sx * sx;
  rep.r_order = denom != 0 ? std::exp((double(cnt) * sxy - sx * sy) / denom) : 1.0;

  long defect = std::numeric_limits<long>::max();
  long c = 0;
  for (std::size_t w = 0; w + 2 * m < v.size(); ++w) {
    defect = std::min(defect, v[w + 2 * m] - 2 * v[w]);
    c = std::max(c, 2 * v[w] - v[w + 2 * m]);
  }
  rep.doubling_defect = defect;
  rep.doubling_constant = c;
  return rep;
}

OrderReport estimate_orders(const SolverTrace& trace, std::size_t m) {
  return estimate_orders(trace.v_sequence(), m);
}

std::string OrderReport::to_json() const {
  nlohmann::json j;
  j["q_ratios"] = q_ratios;
  j["tail_q_mean"] = tail_q_mean;
  j["r_order"] = r_order;
  j["doubling_defect"] = doubling_defect;
  j["doubling_constant"] = doubling_constant;
  return j.dump(2);
}

}  // namespace ub
