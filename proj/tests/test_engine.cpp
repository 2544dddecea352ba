#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "ub/engine.hpp"

using namespace ub;

namespace {

UltraVec int_point(const FieldContext& ctx, std::vector<long long> v, long prec) {
  std::vector<UltraScalar> e;
  for (long long n : v) e.push_back(UltraScalar::from_integer(ctx, n, prec));
  return UltraVec(e);
}

}  // namespace

TEST_CASE("alpha tuning") {
  // First observation leaves alpha where it started.
  PrecisionPlan p = PrecisionPlan::defaults(2);
  const double a0 = p.alpha;
  p = tune_alpha(p, 10, 13);
  CHECK(p.alpha == doctest::Approx(a0));
  CHECK(p.ratio_ewma == doctest::Approx(1.3));

  // A steady ratio below alpha pulls alpha down towards it, never under it.
  PrecisionPlan q = PrecisionPlan::defaults(2);
  double prev = q.alpha;
  q = tune_alpha(q, 10, 12);
  for (int i = 0; i < 6; ++i) {
    q = tune_alpha(q, 10, 12);
    CHECK(q.alpha < prev);
    CHECK(q.alpha > 1.2);
    prev = q.alpha;
  }

  // A ratio above alpha raises alpha past it immediately.
  PrecisionPlan r = PrecisionPlan::defaults(1);
  r = tune_alpha(r, 10, 40);
  CHECK(r.alpha == doctest::Approx(4.5));

  CHECK_THROWS_AS(tune_alpha(PrecisionPlan::defaults(1), 0, 3), error);
}

TEST_CASE("ideal iteration edge cases") {
  FieldContext ctx = FieldContext::qp(7);
  PolySystem lin = parse_system("m = 1\npoly: x1 - 3\n");
  UltraScalar t0 = UltraScalar::zero(ctx, 8);

  // Apparent-zero f: constant continuation, no arithmetic.
  PrecisionState st;
  st.n = 0;
  st.v_history = {4};
  st.x = int_point(ctx, {3}, 8);
  st.binv = UltraMat::identity(ctx, 1, 4);
  st.f = UltraVec::zero(ctx, 1, 8);
  PrecisionState out = ideal_iteration(st, 5, 6, lin, t0);
  CHECK(out.n == 1);
  CHECK(out.v_n() == 4);
  CHECK(out.x[0].same_value(st.x[0]));

  // A decreasing oracle is rejected.
  PrecisionState bad;
  bad.n = 0;
  bad.v_history = {2};
  bad.x = int_point(ctx, {52}, 6);  // 3 + 49
  bad.binv = UltraMat::identity(ctx, 1, 2);
  bad.f = evaluate(lin, t0, bad.x);
  CHECK_THROWS_AS(ideal_iteration(bad, 1, 1, lin, t0), error);
}

TEST_CASE("ideal mode runs under hard interval assertions") {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  UltraVec x0 = int_point(ctx, {1, -1}, 2);
  EngineConfig cfg;
  cfg.target_valuation = 64;
  cfg.mode = EngineMode::Ideal;
  cfg.assert_intervals = true;
  EngineResult res = run_engine(sys, t, x0, cfg);
  CHECK(res.termination == Termination::ReachedTarget);
  auto v = res.v_sequence();
  REQUIRE(v.size() >= 8);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) CHECK(v[i + 1] > v[i]);
  CHECK(v.back() >= 64);

  // f_n is carried on exactly [v_n, v_n + v_{n+1}).
  for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
    CHECK(res.rows[i].interval_lo == v[i]);
    CHECK(res.rows[i].interval_hi == v[i] + v[i + 1]);
  }

  // The returned point really solves the system to the target.
  UltraVec f = evaluate(sys, change_prec(t, 1024), res.root);
  CHECK(vec_val(f).bound() >= 64);
  CHECK(res.ledger.mat_mat_products == 0);
}

TEST_CASE("reality mode reproduces the ideal iterates") {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  UltraVec x0 = int_point(ctx, {1, -1}, 2);

  EngineConfig ideal;
  ideal.target_valuation = 48;
  ideal.mode = EngineMode::Ideal;
  EngineResult ri = run_engine(sys, t, x0, ideal);

  EngineConfig real;
  real.target_valuation = 48;
  real.mode = EngineMode::Reality;
  real.plan = PrecisionPlan::defaults(2);
  EngineResult rr = run_engine(sys, t, x0, real);

  CHECK(rr.termination == Termination::ReachedTarget);
  CHECK(ri.v_sequence() == rr.v_sequence());
  CHECK(vec_val(ri.root - rr.root).bound() >= 48);

  // Prediction gaps stay within the observed valuation itself.
  auto v = rr.v_sequence();
  REQUIRE(rr.plan.gap_history.size() >= 5);
  for (std::size_t i = 0; i < rr.plan.gap_history.size(); ++i)
    CHECK(rr.plan.gap_history[i] <= v[i + 1]);
}

TEST_CASE("over-prediction costs more but computes the same run") {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  UltraVec x0 = int_point(ctx, {1, -1}, 2);

  EngineConfig tight;
  tight.target_valuation = 48;
  tight.plan = PrecisionPlan::defaults(2);
  EngineResult a = run_engine(sys, t, x0, tight);

  EngineConfig loose = tight;
  loose.plan = PrecisionPlan::defaults(2);
  loose.plan.alpha = 4.0;
  loose.plan.tuning_enabled = false;
  EngineResult b = run_engine(sys, t, x0, loose);

  CHECK(a.v_sequence() == b.v_sequence());
  CHECK(b.model_total > a.model_total);
}

TEST_CASE("exact root triggers the recovery path") {
  FieldContext ctx = FieldContext::qp(7);
  // Root 3 + 7^10, exactly representable; the first step lands on it and the
  // residual vanishes at every budget.
  PolySystem lin = parse_system("m = 1\npoly: x1 - 3 - t^10\n");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  UltraVec x0 = int_point(ctx, {3}, 2);
  EngineConfig cfg;
  cfg.target_valuation = 200;
  cfg.mode = EngineMode::Reality;
  EngineResult res = run_engine(lin, t, x0, cfg);
  CHECK(res.termination == Termination::ExactAtPrecision);
  REQUIRE(res.rows.size() >= 2);
  CHECK(res.rows.back().v_lower_bound);
  CHECK(res.root[0].digit_at(0) == 3);
  CHECK(res.root[0].digit_at(10) == 1);

  // Same situation through the single-step interface.
  PrecisionState st;
  st.n = 0;
  st.v_history = {10};
  st.x = int_point(ctx, {3}, 30);
  st.binv = UltraMat::identity(ctx, 1, 10);
  st.f = evaluate(lin, change_prec(t, 30), st.x);
  RealityStep step = reality_iteration(st, PrecisionPlan::defaults(1), lin, t);
  CHECK(step.recovered);
  CHECK(step.exact_at_precision);
  CHECK(step.state.n == 1);
}

TEST_CASE("admissibility screening") {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  EngineConfig cfg;
  cfg.target_valuation = 8;

  CHECK_THROWS_AS(run_engine(sys, t, int_point(ctx, {0, 0}, 2), cfg),
                  admissibility_error);

  UltraVec frac(std::vector<UltraScalar>{
      UltraScalar::from_integer(ctx, 1, 4) / UltraScalar::uniformizer_pow(ctx, 1, 4),
      UltraScalar::from_integer(ctx, -1, 4)});
  CHECK_THROWS_AS(check_admissibility(sys, t, frac), admissibility_error);

  FieldContext c7 = FieldContext::qp(7);
  PolySystem flat = parse_system("m = 1\npoly: x1^2 - 7\n");
  UltraScalar t7 = UltraScalar::zero(c7, 8);
  CHECK_THROWS_AS(check_admissibility(flat, t7, int_point(c7, {0}, 4)),
                  admissibility_error);
}

TEST_CASE("one-dimensional reality run stays within the cost bound") {
  FieldContext ctx = FieldContext::qp(7);
  PolySystem sq = parse_system("m = 1\npoly: x1^2 - 2\n");
  UltraScalar t0 = UltraScalar::zero(ctx, 8);
  EngineConfig cfg;
  cfg.target_valuation = 50;
  cfg.mode = EngineMode::Reality;
  cfg.plan = PrecisionPlan::defaults(1);
  cfg.plan.alpha = 1.62;
  EngineResult res = run_engine(sq, t0, int_point(ctx, {3}, 2), cfg);
  CHECK(res.termination == Termination::ReachedTarget);
  auto v = res.v_sequence();
  CHECK(v.back() >= 50);
  CHECK(res.model_total <= res.eq_i_bound);
  CHECK(res.ledger.mat_mat_products == 0);

  UltraScalar err = res.root[0] * res.root[0] - UltraScalar::from_integer(ctx, 2, 64);
  CHECK(err.valuation().bound() >= 50);
}

TEST_CASE("engine over power series") {
  FieldContext ctx = FieldContext::fpt(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  UltraVec x0 = int_point(ctx, {1, -1}, 2);
  EngineConfig cfg;
  cfg.target_valuation = 32;
  cfg.mode = EngineMode::Reality;
  EngineResult res = run_engine(sys, t, x0, cfg);
  CHECK(res.termination == Termination::ReachedTarget);
  auto v = res.v_sequence();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) CHECK(v[i + 1] > v[i]);
  UltraVec f = evaluate(sys, change_prec(t, 1024), res.root);
  CHECK(vec_val(f).bound() >= 32);
}

TEST_CASE("engine trace format") {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t = UltraScalar::uniformizer_pow(ctx, 1, 8);
  EngineConfig cfg;
  cfg.target_valuation = 16;
  EngineResult res = run_engine(sys, t, int_point(ctx, {1, -1}, 2), cfg);
  std::string csv = res.to_csv();
  CHECK(csv.rfind("n,v_fn,val_step,val_err,mults,interval_lo,interval_hi,"
                  "alpha,gap,ledger_mults\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == res.rows.size() + 1);
  CHECK(csv.find("\n0,1,") != std::string::npos);
}
