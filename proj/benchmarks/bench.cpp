#include <benchmark/benchmark.h>

#include "ub/engine.hpp"

using namespace ub;

static void BM_ScalarMul(benchmark::State& state) {
  FieldContext ctx = FieldContext::qp(17);
  long prec = state.range(0);
  UltraScalar a = UltraScalar::sample_unit(ctx, prec, 1);
  UltraScalar b = UltraScalar::sample_unit(ctx, prec, 2);
  for (auto _ : state) benchmark::DoNotOptimize(a * b);
}
BENCHMARK(BM_ScalarMul)->Arg(16)->Arg(64)->Arg(256)->Arg(1024);

static void BM_ScalarDiv(benchmark::State& state) {
  FieldContext ctx = FieldContext::qp(17);
  long prec = state.range(0);
  UltraScalar a = UltraScalar::sample_unit(ctx, prec, 3);
  UltraScalar b = UltraScalar::sample_unit(ctx, prec, 4);
  for (auto _ : state) benchmark::DoNotOptimize(a / b);
}
BENCHMARK(BM_ScalarDiv)->Arg(16)->Arg(64)->Arg(256);

static void BM_SeriesMul(benchmark::State& state) {
  FieldContext ctx = FieldContext::fpt(17);
  long prec = state.range(0);
  UltraScalar a = UltraScalar::sample_unit(ctx, prec, 5);
  UltraScalar b = UltraScalar::sample_unit(ctx, prec, 6);
  for (auto _ : state) benchmark::DoNotOptimize(a * b);
}
BENCHMARK(BM_SeriesMul)->Arg(16)->Arg(64)->Arg(256);

static void solver_inputs(const FieldContext& ctx, UltraScalar& t, UltraVec& x0) {
  t = UltraScalar::uniformizer_pow(ctx, 1, 2048);
  x0 = UltraVec(std::vector<UltraScalar>{
      UltraScalar::from_integer(ctx, 1, 1),
      UltraScalar::from_integer(ctx, -1, 1)});
}

static void BM_BroydenF1(benchmark::State& state) {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t;
  UltraVec x0;
  solver_inputs(ctx, t, x0);
  SolverConfig cfg;
  cfg.target_valuation = state.range(0);
  cfg.working_precision = 3 * state.range(0) + 32;
  for (auto _ : state) benchmark::DoNotOptimize(broyden_solve(sys, t, x0, cfg));
}
BENCHMARK(BM_BroydenF1)->Arg(32)->Arg(64)->Arg(128);

static void BM_NewtonF1(benchmark::State& state) {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t;
  UltraVec x0;
  solver_inputs(ctx, t, x0);
  SolverConfig cfg;
  cfg.target_valuation = state.range(0);
  cfg.working_precision = 3 * state.range(0) + 32;
  for (auto _ : state) benchmark::DoNotOptimize(newton_solve(sys, t, x0, cfg));
}
BENCHMARK(BM_NewtonF1)->Arg(32)->Arg(64)->Arg(128);

static void BM_EngineRealityF1(benchmark::State& state) {
  FieldContext ctx = FieldContext::qp(17);
  PolySystem sys = builtin_family("F1");
  UltraScalar t;
  UltraVec x0;
  solver_inputs(ctx, t, x0);
  EngineConfig cfg;
  cfg.target_valuation = state.range(0);
  cfg.mode = EngineMode::Reality;
  cfg.plan = PrecisionPlan::defaults(2);
  cfg.assert_intervals = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_engine(sys, t, x0, cfg));
}
BENCHMARK(BM_EngineRealityF1)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
