#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ub/cost.hpp"
#include "ub/linalg.hpp"
#include "ub/poly.hpp"

namespace ub {

enum class InitMode { Jacobian, DividedDifference };

enum class Termination {
  ReachedTarget,      // val(f_n) >= N
  ExactAtPrecision,   // f_n apparently zero; constant continuation
  MaxIterations,      // non-convergence
};

struct SolverConfig {
  long target_valuation = 1;   // N: stop once val(f_n) >= N
  long max_iterations = 256;
  long working_precision = 2;  // fixed absolute precision, >= N
  InitMode init_mode = InitMode::Jacobian;
  // Explicit B_0^-1 (already inverted), overriding init_mode.
  std::optional<UltraMat> initial_binv;
  // Reference root from a deeper run; fills the val_err trace column.
  std::optional<UltraVec> reference_root;

  void validate() const;
};

struct TraceRow {
  long n = 0;
  long v_fn = 0;             // val(f_n); bound value when apparent zero
  bool v_lower_bound = false;
  std::optional<long> val_step;  // val(s_{n-1}) = val(x_n - x_{n-1})
  std::optional<long> val_err;   // val(x_n - x*) when a reference is known
  std::uint64_t mults = 0;       // scalar mults spent producing iterate n
};

struct SolverTrace {
  std::vector<TraceRow> rows;
  Termination termination = Termination::MaxIterations;
  UltraVec final_x;
  CostLedger ledger;

  // Exact valuations only; apparent-zero tail entries use their bound.
  std::vector<long> v_sequence() const;
  std::string to_csv() const;  // header: n,v_fn,val_step,val_err,mults
};

SolverTrace newton_solve(const PolySystem& sys, const UltraScalar& t,
                         const UltraVec& x0, const SolverConfig& config);

SolverTrace broyden_solve(const PolySystem& sys, const UltraScalar& t,
                          const UltraVec& x0, const SolverConfig& config);

SolverTrace secant_solve(const PolySystem& sys, const UltraScalar& t,
                         const UltraScalar& x0, const UltraScalar& x1,
                         const SolverConfig& config);

// ---------------------------------------------------------------------------
// Convergence-order estimation
// ---------------------------------------------------------------------------

struct OrderReport {
  std::vector<double> q_ratios;  // v_{n+1} / v_n
  double tail_q_mean = 0;        // mean over the last max(3, ceil(len/3))
  double r_order = 0;            // exp(least-squares slope of log v_n vs n)
  long doubling_defect = 0;      // min_w (v_{w+2m} - 2 v_w)
  long doubling_constant = 0;    // C = max(0, max_w (2 v_w - v_{w+2m}))
  std::string to_json() const;
};

OrderReport estimate_orders(const std::vector<long>& v, std::size_t m);
OrderReport estimate_orders(const SolverTrace& trace, std::size_t m);

// Full-precision matrix product helper for the Newton path; records one
// m^3-class operation in the active cost ledger per call.
UltraMat mat_mul(const UltraMat& a, const UltraMat& b);

// Lift a residue inverse of `a` to an inverse of `a` at absolute precision
// `prec` by the quadratic iteration X <- X (2I - A X).
UltraMat lift_inverse(const UltraMat& a, long prec);

}  // namespace ub
