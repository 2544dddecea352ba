#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ub/solve.hpp"

namespace ub {

// Dynamically-precise Broyden iteration: every intermediate is computed on a
// prescribed zealous interval, and (optionally) asserted against it.  The
// ideal mode consumes an oracle of true valuations v_0, v_1, ...; the reality
// mode predicts ahead with a growth exponent alpha and corrects once the true
// valuation is observed.

struct interval_violation : error {
  explicit interval_violation(const std::string& what) : error(what) {}
};

struct admissibility_error : error {
  explicit admissibility_error(const std::string& what) : error(what) {}
};

// Reality mode predicted too small a growth and the corrective budget was
// exhausted even after one recovery attempt.
struct under_prediction : error {
  explicit under_prediction(const std::string& what) : error(what) {}
};

struct PrecisionState {
  long n = 0;
  UltraVec x;     // on [0, v_n + vhat_{n+1})
  UltraMat binv;  // on [0, v_n), unimodular
  UltraVec f;     // on [v_n, v_n + vhat_{n+1})
  std::vector<long> v_history;

  long v_n() const { return v_history.back(); }
};

struct PrecisionPlan {
  double alpha = 2.0;
  std::size_t m = 1;
  std::vector<long> gap_history;     // |ceil(alpha v_n) - v_{n+1}| per iteration
  std::vector<double> ratio_history; // observed v_{n+1} / v_n
  double ratio_ewma = 0;
  bool ewma_primed = false;
  bool tuning_enabled = true;

  static PrecisionPlan defaults(std::size_t m);  // alpha = 2^(1/m)
};

// EWMA-based alpha update from the newly observed ratio v_next / v_n.
// Never returns alpha <= 1 and never below a ratio seen in the last 2m
// iterations; the first observation leaves alpha unchanged unless it is
// already exceeded.
PrecisionPlan tune_alpha(PrecisionPlan plan, long v_n, long v_next);

// One iteration with oracle-supplied true valuations v_{n+1}, v_{n+2}.
// Throws interval_violation when assert_intervals is set and a computed
// interval falls short of its annotation.
PrecisionState ideal_iteration(const PrecisionState& state, long v_next,
                               long v_next2, const PolySystem& sys,
                               const UltraScalar& t,
                               bool assert_intervals = true);

struct RealityStep {
  PrecisionState state;
  PrecisionPlan plan;
  long gap = 0;         // |ceil(alpha v_n) - v_{n+1}|
  bool recovered = false;
  bool exact_at_precision = false;  // f vanished even after recovery
};

RealityStep reality_iteration(const PrecisionState& state,
                              const PrecisionPlan& plan, const PolySystem& sys,
                              const UltraScalar& t,
                              bool assert_intervals = true);

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

enum class EngineMode { Ideal, Reality };

struct EngineConfig {
  long target_valuation = 1;  // N
  EngineMode mode = EngineMode::Reality;
  PrecisionPlan plan;  // plan.m is overwritten from the system
  long max_iterations = 128;
  bool assert_intervals = true;
  // Ideal mode: true valuations v_0, v_1, ...; computed by an internal
  // reference run when empty.
  std::vector<long> oracle_v;
};

struct EngineRow {
  long n = 0;
  long v_fn = 0;
  bool v_lower_bound = false;
  std::optional<long> val_step;
  std::optional<long> val_err;
  std::uint64_t mults = 0;   // scalar mults spent producing iterate n
  long interval_lo = 0;      // zealous interval of f_n
  long interval_hi = 0;
  double alpha = 0;
  long gap = 0;
  std::uint64_t ledger_mults = 0;  // cumulative
};

struct EngineResult {
  UltraVec root;
  std::vector<EngineRow> rows;
  Termination termination = Termination::MaxIterations;
  CostLedger ledger;
  PrecisionPlan plan;       // final tuning state
  double model_total = 0;   // ledger under the default mul model
  double eq_i_bound = 0;    // closed-form cost bound for comparison

  std::vector<long> v_sequence() const;
  // Header: n,v_fn,val_step,val_err,mults,interval_lo,interval_hi,alpha,gap,ledger_mults
  std::string to_csv() const;
};

// Closed-form cost bound (5m^2 + (3m^2+m)a^2 + L(1+a)^2 a^2) M(N/(a-1)) with
// L the evaluation mult count and M the default mul model.
double closed_form_cost_bound(const PolySystem& sys, double alpha, long n);

// x0 must have integral entries, residue f(x0) = 0, and a residue Jacobian
// invertible mod pi; throws admissibility_error otherwise.
void check_admissibility(const PolySystem& sys, const UltraScalar& t,
                         const UltraVec& x0);

EngineResult run_engine(const PolySystem& sys, const UltraScalar& t,
                        const UltraVec& x0, const EngineConfig& config);

}  // namespace ub
