#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace ub {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct context_mismatch : error {
  context_mismatch() : error("operands belong to different field contexts") {}
};

// Division (or inversion) of an element that is indistinguishable from zero
// at its current precision.  The caller must lift the divisor first.
struct apparent_zero_division : error {
  long abs_precision;
  explicit apparent_zero_division(long prec)
      : error("division by an element indistinguishable from 0 at precision " +
              std::to_string(prec)),
        abs_precision(prec) {}
};

struct dimension_mismatch : error {
  dimension_mismatch() : error("vector/matrix dimensions do not match") {}
};

struct singular_residue : error {
  singular_residue()
      : error("matrix is singular modulo the uniformizer "
              "(unimodularity assumption fails)") {}
};

// ---------------------------------------------------------------------------
// Field contexts
// ---------------------------------------------------------------------------

enum class FieldKind {
  Padic,   // Q_p, uniformizer pi = p, carries between digits
  Series,  // F_p[[t]], uniformizer pi = t, digit-wise arithmetic
  Exact,   // exact rationals with decidable valuation; testing oracle
};

struct FieldContext {
  FieldKind kind = FieldKind::Padic;
  long p = 2;  // residue characteristic (prime)

  bool operator==(const FieldContext&) const = default;

  static FieldContext qp(long p);
  static FieldContext fpt(long p);
  static FieldContext exact(long p);
};

// ---------------------------------------------------------------------------
// Valuation results: an exact integer, a lower bound ">= c" (apparent zero),
// or +infinity (true zero, exact backend only).
// ---------------------------------------------------------------------------

class Valuation {
 public:
  static Valuation exact(long v) { return Valuation(v, false, false); }
  static Valuation at_least(long c) { return Valuation(c, true, false); }
  static Valuation infinity() { return Valuation(0, false, true); }

  bool is_exact() const { return !lower_bound_ && !infinite_; }
  bool is_lower_bound() const { return lower_bound_; }
  bool is_infinite() const { return infinite_; }

  // The integer value (exact) or the bound c (lower bound).
  long value() const {
    if (infinite_) throw error("valuation is +infinity");
    return v_;
  }
  // Usable lower bound in either case (infinite maps to a huge sentinel).
  long bound() const;

  bool operator==(const Valuation&) const = default;
  std::string str() const;

 private:
  Valuation(long v, bool lb, bool inf) : v_(v), lower_bound_(lb), infinite_(inf) {}
  long v_;
  bool lower_bound_;
  bool infinite_;
};

// ---------------------------------------------------------------------------
// UltraScalar: one element of K under zealous arithmetic.
//
// Zealous kinds store the digits of pi^lo * (d0 + d1 pi + ...) over the
// interval [lo, hi); hi is the absolute precision.  Normalization invariant:
// digits[0] != 0 whenever any digit is known, so lo is the valuation; an
// all-zero knowledge state collapses to (lo == hi, no digits), the
// "apparent zero" O(pi^hi).
//
// The Exact kind stores an mpq with denominator coprime to p (so every digit
// and the valuation are decidable); it serves as the testing oracle.
// ---------------------------------------------------------------------------

class UltraScalar {
 public:
  static constexpr long kInfPrec = std::numeric_limits<long>::max() / 4;

  UltraScalar() = default;

  // -- constructors -----------------------------------------------------
  static UltraScalar zero(const FieldContext& ctx, long abs_prec);
  static UltraScalar from_integer(const FieldContext& ctx, long long n,
                                  long abs_prec);
  static UltraScalar from_mpz(const FieldContext& ctx, const mpz_class& n,
                              long abs_prec);
  // Exact backend only; denominator must be coprime to p.
  static UltraScalar from_rational(const FieldContext& ctx, const mpq_class& q);
  // pi^k with relative precision rel (interval [k, k+rel)).
  static UltraScalar uniformizer_pow(const FieldContext& ctx, long k, long rel);
  // Digits given explicitly, little-endian from pi^lo.
  static UltraScalar from_digits(const FieldContext& ctx, long lo,
                                 std::vector<uint32_t> digits);
  // Random unit on [0, prec), digits[0] != 0; deterministic in seed.
  static UltraScalar sample_unit(const FieldContext& ctx, long prec,
                                 uint64_t seed);

  // -- observers --------------------------------------------------------
  const FieldContext& context() const { return ctx_; }
  bool is_exact_kind() const { return ctx_.kind == FieldKind::Exact; }
  long lo() const { return lo_; }
  long hi() const { return hi_; }
  long rel() const { return hi_ - lo_; }
  bool is_apparent_zero() const;
  Valuation valuation() const;
  const std::vector<uint32_t>& digits() const { return digits_; }
  const mpq_class& rational() const { return rat_; }
  // Digit of pi^i; requires lo <= i < hi for zealous kinds (0 below lo).
  uint32_t digit_at(long i) const;
  // Residue-field image (digit of pi^0); requires valuation info mod pi.
  uint32_t residue() const;

  // -- arithmetic -------------------------------------------------------
  friend UltraScalar operator+(const UltraScalar& x, const UltraScalar& y);
  friend UltraScalar operator-(const UltraScalar& x, const UltraScalar& y);
  friend UltraScalar operator*(const UltraScalar& x, const UltraScalar& y);
  friend UltraScalar operator/(const UltraScalar& x, const UltraScalar& y);
  UltraScalar operator-() const;

  // -- precision --------------------------------------------------------
  // Copying variant.
  friend UltraScalar change_prec(const UltraScalar& x, long c);
  // Destructive variant.
  void change_prec_inplace(long c);

  // -- conversions (test plumbing) --------------------------------------
  // Zealous value as an exact element of the matching oracle context.
  UltraScalar to_exact() const;
  // Exact value truncated into a zealous context at absolute precision c.
  UltraScalar to_zealous(const FieldContext& zctx, long c) const;

  // -- serialization ----------------------------------------------------
  // pi^a * (d0 + d1*pi + ...) + O(pi^b)
  std::string str() const;
  std::string to_json() const;
  static UltraScalar from_json(const FieldContext& ctx, const std::string& js);

  bool same_value(const UltraScalar& other) const;  // interval + digits equal

 private:
  FieldContext ctx_;
  long lo_ = 0;
  long hi_ = 0;
  std::vector<uint32_t> digits_;  // zealous kinds, size hi-lo
  mpq_class rat_;                 // exact kind

  void normalize();
  static void check_same_context(const UltraScalar& x, const UltraScalar& y);
};

}  // namespace ub
