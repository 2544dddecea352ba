#include "ub/field.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ub/cost.hpp"

namespace ub {

namespace cost {
CostLedger*& active() {
  thread_local CostLedger* ledger = nullptr;
  return ledger;
}
}  // namespace cost

// ---------------------------------------------------------------------------
// FieldContext
// ---------------------------------------------------------------------------

static void check_prime(long p) {
  if (p < 2) throw error("residue characteristic must be a prime >= 2");
  for (long d = 2; d * d <= p; ++d)
    if (p % d == 0) throw error("residue characteristic must be prime");
}

FieldContext FieldContext::qp(long p) {
  check_prime(p);
  return {FieldKind::Padic, p};
}
FieldContext FieldContext::fpt(long p) {
  check_prime(p);
  return {FieldKind::Series, p};
}
FieldContext FieldContext::exact(long p) {
  check_prime(p);
  return {FieldKind::Exact, p};
}

// ---------------------------------------------------------------------------
// Valuation
// ---------------------------------------------------------------------------

long Valuation::bound() const {
  return infinite_ ? UltraScalar::kInfPrec : v_;
}

std::string Valuation::str() const {
  if (infinite_) return "+inf";
  if (lower_bound_) return ">= " + std::to_string(v_);
  return std::to_string(v_);
}

// ---------------------------------------------------------------------------
// Digit helpers
// ---------------------------------------------------------------------------

namespace {

mpz_class pow_p(long p, long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(p),
                static_cast<unsigned long>(e));
  return r;
}

// Little-endian base-p digits -> integer.
mpz_class digits_to_mpz(const std::vector<uint32_t>& d, long p) {
  mpz_class v = 0;
  for (auto it = d.rbegin(); it != d.rend(); ++it) {
    v *= p;
    v += *it;
  }
  return v;
}

std::vector<uint32_t> mpz_to_digits(mpz_class v, long p, long n) {
  std::vector<uint32_t> d(static_cast<size_t>(n), 0);
  for (long i = 0; i < n && v != 0; ++i) {
    mpz_class q, r;
    mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), v.get_mpz_t(),
                   static_cast<unsigned long>(p));
    d[static_cast<size_t>(i)] = static_cast<uint32_t>(r.get_ui());
    v = q;
  }
  return d;
}

// p-adic valuation of a nonzero integer.
long mpz_val(const mpz_class& n, long p) {
  mpz_class m = abs(n), q, r;
  long v = 0;
  for (;;) {
    mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t(),
                   static_cast<unsigned long>(p));
    if (r != 0) return v;
    m = q;
    ++v;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

UltraScalar UltraScalar::zero(const FieldContext& ctx, long abs_prec) {
  UltraScalar x;
  x.ctx_ = ctx;
  if (ctx.kind == FieldKind::Exact) {
    x.rat_ = 0;
    x.lo_ = kInfPrec;
    x.hi_ = kInfPrec;
  } else {
    x.lo_ = x.hi_ = abs_prec;
  }
  return x;
}

UltraScalar UltraScalar::from_mpz(const FieldContext& ctx, const mpz_class& n,
                                  long abs_prec) {
  UltraScalar x;
  x.ctx_ = ctx;
  if (ctx.kind == FieldKind::Exact) {
    x.rat_ = n;
    x.hi_ = kInfPrec;
    x.lo_ = (n == 0) ? kInfPrec : mpz_val(n, ctx.p);
    return x;
  }
  x.lo_ = 0;
  x.hi_ = abs_prec;
  if (abs_prec <= 0) {
    x.lo_ = x.hi_;
    return x;
  }
  if (ctx.kind == FieldKind::Padic) {
    mpz_class m = n % pow_p(ctx.p, abs_prec);
    if (m < 0) m += pow_p(ctx.p, abs_prec);
    x.digits_ = mpz_to_digits(m, ctx.p, abs_prec);
  } else {  // Series: an integer lands in the residue field, degree 0.
    long r = static_cast<long>(mpz_class(n % ctx.p).get_si());
    if (r < 0) r += ctx.p;
    x.digits_.assign(static_cast<size_t>(abs_prec), 0);
    x.digits_[0] = static_cast<uint32_t>(r);
  }
  x.normalize();
  return x;
}

UltraScalar UltraScalar::from_integer(const FieldContext& ctx, long long n,
                                      long abs_prec) {
  return from_mpz(ctx, mpz_class(static_cast<long>(n)), abs_prec);
}

UltraScalar UltraScalar::from_rational(const FieldContext& ctx,
                                       const mpq_class& q) {
  if (ctx.kind != FieldKind::Exact)
    throw error("from_rational requires the exact-oracle context");
  if (q != 0 && mpz_class(q.get_den() % ctx.p) == 0)
    throw error("exact-oracle element must have denominator coprime to p");
  UltraScalar x;
  x.ctx_ = ctx;
  x.rat_ = q;
  x.rat_.canonicalize();
  x.hi_ = kInfPrec;
  x.lo_ = (q == 0) ? kInfPrec : mpz_val(mpz_class(q.get_num()), ctx.p);
  return x;
}

UltraScalar UltraScalar::uniformizer_pow(const FieldContext& ctx, long k,
                                         long rel) {
  if (ctx.kind == FieldKind::Exact) {
    mpq_class q;
    if (k >= 0)
      q = mpq_class(pow_p(ctx.p, k));
    else
      q = mpq_class(1) / mpq_class(pow_p(ctx.p, -k));
    UltraScalar x;
    x.ctx_ = ctx;
    x.rat_ = q;
    x.hi_ = kInfPrec;
    x.lo_ = k;
    return x;
  }
  if (rel < 1) throw error("uniformizer_pow needs relative precision >= 1");
  UltraScalar x;
  x.ctx_ = ctx;
  x.lo_ = k;
  x.hi_ = k + rel;
  x.digits_.assign(static_cast<size_t>(rel), 0);
  x.digits_[0] = 1;
  return x;
}

UltraScalar UltraScalar::from_digits(const FieldContext& ctx, long lo,
                                     std::vector<uint32_t> digits) {
  if (ctx.kind == FieldKind::Exact)
    throw error("from_digits is for zealous contexts");
  UltraScalar x;
  x.ctx_ = ctx;
  x.lo_ = lo;
  x.hi_ = lo + static_cast<long>(digits.size());
  x.digits_ = std::move(digits);
  for (auto d : x.digits_)
    if (d >= static_cast<uint32_t>(ctx.p)) throw error("digit out of range");
  x.normalize();
  return x;
}

UltraScalar UltraScalar::sample_unit(const FieldContext& ctx, long prec,
                                     uint64_t seed) {
  if (ctx.kind == FieldKind::Exact)
    throw error("sample_unit is for zealous contexts");
  if (prec < 1) throw error("sample_unit needs precision >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> any(0, ctx.p - 1);
  std::uniform_int_distribution<long> unit(1, ctx.p - 1);
  std::vector<uint32_t> d(static_cast<size_t>(prec));
  d[0] = static_cast<uint32_t>(unit(rng));
  for (long i = 1; i < prec; ++i)
    d[static_cast<size_t>(i)] = static_cast<uint32_t>(any(rng));
  return from_digits(ctx, 0, std::move(d));
}

// ---------------------------------------------------------------------------
// Observers
// ---------------------------------------------------------------------------

bool UltraScalar::is_apparent_zero() const {
  if (is_exact_kind()) return rat_ == 0;
  return digits_.empty();
}

Valuation UltraScalar::valuation() const {
  if (is_exact_kind())
    return rat_ == 0 ? Valuation::infinity() : Valuation::exact(lo_);
  if (digits_.empty()) return Valuation::at_least(hi_);
  return Valuation::exact(lo_);
}

uint32_t UltraScalar::digit_at(long i) const {
  if (is_exact_kind()) {
    if (rat_ == 0) return 0;
    if (i < lo_) return 0;
    // Expand digits of rat_ / pi^lo up to position i.
    mpz_class num = rat_.get_num(), den = rat_.get_den();
    mpz_class pk = pow_p(ctx_.p, lo_ >= 0 ? lo_ : -lo_);
    if (lo_ >= 0)
      num /= pk;
    else
      num *= pk;
    // digits of the unit num/den, base p, positions 0 .. i-lo
    long n = i - lo_;
    mpz_class pmod = pow_p(ctx_.p, n + 1);
    mpz_class dinv;
    if (!mpz_invert(dinv.get_mpz_t(), den.get_mpz_t(), pmod.get_mpz_t()))
      throw error("denominator not invertible modulo p^k");
    mpz_class u = (num * dinv) % pmod;
    if (u < 0) u += pmod;
    if (ctx_.kind == FieldKind::Exact) {
      // Exact oracle digits follow the p-adic (carrying) convention.
      mpz_class q = u / pow_p(ctx_.p, n);
      return static_cast<uint32_t>(mpz_class(q % ctx_.p).get_ui());
    }
  }
  if (i < lo_) return 0;
  if (i >= hi_) throw error("digit beyond known precision");
  return digits_[static_cast<size_t>(i - lo_)];
}

uint32_t UltraScalar::residue() const {
  if (is_exact_kind()) {
    if (rat_ == 0) return 0;
    if (lo_ < 0) throw error("residue of an element outside O_K");
    return lo_ > 0 ? 0u : digit_at(0);
  }
  if (hi_ < 1) throw error("residue needs absolute precision >= 1");
  if (lo_ > 0 || digits_.empty()) return 0;
  if (lo_ < 0) throw error("residue of an element outside O_K");
  return digits_[0];
}

void UltraScalar::normalize() {
  size_t k = 0;
  while (k < digits_.size() && digits_[k] == 0) ++k;
  if (k == digits_.size()) {
    digits_.clear();
    lo_ = hi_;
    return;
  }
  if (k > 0) {
    digits_.erase(digits_.begin(), digits_.begin() + static_cast<long>(k));
    lo_ += static_cast<long>(k);
  }
}

void UltraScalar::check_same_context(const UltraScalar& x,
                                     const UltraScalar& y) {
  if (!(x.ctx_ == y.ctx_)) throw context_mismatch();
}

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

UltraScalar operator+(const UltraScalar& x, const UltraScalar& y) {
  UltraScalar::check_same_context(x, y);
  const FieldContext& ctx = x.ctx_;
  if (x.is_exact_kind()) return UltraScalar::from_rational(ctx, x.rat_ + y.rat_);

  long hi = std::min(x.hi_, y.hi_);
  long lo0 = std::min(x.lo_, y.lo_);
  if (hi <= lo0) return UltraScalar::zero(ctx, hi);

  UltraScalar r;
  r.ctx_ = ctx;
  r.lo_ = lo0;
  r.hi_ = hi;
  long n = hi - lo0;
  if (ctx.kind == FieldKind::Padic) {
    mpz_class xv = digits_to_mpz(x.digits_, ctx.p);
    mpz_class yv = digits_to_mpz(y.digits_, ctx.p);
    xv *= pow_p(ctx.p, x.lo_ - lo0);
    yv *= pow_p(ctx.p, y.lo_ - lo0);
    mpz_class s = (xv + yv) % pow_p(ctx.p, n);
    r.digits_ = mpz_to_digits(s, ctx.p, n);
  } else {
    r.digits_.assign(static_cast<size_t>(n), 0);
    for (long i = lo0; i < hi; ++i) {
      long d = 0;
      if (i >= x.lo_ && i < x.hi_) d += x.digits_[static_cast<size_t>(i - x.lo_)];
      if (i >= y.lo_ && i < y.hi_) d += y.digits_[static_cast<size_t>(i - y.lo_)];
      r.digits_[static_cast<size_t>(i - lo0)] = static_cast<uint32_t>(d % ctx.p);
    }
  }
  r.normalize();
  return r;
}

UltraScalar UltraScalar::operator-() const {
  if (is_exact_kind()) return from_rational(ctx_, -rat_);
  UltraScalar r = *this;
  if (digits_.empty()) return r;
  if (ctx_.kind == FieldKind::Padic) {
    mpz_class v = digits_to_mpz(digits_, ctx_.p);
    mpz_class m = pow_p(ctx_.p, rel());
    r.digits_ = mpz_to_digits(m - v, ctx_.p, rel());
  } else {
    for (auto& d : r.digits_)
      d = d == 0 ? 0u : static_cast<uint32_t>(ctx_.p - d);
  }
  r.normalize();  // digit0 != 0 is preserved, but keep the invariant honest
  return r;
}

UltraScalar operator-(const UltraScalar& x, const UltraScalar& y) {
  return x + (-y);
}

UltraScalar operator*(const UltraScalar& x, const UltraScalar& y) {
  UltraScalar::check_same_context(x, y);
  const FieldContext& ctx = x.ctx_;
  if (x.is_exact_kind()) {
    cost::record_mul(0);
    return UltraScalar::from_rational(ctx, x.rat_ * y.rat_);
  }
  // (P): [a,b) * [c,d) = [a+c, min(a+d, b+c))
  long lo = x.lo_ + y.lo_;
  long hi = std::min(x.lo_ + y.hi_, x.hi_ + y.lo_);
  long n = hi - lo;  // = min(rel x, rel y)
  cost::record_mul(std::max(x.rel(), y.rel()));
  if (n <= 0) return UltraScalar::zero(ctx, hi);

  UltraScalar r;
  r.ctx_ = ctx;
  r.lo_ = lo;
  r.hi_ = hi;
  if (ctx.kind == FieldKind::Padic) {
    mpz_class v = digits_to_mpz(x.digits_, ctx.p) * digits_to_mpz(y.digits_, ctx.p);
    v %= pow_p(ctx.p, n);
    r.digits_ = mpz_to_digits(v, ctx.p, n);
  } else {
    r.digits_.assign(static_cast<size_t>(n), 0);
    for (long i = 0; i < n; ++i) {
      unsigned long long acc = r.digits_[static_cast<size_t>(i)];
      long jmax = std::min<long>(i, static_cast<long>(x.digits_.size()) - 1);
      for (long j = 0; j <= jmax; ++j) {
        long k = i - j;
        if (k < static_cast<long>(y.digits_.size()))
          acc += 1ull * x.digits_[static_cast<size_t>(j)] *
                 y.digits_[static_cast<size_t>(k)];
      }
      r.digits_[static_cast<size_t>(i)] =
          static_cast<uint32_t>(acc % static_cast<unsigned long long>(ctx.p));
    }
  }
  r.normalize();
  return r;
}

UltraScalar operator/(const UltraScalar& x, const UltraScalar& y) {
  UltraScalar::check_same_context(x, y);
  const FieldContext& ctx = x.ctx_;
  if (x.is_exact_kind()) {
    if (y.rat_ == 0) throw apparent_zero_division(UltraScalar::kInfPrec);
    cost::record_div(0);
    return UltraScalar::from_rational(ctx, x.rat_ / y.rat_);
  }
  if (y.digits_.empty()) throw apparent_zero_division(y.hi_);
  // (P): [a,b) / [c,d) = [a-c, min(a+d-2c, b-c))
  long lo = x.lo_ - y.lo_;
  long hi = std::min(x.lo_ + y.hi_ - 2 * y.lo_, x.hi_ - y.lo_);
  long n = hi - lo;  // = min(rel x, rel y)
  cost::record_div(std::max(x.rel(), y.rel()));
  if (n <= 0 || x.digits_.empty()) return UltraScalar::zero(ctx, hi);

  UltraScalar r;
  r.ctx_ = ctx;
  r.lo_ = lo;
  r.hi_ = hi;
  if (ctx.kind == FieldKind::Padic) {
    mpz_class pmod = pow_p(ctx.p, n);
    mpz_class yv = digits_to_mpz(y.digits_, ctx.p) % pmod;
    mpz_class yinv;
    if (!mpz_invert(yinv.get_mpz_t(), yv.get_mpz_t(), pmod.get_mpz_t()))
      throw error("internal: unit part not invertible");
    mpz_class v = (digits_to_mpz(x.digits_, ctx.p) * yinv) % pmod;
    r.digits_ = mpz_to_digits(v, ctx.p, n);
  } else {
    // q_i = (x_i - sum_{j<i} q_j y_{i-j}) / y_0 over F_p
    long p = ctx.p;
    auto inv_mod_p = [p](long a) {
      long r0 = 1, base = a % p, e = p - 2;
      while (e) {
        if (e & 1) r0 = r0 * base % p;
        base = base * base % p;
        e >>= 1;
      }
      return r0;
    };
    long y0inv = inv_mod_p(y.digits_[0]);
    r.digits_.assign(static_cast<size_t>(n), 0);
    for (long i = 0; i < n; ++i) {
      long acc = i < static_cast<long>(x.digits_.size())
                     ? x.digits_[static_cast<size_t>(i)]
                     : 0;
      for (long j = 0; j < i; ++j) {
        long k = i - j;
        if (k < static_cast<long>(y.digits_.size()))
          acc -= static_cast<long>(r.digits_[static_cast<size_t>(j)]) *
                 y.digits_[static_cast<size_t>(k)] % p;
      }
      acc %= p;
      if (acc < 0) acc += p;
      r.digits_[static_cast<size_t>(i)] =
          static_cast<uint32_t>(acc * y0inv % p);
    }
  }
  r.normalize();
  return r;
}

// ---------------------------------------------------------------------------
// Precision changes
// ---------------------------------------------------------------------------

void UltraScalar::change_prec_inplace(long c) {
  if (is_exact_kind()) {
    if (c >= kInfPrec) return;
    // Truncate the exact value to its digit expansion below pi^c.
    if (rat_ == 0 || lo_ >= c) {
      rat_ = 0;
      lo_ = hi_ = kInfPrec;
      return;
    }
    mpq_class acc = 0;
    mpq_class pk;
    if (lo_ >= 0)
      pk = mpq_class(pow_p(ctx_.p, lo_));
    else
      pk = mpq_class(1) / mpq_class(pow_p(ctx_.p, -lo_));
    for (long i = lo_; i < c; ++i) {
      acc += mpq_class(static_cast<long>(digit_at(i))) * pk;
      pk *= ctx_.p;
    }
    *this = from_rational(ctx_, acc);
    return;
  }
  if (c >= hi_) {
    if (digits_.empty()) {
      // O(pi^lo) lifted with zero digits is indistinguishable from O(pi^c).
      lo_ = hi_ = c;
    } else {
      digits_.resize(static_cast<size_t>(c - lo_), 0);
      hi_ = c;
    }
    return;
  }
  if (c <= lo_) {
    digits_.clear();
    lo_ = hi_ = c;
    return;
  }
  digits_.resize(static_cast<size_t>(c - lo_));
  hi_ = c;
  normalize();
}

UltraScalar change_prec(const UltraScalar& x, long c) {
  UltraScalar r = x;
  r.change_prec_inplace(c);
  return r;
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

UltraScalar UltraScalar::to_exact() const {
  FieldContext ectx = FieldContext::exact(ctx_.p);
  if (is_exact_kind()) return *this;
  mpq_class acc = 0;
  mpq_class pk;
  if (lo_ >= 0)
    pk = mpq_class(pow_p(ctx_.p, lo_));
  else
    pk = mpq_class(1) / mpq_class(pow_p(ctx_.p, -lo_));
  for (auto d : digits_) {
    acc += mpq_class(static_cast<long>(d)) * pk;
    pk *= ctx_.p;
  }
  return from_rational(ectx, acc);
}

UltraScalar UltraScalar::to_zealous(const FieldContext& zctx, long c) const {
  if (!is_exact_kind()) throw error("to_zealous requires an exact element");
  if (zctx.kind == FieldKind::Exact) throw error("target context must be zealous");
  if (zctx.p != ctx_.p) throw context_mismatch();
  if (rat_ == 0 || lo_ >= c) return zero(zctx, c);
  if (zctx.kind == FieldKind::Series)
    throw error("exact rationals embed into Q_p only");
  std::vector<uint32_t> d(static_cast<size_t>(c - lo_));
  for (long i = lo_; i < c; ++i) d[static_cast<size_t>(i - lo_)] = digit_at(i);
  return from_digits(zctx, lo_, std::move(d));
}

bool UltraScalar::same_value(const UltraScalar& other) const {
  if (!(ctx_ == other.ctx_)) return false;
  if (is_exact_kind()) return rat_ == other.rat_;
  return lo_ == other.lo_ && hi_ == other.hi_ && digits_ == other.digits_;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string UltraScalar::str() const {
  std::ostringstream os;
  if (is_exact_kind()) {
    os << rat_;
    return os.str();
  }
  if (digits_.empty()) {
    os << "O(pi^" << hi_ << ")";
    return os.str();
  }
  os << "pi^" << lo_ << " * (";
  for (size_t i = 0; i < digits_.size(); ++i) {
    if (i) os << " + ";
    os << digits_[i];
    if (i == 1) os << "*pi";
    if (i > 1) os << "*pi^" << i;
  }
  os << ") + O(pi^" << hi_ << ")";
  return os.str();
}

std::string UltraScalar::to_json() const {
  nlohmann::json j;
  j["a"] = lo_;
  j["b"] = hi_;
  j["digits"] = digits_;
  return j.dump();
}

UltraScalar UltraScalar::from_json(const FieldContext& ctx,
                                   const std::string& js) {
  auto j = nlohmann::json::parse(js);
  long a = j.at("a").get<long>();
  long b = j.at("b").get<long>();
  auto digits = j.at("digits").get<std::vector<uint32_t>>();
  if (static_cast<long>(digits.size()) != b - a)
    throw error("scalar json: digit count does not match interval");
  UltraScalar x = from_digits(ctx, a, std::move(digits));
  if (x.digits_.empty()) return zero(ctx, b);
  return x;
}

}  // namespace ub
