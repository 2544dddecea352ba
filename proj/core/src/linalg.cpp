#include "ub/linalg.hpp"

#include <algorithm>

#include <json.hpp>

namespace ub {

// ---------------------------------------------------------------------------
// UltraVec
// ---------------------------------------------------------------------------

UltraVec::UltraVec(std::vector<UltraScalar> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw error("empty vector");
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (!(entries_[i].context() == entries_[0].context()))
      throw context_mismatch();
}

UltraVec UltraVec::zero(const FieldContext& ctx, std::size_t m, long abs_prec) {
  return UltraVec(std::vector<UltraScalar>(m, UltraScalar::zero(ctx, abs_prec)));
}

UltraVec UltraVec::basis(const FieldContext& ctx, std::size_t m, std::size_t i,
                         long abs_prec) {
  UltraVec v = zero(ctx, m, abs_prec);
  v[i] = UltraScalar::from_integer(ctx, 1, abs_prec);
  return v;
}

const FieldContext& UltraVec::context() const { return entries_.at(0).context(); }

bool UltraVec::is_apparent_zero() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const UltraScalar& x) { return x.is_apparent_zero(); });
}

void UltraVec::change_prec_inplace(long c) {
  for (auto& e : entries_) e.change_prec_inplace(c);
}

UltraVec operator+(const UltraVec& a, const UltraVec& b) {
  if (a.size() != b.size()) throw dimension_mismatch();
  std::vector<UltraScalar> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] + b[i]);
  return UltraVec(std::move(out));
}

UltraVec operator-(const UltraVec& a, const UltraVec& b) {
  if (a.size() != b.size()) throw dimension_mismatch();
  std::vector<UltraScalar> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] - b[i]);
  return UltraVec(std::move(out));
}

UltraVec UltraVec::operator-() const {
  std::vector<UltraScalar> out;
  out.reserve(size());
  for (const auto& e : entries_) out.push_back(-e);
  return UltraVec(std::move(out));
}

std::string UltraVec::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries_) j.push_back(nlohmann::json::parse(e.to_json()));
  return j.dump();
}

// ---------------------------------------------------------------------------
// UltraMat
// ---------------------------------------------------------------------------

UltraMat::UltraMat(std::size_t rows, std::size_t cols, const UltraScalar& fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

UltraMat UltraMat::identity(const FieldContext& ctx, std::size_t m,
                            long abs_prec) {
  UltraMat a(m, m, UltraScalar::zero(ctx, abs_prec));
  for (std::size_t i = 0; i < m; ++i)
    a.at(i, i) = UltraScalar::from_integer(ctx, 1, abs_prec);
  return a;
}

const UltraScalar& UltraMat::at(std::size_t i, std::size_t j) const {
  return data_.at(i * cols_ + j);
}
UltraScalar& UltraMat::at(std::size_t i, std::size_t j) {
  return data_.at(i * cols_ + j);
}

const FieldContext& UltraMat::context() const { return data_.at(0).context(); }

void UltraMat::change_prec_inplace(long c) {
  for (auto& e : data_) e.change_prec_inplace(c);
}

UltraMat operator-(const UltraMat& a, const UltraMat& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw dimension_mismatch();
  UltraMat r = a;
  for (std::size_t i = 0; i < a.data_.size(); ++i)
    r.data_[i] = a.data_[i] - b.data_[i];
  return r;
}

std::string UltraMat::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < rows_; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < cols_; ++k)
      row.push_back(nlohmann::json::parse(at(i, k).to_json()));
    j.push_back(row);
  }
  return j.dump();
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

static Valuation min_val(Valuation acc, const Valuation& v) {
  if (v.is_infinite()) return acc;
  if (acc.is_infinite()) return v;
  if (v.is_exact() && (!acc.is_exact() ? v.value() <= acc.value()
                                       : v.value() < acc.value()))
    return v;
  if (!v.is_exact() && !acc.is_exact())
    return Valuation::at_least(std::min(acc.value(), v.value()));
  if (!v.is_exact() && acc.is_exact() && v.value() < acc.value())
    return Valuation::at_least(v.value());
  return acc;
}

Valuation vec_val(const UltraVec& v) {
  Valuation acc = Valuation::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) acc = min_val(acc, v[i].valuation());
  return acc;
}

Valuation mat_val(const UltraMat& a) {
  Valuation acc = Valuation::infinity();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      acc = min_val(acc, a.at(i, j).valuation());
  return acc;
}

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

UltraVec mat_vec(const UltraMat& a, const UltraVec& v) {
  if (a.cols() != v.size()) throw dimension_mismatch();
  std::vector<UltraScalar> out;
  out.reserve(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    UltraScalar acc = a.at(i, 0) * v[0];
    for (std::size_t j = 1; j < a.cols(); ++j) acc = acc + a.at(i, j) * v[j];
    out.push_back(acc);
  }
  return UltraVec(std::move(out));
}

UltraVec vec_mat(const UltraVec& u, const UltraMat& a) {
  if (a.rows() != u.size()) throw dimension_mismatch();
  std::vector<UltraScalar> out;
  out.reserve(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    UltraScalar acc = u[0] * a.at(0, j);
    for (std::size_t i = 1; i < a.rows(); ++i) acc = acc + u[i] * a.at(i, j);
    out.push_back(acc);
  }
  return UltraVec(std::move(out));
}

UltraScalar dot(const UltraVec& a, const UltraVec& b) {
  if (a.size() != b.size()) throw dimension_mismatch();
  UltraScalar acc = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

UltraMat rank_one(const UltraVec& a, const UltraVec& b) {
  UltraMat r(a.size(), b.size(), a[0] * b[0]);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (i || j) r.at(i, j) = a[i] * b[j];
  return r;
}

UltraVec scale(const UltraScalar& c, const UltraVec& v) {
  std::vector<UltraScalar> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(c * v[i]);
  return UltraVec(std::move(out));
}

// ---------------------------------------------------------------------------
// Residue linear algebra
// ---------------------------------------------------------------------------

namespace {

long inv_mod(long a, long p) {
  long r = 1, base = a % p, e = p - 2;
  while (e) {
    if (e & 1) r = r * base % p;
    base = base * base % p;
    e >>= 1;
  }
  return r;
}

// Gauss-Jordan over F_p with first-nonzero pivoting.
std::vector<std::vector<long>> residue_gauss_inverse(
    std::vector<std::vector<long>> a, long p) {
  const std::size_t m = a.size();
  std::vector<std::vector<long>> inv(m, std::vector<long>(m, 0));
  for (std::size_t i = 0; i < m; ++i) inv[i][i] = 1;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    while (piv < m && a[piv][col] == 0) ++piv;
    if (piv == m) throw singular_residue();
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    long f = inv_mod(a[col][col], p);
    for (std::size_t j = 0; j < m; ++j) {
      a[col][j] = a[col][j] * f % p;
      inv[col][j] = inv[col][j] * f % p;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (i == col || a[i][col] == 0) continue;
      long c = a[i][col];
      for (std::size_t j = 0; j < m; ++j) {
        a[i][j] = ((a[i][j] - c * a[col][j]) % p + p) % p;
        inv[i][j] = ((inv[i][j] - c * inv[col][j]) % p + p) % p;
      }
    }
  }
  return inv;
}

std::vector<std::vector<long>> residue_matrix(const UltraMat& a) {
  std::vector<std::vector<long>> r(a.rows(), std::vector<long>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      r[i][j] = a.at(i, j).residue();
  return r;
}

}  // namespace

UltraMat residue_inverse(const UltraMat& a) {
  if (a.rows() != a.cols()) throw dimension_mismatch();
  const FieldContext& ctx = a.context();
  auto inv = residue_gauss_inverse(residue_matrix(a), ctx.p);
  FieldContext out_ctx =
      ctx.kind == FieldKind::Exact ? FieldContext::exact(ctx.p) : ctx;
  UltraMat b(a.rows(), a.cols(), UltraScalar::zero(out_ctx, 1));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      b.at(i, j) = UltraScalar::from_integer(out_ctx, inv[i][j], 1);
  return b;
}

bool is_unimodular(const UltraMat& a) {
  auto v = mat_val(a);
  if (v.is_infinite() || v.is_lower_bound() || v.value() != 0) return false;
  try {
    residue_gauss_inverse(residue_matrix(a), a.context().p);
  } catch (const singular_residue&) {
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Update vector and Sherman-Morrison
// ---------------------------------------------------------------------------

UpdateVector choose_update_vector(const UltraVec& s, const UltraVec& check) {
  if (s.size() != check.size()) throw dimension_mismatch();
  if (s.is_apparent_zero())
    throw error("update vector undefined: step is apparently zero "
                "(f(x_n) = 0 at working precision)");
  Valuation sv = vec_val(s);
  bool fallback = false;
  for (std::size_t l = 0; l < s.size(); ++l) {
    auto v = s[l].valuation();
    if (!v.is_exact() || v.value() != sv.value()) continue;
    if (check[l].is_apparent_zero()) {
      fallback = true;  // Lemma 3.5 condition fails at this index
      continue;
    }
    // 1 at relative precision rel(s_l) + 1 so the quotient interval is
    // governed by s_l alone, per formula (P).
    UltraScalar one = UltraScalar::from_integer(
        s.context(), 1, std::min(s[l].rel() + 1, UltraScalar::kInfPrec));
    UltraScalar sl_inv = one / s[l];
    UltraVec u = UltraVec::zero(s.context(), s.size(), sl_inv.hi());
    u[l] = sl_inv;
    return UpdateVector{std::move(u), l + 1, fallback};
  }
  throw basin_violation(
      "no admissible update index: every entry attaining the minimal "
      "valuation has an apparently-zero invertibility check");
}

UltraMat sherman_morrison_update(const UltraMat& binv, const UltraVec& f_next,
                                 const UltraVec& u, const UltraVec& y) {
  UltraVec bf = mat_vec(binv, f_next);
  UltraVec rb = vec_mat(u, binv);  // u^t B^-1, row vector
  UltraScalar den = dot(rb, y);
  if (den.is_apparent_zero()) throw invertibility_failure();
  UltraMat num = rank_one(bf, rb);
  UltraMat out = binv;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out.at(i, j) = binv.at(i, j) - num.at(i, j) / den;
  return out;
}

}  // namespace ub
