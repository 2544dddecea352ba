#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ub/field.hpp"

namespace ub {

// Column vectors and square matrices over UltraScalar.  The norm is defined
// by the minimal valuation over the entries; for matrices this equals the
// induced operator norm.

class UltraVec {
 public:
  UltraVec() = default;
  explicit UltraVec(std::vector<UltraScalar> entries);
  static UltraVec zero(const FieldContext& ctx, std::size_t m, long abs_prec);
  static UltraVec basis(const FieldContext& ctx, std::size_t m, std::size_t i,
                        long abs_prec);  // e_i, 0-based i

  std::size_t size() const { return entries_.size(); }
  const UltraScalar& operator[](std::size_t i) const { return entries_[i]; }
  UltraScalar& operator[](std::size_t i) { return entries_[i]; }
  const FieldContext& context() const;

  bool is_apparent_zero() const;
  void change_prec_inplace(long c);
  std::string to_json() const;

  friend UltraVec operator+(const UltraVec& a, const UltraVec& b);
  friend UltraVec operator-(const UltraVec& a, const UltraVec& b);
  UltraVec operator-() const;

 private:
  std::vector<UltraScalar> entries_;
};

class UltraMat {
 public:
  UltraMat() = default;
  UltraMat(std::size_t rows, std::size_t cols, const UltraScalar& fill);
  static UltraMat identity(const FieldContext& ctx, std::size_t m,
                           long abs_prec);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const UltraScalar& at(std::size_t i, std::size_t j) const;
  UltraScalar& at(std::size_t i, std::size_t j);
  const FieldContext& context() const;

  void change_prec_inplace(long c);
  std::string to_json() const;  // row-major

  friend UltraMat operator-(const UltraMat& a, const UltraMat& b);

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<UltraScalar> data_;  // row-major
};

// -- norms ------------------------------------------------------------------
Valuation vec_val(const UltraVec& v);
Valuation mat_val(const UltraMat& a);

// -- products ---------------------------------------------------------------
UltraVec mat_vec(const UltraMat& a, const UltraVec& v);
// Row vector u^t * A, returned as an UltraVec of length cols.
UltraVec vec_mat(const UltraVec& u, const UltraMat& a);
UltraScalar dot(const UltraVec& a, const UltraVec& b);
UltraMat rank_one(const UltraVec& a, const UltraVec& b);  // a * b^t
UltraVec scale(const UltraScalar& c, const UltraVec& v);

// -- residue linear algebra -------------------------------------------------
// Inverse of A mod pi; entries of the result live on [0, 1).
// Requires val(A) >= 0 and absolute precision >= 1 on every entry.
UltraMat residue_inverse(const UltraMat& a);

bool is_unimodular(const UltraMat& a);

// The iteration failed outside the guaranteed basin of convergence.
struct basin_violation : error {
  explicit basin_violation(const std::string& what) : error(what) {}
};

// Raised when the Sherman-Morrison denominator is indistinguishable from 0.
struct invertibility_failure : error {
  invertibility_failure()
      : error("rank-one update denominator is apparently zero; "
              "updated B is not invertible at this precision") {}
};

// Update-vector selection, Eq. u = s_l^{-1} e_l with l the smallest index
// attaining val(s).  `check` is the vector whose l-th entry must be nonzero
// for the subsequent inverse update to exist; if it vanishes apparently, the
// next index attaining the minimum is tried (diagnostic recorded in the
// result).  Returns (u, l) with l reported 1-based.
struct UpdateVector {
  UltraVec u;
  std::size_t index_1based;
  bool used_fallback;
};
UpdateVector choose_update_vector(const UltraVec& s, const UltraVec& check);

// B_new^-1 = Binv - (Binv f_next) (u^t Binv) / (u^t Binv y).
UltraMat sherman_morrison_update(const UltraMat& binv, const UltraVec& f_next,
                                 const UltraVec& u, const UltraVec& y);

}  // namespace ub
