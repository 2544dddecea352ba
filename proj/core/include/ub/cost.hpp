#pragma once

#include <cstdint>
#include <map>

namespace ub {

// Scalar-multiplication accounting.  A CostScope installs a thread-local
// ledger; scalar mul/div and the matrix-product helper report into it.
// Buckets are keyed by the relative precision of the operands, so a ledger
// can be evaluated against any M(.) cost model afterwards.
struct CostLedger {
  std::map<long, std::uint64_t> muls_by_rel;
  std::map<long, std::uint64_t> divs_by_rel;
  std::uint64_t muls = 0;
  std::uint64_t divs = 0;
  std::uint64_t mat_mat_products = 0;  // m^3-class operations (Newton only)

  void clear() {
    muls_by_rel.clear();
    divs_by_rel.clear();
    muls = divs = mat_mat_products = 0;
  }

  // Total under a superadditive model M; div is charged 4 M(r) + r.
  template <class M>
  double model_cost(M&& model) const {
    double c = 0;
    for (auto& [r, n] : muls_by_rel) c += double(n) * model(r);
    for (auto& [r, n] : divs_by_rel) c += double(n) * (4 * model(r) + r);
    return c;
  }
};

namespace cost {

CostLedger*& active();

inline void record_mul(long rel) {
  if (auto* l = active()) {
    ++l->muls;
    ++l->muls_by_rel[rel];
  }
}
inline void record_div(long rel) {
  if (auto* l = active()) {
    ++l->divs;
    ++l->divs_by_rel[rel];
  }
}
inline void record_mat_mat() {
  if (auto* l = active()) ++l->mat_mat_products;
}

}  // namespace cost

class CostScope {
 public:
  explicit CostScope(CostLedger& ledger) : prev_(cost::active()) {
    cost::active() = &ledger;
  }
  ~CostScope() { cost::active() = prev_; }
  CostScope(const CostScope&) = delete;
  CostScope& operator=(const CostScope&) = delete;

 private:
  CostLedger* prev_;
};

// Default cost model M(N) = N * ceil(log2(N + 1)).
inline double default_mul_model(long n) {
  if (n <= 0) return 0;
  long lg = 0;
  while ((1L << lg) < n + 1) ++lg;
  return double(n) * double(lg);
}

}  // namespace ub
