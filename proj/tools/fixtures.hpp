#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ub/poly.hpp"

namespace ub::fixtures {

// Baked residue roots for the builtin families at p = 17, found once by the
// exhaustive search below and checked for an invertible residue Jacobian.
inline std::optional<std::vector<long>> initial_residues(
    const std::string& family) {
  if (family == "F1") return std::vector<long>{1, -1};
  if (family == "F2") return std::vector<long>{1, 0, -1};
  if (family == "F3") return std::vector<long>{1, 1, -1, -1};
  return std::nullopt;
}

// Brute-force residue root search over F_p^m; returns roots with invertible
// residue Jacobian.  Exponential in m, intended for desk-scale systems only.
inline std::vector<std::vector<long>> search_residue_roots(
    const PolySystem& sys, long p, std::size_t limit = 16) {
  const FieldContext ctx = FieldContext::qp(p);
  const UltraScalar t = UltraScalar::zero(ctx, 2);
  std::vector<std::vector<long>> found;
  std::vector<long> cand(sys.m, 0);
  while (true) {
    std::vector<UltraScalar> entries;
    for (long c : cand) entries.push_back(UltraScalar::from_integer(ctx, c, 2));
    UltraVec x(entries);
    UltraVec f = evaluate(sys, t, x);
    bool root = true;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i].digit_at(0) != 0) { root = false; break; }
    if (root && is_unimodular(jacobian(sys, t, x))) {
      found.push_back(cand);
      if (found.size() >= limit) break;
    }
    std::size_t i = 0;
    while (i < sys.m && ++cand[i] == p) cand[i++] = 0;
    if (i == sys.m) break;
  }
  return found;
}

}  // namespace ub::fixtures
