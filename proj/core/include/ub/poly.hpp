#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ub/linalg.hpp"

namespace ub {

struct parse_error : error {
  long line, column;
  parse_error(const std::string& what, long line, long column)
      : error("parse error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
};

// One term: coeff * x1^e1 ... xm^em * t^et, integer coefficient.
struct Term {
  long long coeff = 0;
  std::vector<int> exps;  // length m
  int t_exp = 0;
};

struct Poly {
  std::vector<Term> terms;
};

// Square sparse polynomial system f : K^m -> K^m with parameter t.
struct PolySystem {
  std::size_t m = 0;
  std::vector<Poly> polys;  // size m
};

// Counts the scalar multiplications performed by evaluation, so the
// straight-line-program size L of the cost model can be measured.
struct EvalCounter {
  std::uint64_t mults = 0;
  std::uint64_t evals = 0;
};

// Grammar (one statement per line, '#' comments, whitespace-insensitive):
//   m = <int>
//   poly: <term> [+|- <term>]...
//   term := [<int> *] factors;  factor := x<i>[^<e>] | t[^<e>]
PolySystem parse_system(const std::string& text);
std::string print_system(const PolySystem& sys);  // round-trips through parse

PolySystem builtin_family(const std::string& name);  // F1 | F2 | F3

UltraVec evaluate(const PolySystem& sys, const UltraScalar& t,
                  const UltraVec& x, EvalCounter* counter = nullptr);

UltraMat jacobian(const PolySystem& sys, const UltraScalar& t,
                  const UltraVec& x, EvalCounter* counter = nullptr);

// Column j = (f(x + pi^k e_j) - f(x)) / pi^k; agrees with the Jacobian
// mod pi^k for polynomial f.
UltraMat divided_difference_matrix(const PolySystem& sys, const UltraScalar& t,
                                   const UltraVec& x, long k,
                                   EvalCounter* counter = nullptr);

// Expected multiplication count of evaluate() for one call, mirroring the
// deterministic power-table evaluation order.
std::uint64_t expected_eval_mults(const PolySystem& sys);

}  // namespace ub
