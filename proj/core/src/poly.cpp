#include "ub/poly.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ub {

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct Cursor {
  const std::string& s;
  long line;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool done() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
  [[noreturn]] void fail(const std::string& what) {
    throw parse_error(what, line, static_cast<long>(i) + 1);
  }
  long long integer() {
    skip_ws();
    std::size_t start = i;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
      fail("expected an integer");
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    return std::stoll(s.substr(start, i - start));
  }
};

// factor := <int> | x<i>[^<e>] | t[^<e>]
void parse_factor(Cursor& c, std::size_t m, long long& coeff,
                  std::vector<int>& exps, int& t_exp) {
  char ch = c.peek();
  if (ch == 'x') {
    ++c.i;
    long long idx = c.integer();
    if (idx < 1 || static_cast<std::size_t>(idx) > m)
      c.fail("undeclared variable x" + std::to_string(idx));
    int e = 1;
    if (c.peek() == '^') {
      ++c.i;
      long long ee = c.integer();
      if (ee < 1) c.fail("exponent must be >= 1");
      e = static_cast<int>(ee);
    }
    exps[static_cast<std::size_t>(idx - 1)] += e;
  } else if (ch == 't') {
    ++c.i;
    int e = 1;
    if (c.peek() == '^') {
      ++c.i;
      long long ee = c.integer();
      if (ee < 1) c.fail("exponent must be >= 1");
      e = static_cast<int>(ee);
    }
    t_exp += e;
  } else if (std::isdigit(static_cast<unsigned char>(ch))) {
    coeff *= c.integer();
  } else {
    c.fail("expected a factor (integer, x<i> or t)");
  }
}

Term parse_term(Cursor& c, std::size_t m, int sign) {
  Term t;
  t.coeff = sign;
  t.exps.assign(m, 0);
  for (;;) {
    parse_factor(c, m, t.coeff, t.exps, t.t_exp);
    if (c.peek() == '*') {
      ++c.i;
      continue;
    }
    break;
  }
  return t;
}

Poly parse_poly_line(const std::string& body, long line, std::size_t m) {
  Cursor c{body, line};
  Poly p;
  int sign = 1;
  if (c.peek() == '-') {
    ++c.i;
    sign = -1;
  } else if (c.peek() == '+') {
    ++c.i;
  }
  for (;;) {
    p.terms.push_back(parse_term(c, m, sign));
    if (c.done()) break;
    char ch = c.peek();
    if (ch == '+')
      sign = 1;
    else if (ch == '-')
      sign = -1;
    else
      c.fail("expected '+' or '-' between terms");
    ++c.i;
  }
  return p;
}

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

PolySystem parse_system(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  long lineno = 0;
  PolySystem sys;
  bool have_m = false;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = strip_comment(raw);
    if (blank(line)) continue;
    if (!have_m) {
      Cursor c{line, lineno};
      if (c.peek() != 'm') c.fail("expected 'm = <int>' first");
      ++c.i;
      if (c.peek() != '=') c.fail("expected '=' after m");
      ++c.i;
      long long m = c.integer();
      if (!c.done()) c.fail("trailing characters after dimension");
      if (m < 1) c.fail("dimension must be >= 1");
      sys.m = static_cast<std::size_t>(m);
      have_m = true;
      continue;
    }
    auto pos = line.find("poly:");
    if (pos == std::string::npos || !blank(line.substr(0, pos)))
      throw parse_error("expected 'poly: ...'", lineno, 1);
    sys.polys.push_back(parse_poly_line(line.substr(pos + 5), lineno, sys.m));
  }
  if (!have_m) throw parse_error("missing 'm = <int>'", lineno, 1);
  if (sys.polys.size() != sys.m)
    throw parse_error("system is not square: declared m = " +
                          std::to_string(sys.m) + " but found " +
                          std::to_string(sys.polys.size()) + " polynomials",
                      lineno, 1);
  return sys;
}

std::string print_system(const PolySystem& sys) {
  std::ostringstream os;
  os << "m = " << sys.m << "\n";
  for (const auto& p : sys.polys) {
    os << "poly:";
    for (std::size_t k = 0; k < p.terms.size(); ++k) {
      const Term& t = p.terms[k];
      long long c = t.coeff;
      if (k == 0)
        os << (c < 0 ? " -" : " ");
      else
        os << (c < 0 ? " - " : " + ");
      std::ostringstream factors;
      bool first = true;
      for (std::size_t j = 0; j < t.exps.size(); ++j) {
        if (t.exps[j] == 0) continue;
        if (!first) factors << " * ";
        factors << "x" << (j + 1);
        if (t.exps[j] > 1) factors << "^" << t.exps[j];
        first = false;
      }
      if (t.t_exp > 0) {
        if (!first) factors << " * ";
        factors << "t";
        if (t.t_exp > 1) factors << "^" << t.t_exp;
        first = false;
      }
      long long a = c < 0 ? -c : c;
      if (first)
        os << a;
      else if (a == 1)
        os << factors.str();
      else
        os << a << " * " << factors.str();
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Builtin families (systems of Section "Numerical data")
// ---------------------------------------------------------------------------

PolySystem builtin_family(const std::string& name) {
  const char* text = nullptr;
  if (name == "F1") {
    text =
        "m = 2\n"
        "poly: x1^2 - 2 * x1 + x2^2 - 2 * x2 - 2 - x1 * x2 * t - x1 * t^2\n"
        "poly: x1^2 + 2 * x1 + x2^2 + 2 * x2 - 2 - x1 * t\n";
  } else if (name == "F2") {
    text =
        "m = 3\n"
        "poly: x1^2 - 2 * x1 + x2^2 - 2 * x2 + x3^2 - 2 * x3 - 2 - t - t^2\n"
        "poly: x1^2 + 2 * x1 + x2^2 + 2 * x2 + x3^2 + 2 * x3 - 2 - t\n"
        "poly: 2 * x1^2 + x2^2 + x3^2 - 3 - t^2\n";
  } else if (name == "F3") {
    text =
        "m = 4\n"
        "poly: x1^2 - 2 * x1 + x2^2 - 2 * x2 + x3^2 - 2 * x3 + x4^2 - 2 * x4"
        " - 4 - t - t^2\n"
        "poly: x1^2 + 2 * x1 + x2^2 + 2 * x2 + x3^2 + 2 * x3 + x4^2 + 2 * x4"
        " - 4 - t\n"
        "poly: 2 * x1^2 + x2^2 + x3^2 + x4^2 - 5 - t^2\n"
        "poly: 2 * x1 * x2 + x2 * x3 - 2 * x3 * x4 + 2 * x4 * x1 + 3 - t^2\n";
  } else {
    throw error("unknown builtin family: " + name);
  }
  return parse_system(text);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

struct PowerTables {
  // tables[j][e] = x_j^e for e in [2, max]; t_table likewise for t.
  std::vector<std::vector<UltraScalar>> vars;
  std::vector<UltraScalar> t_pows;
  std::uint64_t mults = 0;

  const UltraScalar& var_pow(const UltraVec& x, std::size_t j, int e) const {
    return e == 1 ? x[j] : vars[j][static_cast<std::size_t>(e) - 2];
  }
  const UltraScalar& t_pow(const UltraScalar& t, int e) const {
    return e == 1 ? t : t_pows[static_cast<std::size_t>(e) - 2];
  }
};

PowerTables build_tables(const PolySystem& sys, const UltraScalar& t,
                         const UltraVec& x) {
  PowerTables pt;
  std::vector<int> var_max(sys.m, 1);
  int t_max = 1;
  for (const auto& p : sys.polys)
    for (const auto& term : p.terms) {
      for (std::size_t j = 0; j < sys.m; ++j)
        var_max[j] = std::max(var_max[j], term.exps[j]);
      t_max = std::max(t_max, term.t_exp);
    }
  pt.vars.resize(sys.m);
  for (std::size_t j = 0; j < sys.m; ++j) {
    UltraScalar acc = x[j];
    for (int e = 2; e <= var_max[j]; ++e) {
      acc = acc * x[j];
      pt.vars[j].push_back(acc);
      ++pt.mults;
    }
  }
  UltraScalar acc = t;
  for (int e = 2; e <= t_max; ++e) {
    acc = acc * t;
    pt.t_pows.push_back(acc);
    ++pt.mults;
  }
  return pt;
}

long working_abs_prec(const UltraScalar& t, const UltraVec& x) {
  long w = t.hi();
  for (std::size_t i = 0; i < x.size(); ++i) w = std::min(w, x[i].hi());
  return w;
}

UltraScalar eval_poly(const Poly& p, const UltraScalar& t, const UltraVec& x,
                      const PowerTables& pt, long w, std::uint64_t& mults) {
  const FieldContext& ctx = x.context();
  UltraScalar acc = UltraScalar::zero(ctx, w);
  for (const auto& term : p.terms) {
    UltraScalar v = UltraScalar::from_integer(ctx, term.coeff, w);
    for (std::size_t j = 0; j < term.exps.size(); ++j)
      if (term.exps[j] > 0) {
        v = v * pt.var_pow(x, j, term.exps[j]);
        ++mults;
      }
    if (term.t_exp > 0) {
      v = v * pt.t_pow(t, term.t_exp);
      ++mults;
    }
    acc = acc + v;
  }
  return acc;
}

}  // namespace

UltraVec evaluate(const PolySystem& sys, const UltraScalar& t,
                  const UltraVec& x, EvalCounter* counter) {
  if (x.size() != sys.m) throw dimension_mismatch();
  if (!(t.context() == x.context())) throw context_mismatch();
  PowerTables pt = build_tables(sys, t, x);
  long w = working_abs_prec(t, x);
  std::uint64_t mults = pt.mults;
  std::vector<UltraScalar> out;
  out.reserve(sys.m);
  for (const auto& p : sys.polys)
    out.push_back(eval_poly(p, t, x, pt, w, mults));
  if (counter) {
    counter->mults += mults;
    counter->evals += 1;
  }
  return UltraVec(std::move(out));
}

std::uint64_t expected_eval_mults(const PolySystem& sys) {
  std::vector<int> var_max(sys.m, 1);
  int t_max = 1;
  std::uint64_t term_mults = 0;
  for (const auto& p : sys.polys)
    for (const auto& term : p.terms) {
      for (std::size_t j = 0; j < sys.m; ++j) {
        var_max[j] = std::max(var_max[j], term.exps[j]);
        if (term.exps[j] > 0) ++term_mults;
      }
      t_max = std::max(t_max, term.t_exp);
      if (term.t_exp > 0) ++term_mults;
    }
  std::uint64_t table = 0;
  for (std::size_t j = 0; j < sys.m; ++j)
    table += static_cast<std::uint64_t>(std::max(var_max[j] - 1, 0));
  table += static_cast<std::uint64_t>(std::max(t_max - 1, 0));
  return table + term_mults;
}

UltraMat jacobian(const PolySystem& sys, const UltraScalar& t,
                  const UltraVec& x, EvalCounter* counter) {
  if (x.size() != sys.m) throw dimension_mismatch();
  if (!(t.context() == x.context())) throw context_mismatch();
  PowerTables pt = build_tables(sys, t, x);
  long w = working_abs_prec(t, x);
  std::uint64_t mults = pt.mults;
  UltraMat out(sys.m, sys.m, UltraScalar::zero(x.context(), w));
  for (std::size_t i = 0; i < sys.m; ++i)
    for (std::size_t j = 0; j < sys.m; ++j) {
      Poly d;
      for (const auto& term : sys.polys[i].terms) {
        if (term.exps[j] == 0) continue;
        Term dt = term;
        dt.coeff *= term.exps[j];
        dt.exps[j] -= 1;
        d.terms.push_back(dt);
      }
      if (!d.terms.empty()) out.at(i, j) = eval_poly(d, t, x, pt, w, mults);
    }
  if (counter) {
    counter->mults += mults;
    counter->evals += 1;
  }
  return out;
}

UltraMat divided_difference_matrix(const PolySystem& sys, const UltraScalar& t,
                                   const UltraVec& x, long k,
                                   EvalCounter* counter) {
  if (k < 1) throw error("divided-difference step valuation must be >= 1");
  UltraVec f0 = evaluate(sys, t, x, counter);
  const FieldContext& ctx = x.context();
  long w = working_abs_prec(t, x);
  if (ctx.kind != FieldKind::Exact && k >= w)
    throw apparent_zero_division(w);  // perturbation invisible at precision w
  UltraScalar step = UltraScalar::uniformizer_pow(
      ctx, k, ctx.kind == FieldKind::Exact ? 1 : std::max<long>(w - k, 1));
  UltraMat out(sys.m, sys.m, UltraScalar::zero(ctx, std::max<long>(w - k, 0)));
  for (std::size_t j = 0; j < sys.m; ++j) {
    UltraVec xj = x;
    xj[j] = xj[j] + step;
    UltraVec fj = evaluate(sys, t, xj, counter);
    for (std::size_t i = 0; i < sys.m; ++i)
      out.at(i, j) = (fj[i] - f0[i]) / step;
  }
  return out;
}

}  // namespace ub
