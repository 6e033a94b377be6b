#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace lagrangify {

enum class VarKind : std::uint8_t { Position, Velocity };

struct Var {
  std::size_t index = 0;
  VarKind kind = VarKind::Position;

  auto operator<=>(const Var&) const = default;
};

enum class Op : std::uint8_t { Const, Ref, Forcing, Sum, Product, Power, Sin, Cos, AbsDiff, SignDiff };

class Expr;

namespace detail {
struct Node {
  Op op = Op::Const;
  double value = 0.0;
  Var a{};
  Var b{};
  int exponent = 1;
  std::vector<Expr> args;
};
}  // namespace detail

// Immutable expression tree. Copies share nodes.
class Expr {
 public:
  Expr() : Expr(make(detail::Node{})) {}

  [[nodiscard]] Op op() const noexcept { return node_->op; }
  [[nodiscard]] double value() const noexcept { return node_->value; }
  [[nodiscard]] Var var() const noexcept { return node_->a; }
  [[nodiscard]] Var var2() const noexcept { return node_->b; }
  [[nodiscard]] std::size_t forcing_index() const noexcept { return node_->a.index; }
  [[nodiscard]] int exponent() const noexcept { return node_->exponent; }
  [[nodiscard]] const std::vector<Expr>& args() const noexcept { return node_->args; }
  [[nodiscard]] const Expr& arg(std::size_t i = 0) const { return node_->args.at(i); }

  [[nodiscard]] bool is_const() const noexcept { return op() == Op::Const; }
  [[nodiscard]] bool is_zero() const noexcept { return is_const() && value() == 0.0; }

  static Expr make(detail::Node n) { return Expr(std::make_shared<const detail::Node>(std::move(n))); }

 private:
  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::Node> node_;
};

// ---- construction ----------------------------------------------------------

inline Expr constant(double v) {
  detail::Node n;
  n.op = Op::Const;
  n.value = v == 0.0 ? 0.0 : v;
  return Expr::make(std::move(n));
}

inline Expr ref(Var v) {
  detail::Node n;
  n.op = Op::Ref;
  n.a = v;
  return Expr::make(std::move(n));
}

inline Expr pos(std::size_t i) { return ref({i, VarKind::Position}); }
inline Expr vel(std::size_t i) { return ref({i, VarKind::Velocity}); }

inline Expr forcing(std::size_t i) {
  detail::Node n;
  n.op = Op::Forcing;
  n.a = {i, VarKind::Position};
  return Expr::make(std::move(n));
}

inline Expr sum(std::vector<Expr> terms) {
  if (terms.empty()) return constant(0.0);
  if (terms.size() == 1) return terms.front();
  detail::Node n;
  n.op = Op::Sum;
  n.args = std::move(terms);
  return Expr::make(std::move(n));
}

inline Expr product(std::vector<Expr> factors) {
  if (factors.empty()) return constant(1.0);
  if (factors.size() == 1) return factors.front();
  detail::Node n;
  n.op = Op::Product;
  n.args = std::move(factors);
  return Expr::make(std::move(n));
}

inline Expr power(Expr base, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "power exponent must be >= 1");
  detail::Node n;
  n.op = Op::Power;
  n.exponent = k;
  n.args = {std::move(base)};
  return Expr::make(std::move(n));
}

inline Expr sin(Expr e) {
  detail::Node n;
  n.op = Op::Sin;
  n.args = {std::move(e)};
  return Expr::make(std::move(n));
}

inline Expr cos(Expr e) {
  detail::Node n;
  n.op = Op::Cos;
  n.args = {std::move(e)};
  return Expr::make(std::move(n));
}

inline Expr absdiff(Var a, Var b) {
  if (a.kind != b.kind) throw Error(ErrorCode::InvalidArgument, "abs difference needs variables of one kind");
  detail::Node n;
  n.op = Op::AbsDiff;
  n.a = a;
  n.b = b;
  return Expr::make(std::move(n));
}

// sgn(a - b); appears only as the derivative of an abs difference.
inline Expr signdiff(Var a, Var b) {
  if (a.kind != b.kind) throw Error(ErrorCode::InvalidArgument, "sign difference needs variables of one kind");
  detail::Node n;
  n.op = Op::SignDiff;
  n.a = a;
  n.b = b;
  return Expr::make(std::move(n));
}

inline Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
inline Expr operator-(const Expr& a) { return product({constant(-1.0), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return sum({a, -b}); }
inline Expr operator*(double c, const Expr& e) { return product({constant(c), e}); }

// ---- evaluation ------------------------------------------------------------

struct EvalContext {
  std::span<const double> x;
  std::span<const double> v;
  std::span<const double> f;  // empty when no forcing is bound
};

namespace detail {

inline double load(Var var, const EvalContext& ctx) {
  const auto& src = var.kind == VarKind::Position ? ctx.x : ctx.v;
  if (var.index >= src.size())
    throw Error(ErrorCode::IndexOutOfRange, "variable index " + std::to_string(var.index));
  return src[var.index];
}

inline double ipow(double b, int k) {
  double r = 1.0;
  for (; k > 0; k >>= 1, b *= b)
    if (k & 1) r *= b;
  return r;
}

inline double sgn(double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); }

}  // namespace detail

inline double eval(const Expr& e, const EvalContext& ctx) {
  switch (e.op()) {
    case Op::Const: return e.value();
    case Op::Ref: return detail::load(e.var(), ctx);
    case Op::Forcing:
      if (ctx.f.empty()) throw Error(ErrorCode::MissingForcing, "forcing value required");
      if (e.forcing_index() >= ctx.f.size())
        throw Error(ErrorCode::IndexOutOfRange, "forcing index " + std::to_string(e.forcing_index()));
      return ctx.f[e.forcing_index()];
    case Op::Sum: {
      double s = 0.0;
      for (const auto& a : e.args()) s += eval(a, ctx);
      return s;
    }
    case Op::Product: {
      double p = 1.0;
      for (const auto& a : e.args()) p *= eval(a, ctx);
      return p;
    }
    case Op::Power: return detail::ipow(eval(e.arg(), ctx), e.exponent());
    case Op::Sin: return std::sin(eval(e.arg(), ctx));
    case Op::Cos: return std::cos(eval(e.arg(), ctx));
    case Op::AbsDiff: return std::abs(detail::load(e.var(), ctx) - detail::load(e.var2(), ctx));
    case Op::SignDiff: return detail::sgn(detail::load(e.var(), ctx) - detail::load(e.var2(), ctx));
  }
  return 0.0;
}

// Flattened postfix program for hot loops (simulation, library evaluation).
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e) {
    int depth = 0;
    emit(e, depth);
  }

  [[nodiscard]] double operator()(const EvalContext& ctx) const {
    std::array<double, kStack> small{};
    std::vector<double> big;
    double* st = small.data();
    if (max_depth_ > static_cast<int>(kStack)) {
      big.resize(static_cast<std::size_t>(max_depth_));
      st = big.data();
    }
    int sp = 0;
    for (const auto& in : code_) {
      switch (in.op) {
        case Op::Const: st[sp++] = in.value; break;
        case Op::Ref: st[sp++] = detail::load(in.a, ctx); break;
        case Op::Forcing:
          if (ctx.f.empty()) throw Error(ErrorCode::MissingForcing, "forcing value required");
          if (in.a.index >= ctx.f.size()) throw Error(ErrorCode::IndexOutOfRange, "forcing index");
          st[sp++] = ctx.f[in.a.index];
          break;
        case Op::Sum: {
          sp -= in.n;
          double s = 0.0;
          for (int k = 0; k < in.n; ++k) s += st[sp + k];
          st[sp++] = s;
          break;
        }
        case Op::Product: {
          sp -= in.n;
          double p = 1.0;
          for (int k = 0; k < in.n; ++k) p *= st[sp + k];
          st[sp++] = p;
          break;
        }
        case Op::Power: st[sp - 1] = detail::ipow(st[sp - 1], in.n); break;
        case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case Op::AbsDiff: st[sp++] = std::abs(detail::load(in.a, ctx) - detail::load(in.b, ctx)); break;
        case Op::SignDiff: st[sp++] = detail::sgn(detail::load(in.a, ctx) - detail::load(in.b, ctx)); break;
      }
    }
    return sp ? st[0] : 0.0;
  }

 private:
  static constexpr std::size_t kStack = 64;
  struct Ins {
    Op op;
    int n = 0;
    double value = 0.0;
    Var a{};
    Var b{};
  };

  void emit(const Expr& e, int& depth) {
    switch (e.op()) {
      case Op::Sum:
      case Op::Product: {
        for (const auto& a : e.args()) emit(a, depth);
        code_.push_back({e.op(), static_cast<int>(e.args().size())});
        depth -= static_cast<int>(e.args().size()) - 1;
        return;
      }
      case Op::Power:
      case Op::Sin:
      case Op::Cos:
        emit(e.arg(), depth);
        code_.push_back({e.op(), e.exponent()});
        return;
      default:
        code_.push_back({e.op(), 0, e.value(), e.var(), e.var2()});
        max_depth_ = std::max(max_depth_, ++depth);
        return;
    }
  }

  std::vector<Ins> code_;
  int max_depth_ = 0;
};

// ---- rendering -------------------------------------------------------------

inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  if (std::abs(v) < 1e15 && v == std::round(v))
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace detail {

inline std::string var_name(Var v) { return (v.kind == VarKind::Position ? "x" : "v") + std::to_string(v.index); }

inline std::pair<double, std::vector<Expr>> split_coefficient(const Expr& e) {
  if (e.is_const()) return {e.value(), {}};
  if (e.op() == Op::Product && !e.args().empty()) {
    if (!e.arg(0).is_const()) return {1.0, e.args()};
    std::vector<Expr> rest(e.args().begin() + 1, e.args().end());
    return {e.arg(0).value(), std::move(rest)};
  }
  return {1.0, {e}};
}

std::string render_impl(const Expr& e);

inline std::string render_factor(const Expr& f) {
  const bool paren = f.op() == Op::Sum || f.op() == Op::Product || (f.is_const() && f.value() < 0);
  return paren ? "(" + render_impl(f) + ")" : render_impl(f);
}

inline std::string render_product(double coef, const std::vector<Expr>& rest) {
  if (rest.empty()) return format_number(coef);
  std::string out;
  if (coef == -1.0)
    out = "-";
  else if (coef != 1.0)
    out = format_number(coef) + "*";
  for (std::size_t k = 0; k < rest.size(); ++k) {
    if (k) out += "*";
    out += render_factor(rest[k]);
  }
  return out;
}

inline std::string render_impl(const Expr& e) {
  switch (e.op()) {
    case Op::Const: return format_number(e.value());
    case Op::Ref: return var_name(e.var());
    case Op::Forcing: return "f" + std::to_string(e.forcing_index());
    case Op::Sum: {
      std::string out;
      for (std::size_t k = 0; k < e.args().size(); ++k) {
        auto [c, rest] = split_coefficient(e.arg(k));
        if (k == 0) {
          out = render_product(c, rest);
        } else if (c < 0) {
          out += " - " + render_product(-c, rest);
        } else {
          out += " + " + render_product(c, rest);
        }
      }
      return out;
    }
    case Op::Product: {
      auto [c, rest] = split_coefficient(e);
      return render_product(c, rest);
    }
    case Op::Power: {
      const auto& b = e.arg();
      const bool paren = b.op() == Op::Sum || b.op() == Op::Product || b.op() == Op::Power ||
                         (b.is_const() && b.value() < 0);
      return (paren ? "(" + render_impl(b) + ")" : render_impl(b)) + "^" + std::to_string(e.exponent());
    }
    case Op::Sin: return "sin(" + render_impl(e.arg()) + ")";
    case Op::Cos: return "cos(" + render_impl(e.arg()) + ")";
    case Op::AbsDiff: return "abs(" + var_name(e.var()) + " - " + var_name(e.var2()) + ")";
    case Op::SignDiff: return "sgn(" + var_name(e.var()) + " - " + var_name(e.var2()) + ")";
  }
  return "?";
}

}  // namespace detail

// Canonical text form. Two trees that simplify to the same form render identically.
inline std::string render(const Expr& e) { return detail::render_impl(e); }

// ---- structure queries -----------------------------------------------------

struct Footprint {
  std::set<Var> vars;
  std::set<std::size_t> forcings;
  bool harmonic = false;
  bool composite = false;  // power or function of a sum
  int degree = 0;
};

namespace detail {
inline void footprint_impl(const Expr& e, Footprint& fp, int mult) {
  switch (e.op()) {
    case Op::Const: return;
    case Op::Ref: fp.vars.insert(e.var()); fp.degree = std::max(fp.degree, mult); return;
    case Op::Forcing: fp.forcings.insert(e.forcing_index()); return;
    case Op::Sum:
      fp.composite = true;
      for (const auto& a : e.args()) footprint_impl(a, fp, mult);
      return;
    case Op::Product: {
      int total = 0;
      for (const auto& a : e.args()) {
        Footprint sub;
        footprint_impl(a, sub, 1);
        total += sub.degree;
        fp.vars.insert(sub.vars.begin(), sub.vars.end());
        fp.forcings.insert(sub.forcings.begin(), sub.forcings.end());
        fp.harmonic |= sub.harmonic;
        fp.composite |= sub.composite;
      }
      fp.degree = std::max(fp.degree, total * mult);
      return;
    }
    case Op::Power: footprint_impl(e.arg(), fp, mult * e.exponent()); return;
    case Op::Sin:
    case Op::Cos:
      fp.harmonic = true;
      footprint_impl(e.arg(), fp, 1);
      return;
    case Op::AbsDiff:
    case Op::SignDiff:
      fp.composite = true;
      fp.vars.insert(e.var());
      fp.vars.insert(e.var2());
      fp.degree = std::max(fp.degree, mult);
      return;
  }
}
}  // namespace detail

inline Footprint footprint(const Expr& e) {
  Footprint fp;
  detail::footprint_impl(e, fp, 1);
  return fp;
}

inline bool depends_on(const Expr& e, Var v) { return footprint(e).vars.contains(v); }

// ---- simplification --------------------------------------------------------

namespace detail {

// Ordering: velocity terms, position monomials, harmonics, composites, forcing, constants.
struct SortKey {
  int rank = 0;
  std::vector<std::size_t> indices;
  int degree = 0;
  std::string text;

  auto operator<=>(const SortKey&) const = default;
};

inline SortKey sort_key(const Expr& e) {
  SortKey k;
  k.text = render_impl(e);
  if (e.is_const()) {
    k.rank = 9;
    return k;
  }
  const auto fp = footprint(e);
  bool any_pos = false, any_vel = false;
  for (const auto& v : fp.vars) {
    (v.kind == VarKind::Position ? any_pos : any_vel) = true;
    k.indices.push_back(v.index);
  }
  k.degree = fp.degree;
  if (!fp.forcings.empty())
    k.rank = 5;
  else if (any_vel && !any_pos && !fp.harmonic)
    k.rank = 0;
  else if (fp.harmonic)
    k.rank = 3;
  else if (fp.composite)
    k.rank = 4;
  else if (any_vel)
    k.rank = 6;
  else
    k.rank = 1;
  return k;
}

template <class T>
void sort_by_key(std::vector<T>& items, auto&& expr_of) {
  std::vector<std::pair<SortKey, T>> keyed;
  keyed.reserve(items.size());
  for (auto& it : items) keyed.emplace_back(sort_key(expr_of(it)), std::move(it));
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  items.clear();
  for (auto& [k, it] : keyed) items.push_back(std::move(it));
}

Expr simplify_impl(const Expr& e);
Expr simplify_sum(const std::vector<Expr>& raw);

inline Expr make_term(double c, std::vector<Expr> rest) {
  if (c == 0.0) return constant(0.0);
  if (rest.empty()) return constant(c);
  if (c != 1.0) rest.insert(rest.begin(), constant(c));
  return product(std::move(rest));
}

inline Expr simplify_product(const std::vector<Expr>& raw) {
  double coef = 1.0;
  std::vector<Expr> flat;
  auto absorb = [&](auto&& self, const Expr& f) -> void {
    if (f.is_const()) {
      coef *= f.value();
    } else if (f.op() == Op::Product) {
      for (const auto& g : f.args()) self(self, g);
    } else {
      flat.push_back(f);
    }
  };
  for (const auto& f : raw) absorb(absorb, simplify_impl(f));
  if (coef == 0.0) return constant(0.0);
  if (flat.size() == 1 && flat.front().op() == Op::Sum && coef != 1.0) {
    std::vector<Expr> scaled;
    for (const auto& t : flat.front().args()) scaled.push_back(product({constant(coef), t}));
    return simplify_sum(scaled);
  }

  // merge repeated bases into powers
  std::map<std::string, std::pair<Expr, int>> powers;
  std::vector<std::string> order;
  for (const auto& f : flat) {
    Expr base = f;
    int k = 1;
    if (f.op() == Op::Power) {
      base = f.arg();
      k = f.exponent();
    }
    auto key = render_impl(base);
    auto it = powers.find(key);
    if (it == powers.end()) {
      powers.emplace(key, std::make_pair(base, k));
      order.push_back(key);
    } else {
      it->second.second += k;
    }
  }
  std::vector<Expr> factors;
  for (const auto& key : order) {
    const auto& [base, k] = powers.at(key);
    factors.push_back(k == 1 ? base : power(base, k));
  }
  sort_by_key(factors, [](const Expr& x) -> const Expr& { return x; });
  return make_term(coef, std::move(factors));
}

inline Expr simplify_sum(const std::vector<Expr>& raw) {
  double konst = 0.0;
  std::map<std::string, std::pair<double, std::vector<Expr>>> terms;
  std::vector<std::string> order;
  auto absorb = [&](auto&& self, const Expr& t) -> void {
    if (t.is_const()) {
      konst += t.value();
      return;
    }
    if (t.op() == Op::Sum) {
      for (const auto& g : t.args()) self(self, g);
      return;
    }
    auto [c, rest] = split_coefficient(t);
    auto key = render_impl(product(rest));
    auto it = terms.find(key);
    if (it == terms.end()) {
      terms.emplace(key, std::make_pair(c, std::move(rest)));
      order.push_back(key);
    } else {
      it->second.first += c;
    }
  };
  for (const auto& t : raw) absorb(absorb, simplify_impl(t));

  std::vector<Expr> out;
  for (const auto& key : order) {
    auto& [c, rest] = terms.at(key);
    if (c != 0.0) out.push_back(make_term(c, rest));
  }
  sort_by_key(out, [](const Expr& x) -> const Expr& { return x; });
  if (konst != 0.0) out.push_back(constant(konst));
  if (out.empty()) return constant(0.0);
  // lead with a positive term when one exists: "x1 - x0" rather than "-x0 + x1"
  if (split_coefficient(out.front()).first < 0) {
    auto it = std::find_if(out.begin(), out.end(), [](const Expr& t) { return split_coefficient(t).first > 0; });
    if (it != out.end()) std::rotate(out.begin(), it, it + 1);
  }
  return sum(std::move(out));
}

inline Expr simplify_power(const Expr& base_raw, int k) {
  Expr base = simplify_impl(base_raw);
  if (k == 1) return base;
  if (base.is_const()) return constant(ipow(base.value(), k));
  if (base.op() == Op::Power) return simplify_power(base.arg(), base.exponent() * k);
  if (base.op() == Op::Product) {
    std::vector<Expr> fs;
    for (const auto& f : base.args()) fs.push_back(power(f, k));
    return simplify_product(fs);
  }
  return power(base, k);
}

inline Expr simplify_impl(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
    case Op::Ref:
    case Op::Forcing:
      return e;
    case Op::Sum: return simplify_sum(e.args());
    case Op::Product: return simplify_product(e.args());
    case Op::Power: return simplify_power(e.arg(), e.exponent());
    case Op::Sin:
    case Op::Cos: {
      auto a = simplify_impl(e.arg());
      if (a.is_const()) return constant(e.op() == Op::Sin ? std::sin(a.value()) : std::cos(a.value()));
      return e.op() == Op::Sin ? sin(a) : cos(a);
    }
    case Op::AbsDiff:
    case Op::SignDiff:
      if (e.var() == e.var2()) return constant(0.0);
      return e;
  }
  return e;
}

}  // namespace detail

inline Expr simplify(const Expr& e) { return detail::simplify_impl(e); }

// ---- differentiation -------------------------------------------------------

namespace detail {
inline Expr partial_impl(const Expr& e, Var wrt) {
  switch (e.op()) {
    case Op::Const:
    case Op::Forcing:
    case Op::SignDiff:
      return constant(0.0);
    case Op::Ref: return constant(e.var() == wrt ? 1.0 : 0.0);
    case Op::Sum: {
      std::vector<Expr> ts;
      for (const auto& a : e.args()) ts.push_back(partial_impl(a, wrt));
      return sum(std::move(ts));
    }
    case Op::Product: {
      std::vector<Expr> ts;
      for (std::size_t k = 0; k < e.args().size(); ++k) {
        auto dk = partial_impl(e.arg(k), wrt);
        if (dk.is_zero()) continue;
        std::vector<Expr> fs = e.args();
        fs[k] = dk;
        ts.push_back(product(std::move(fs)));
      }
      return sum(std::move(ts));
    }
    case Op::Power: {
      auto db = partial_impl(e.arg(), wrt);
      if (db.is_zero()) return constant(0.0);
      const int k = e.exponent();
      if (k == 1) return db;
      return product({constant(k), k == 2 ? e.arg() : power(e.arg(), k - 1), db});
    }
    case Op::Sin: {
      auto da = partial_impl(e.arg(), wrt);
      if (da.is_zero()) return constant(0.0);
      return product({cos(e.arg()), da});
    }
    case Op::Cos: {
      auto da = partial_impl(e.arg(), wrt);
      if (da.is_zero()) return constant(0.0);
      return product({constant(-1.0), sin(e.arg()), da});
    }
    case Op::AbsDiff:
      if (wrt == e.var()) return signdiff(e.var(), e.var2());
      if (wrt == e.var2()) return -signdiff(e.var(), e.var2());
      return constant(0.0);
  }
  return constant(0.0);
}
}  // namespace detail

// Analytic partial derivative, simplified.
inline Expr partial(const Expr& e, Var wrt) { return simplify(detail::partial_impl(e, wrt)); }

// ---- JSON tree format ------------------------------------------------------

namespace detail {
inline nlohmann::json var_json(Var v) {
  return {{"kind", v.kind == VarKind::Position ? "x" : "v"}, {"index", v.index}};
}

inline Var var_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "x" && kind != "v") throw Error(ErrorCode::ParseError, "variable kind must be x or v");
  return {j.at("index").get<std::size_t>(), kind == "x" ? VarKind::Position : VarKind::Velocity};
}
}  // namespace detail

inline nlohmann::json to_json(const Expr& e) {
  using nlohmann::json;
  switch (e.op()) {
    case Op::Const: return {{"op", "const"}, {"value", e.value()}};
    case Op::Ref: return {{"op", "var"}, {"var", detail::var_json(e.var())}};
    case Op::Forcing: return {{"op", "forcing"}, {"index", e.forcing_index()}};
    case Op::Sum:
    case Op::Product: {
      json args = json::array();
      for (const auto& a : e.args()) args.push_back(to_json(a));
      return {{"op", e.op() == Op::Sum ? "sum" : "product"}, {"args", args}};
    }
    case Op::Power: return {{"op", "power"}, {"exponent", e.exponent()}, {"base", to_json(e.arg())}};
    case Op::Sin: return {{"op", "sin"}, {"arg", to_json(e.arg())}};
    case Op::Cos: return {{"op", "cos"}, {"arg", to_json(e.arg())}};
    case Op::AbsDiff:
    case Op::SignDiff:
      return {{"op", e.op() == Op::AbsDiff ? "absdiff" : "sgndiff"},
              {"a", detail::var_json(e.var())},
              {"b", detail::var_json(e.var2())}};
  }
  return {};
}

inline Expr expr_from_json(const nlohmann::json& j) {
  try {
    const auto op = j.at("op").get<std::string>();
    if (op == "const") return constant(j.at("value").get<double>());
    if (op == "var") return ref(detail::var_from_json(j.at("var")));
    if (op == "forcing") return forcing(j.at("index").get<std::size_t>());
    if (op == "sum" || op == "product") {
      std::vector<Expr> args;
      for (const auto& a : j.at("args")) args.push_back(expr_from_json(a));
      if (args.size() < 2) throw Error(ErrorCode::ParseError, op + " needs at least two arguments");
      return op == "sum" ? sum(std::move(args)) : product(std::move(args));
    }
    if (op == "power") {
      const int k = j.at("exponent").get<int>();
      if (k < 1) throw Error(ErrorCode::ParseError, "power exponent must be >= 1");
      return power(expr_from_json(j.at("base")), k);
    }
    if (op == "sin") return sin(expr_from_json(j.at("arg")));
    if (op == "cos") return cos(expr_from_json(j.at("arg")));
    if (op == "absdiff" || op == "sgndiff") {
      const auto a = detail::var_from_json(j.at("a"));
      const auto b = detail::var_from_json(j.at("b"));
      if (a.kind != b.kind) throw Error(ErrorCode::ParseError, "difference of mixed kinds");
      return op == "absdiff" ? absdiff(a, b) : signdiff(a, b);
    }
    throw Error(ErrorCode::ParseError, "unknown node '" + op + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, ex.what());
  }
}

}  // namespace lagrangify
