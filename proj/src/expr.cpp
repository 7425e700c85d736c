#include "ivla/expr.hpp"

#include <charconv>
#include <stdexcept>

#include "ivla/error.hpp"

namespace ivla {

namespace {

Expr make(ExprKind kind, Expr lhs = nullptr, Expr rhs = nullptr,
          std::string name = {}, double scalar = 1.0) {
  auto node = std::make_shared<ExprNode>();
  node->kind = kind;
  node->name = std::move(name);
  node->scalar = scalar;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

std::string format_scalar(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::logic_error("scalar formatting failed");
  return std::string(buf, end);
}

bool is_sum(const Expr& e) {
  return e->kind == ExprKind::Add || e->kind == ExprKind::Sub;
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e->kind) {
    case ExprKind::Var:
      out += e->name;
      return;
    case ExprKind::Add:
    case ExprKind::Sub:
      print(e->lhs, out);
      out += e->kind == ExprKind::Add ? " + " : " - ";
      print_wrapped(e->rhs, is_sum(e->rhs), out);
      return;
    case ExprKind::Mul:
      print_wrapped(e->lhs, is_sum(e->lhs), out);
      out += '*';
      print_wrapped(e->rhs,
                    is_sum(e->rhs) || e->rhs->kind == ExprKind::Mul ||
                        e->rhs->kind == ExprKind::Scale,
                    out);
      return;
    case ExprKind::Scale:
      out += format_scalar(e->scalar);
      out += '*';
      print_wrapped(e->lhs,
                    is_sum(e->lhs) || e->lhs->kind == ExprKind::Mul ||
                        e->lhs->kind == ExprKind::Scale,
                    out);
      return;
    case ExprKind::Transpose: {
      const auto k = e->lhs->kind;
      print_wrapped(e->lhs,
                    !(k == ExprKind::Var || k == ExprKind::Transpose ||
                      k == ExprKind::Inverse),
                    out);
      out += '\'';
      return;
    }
    case ExprKind::Inverse:
      out += "inv(";
      print(e->lhs, out);
      out += ')';
      return;
  }
}

template <class S>
struct DimOps;

template <>
struct DimOps<Shape> {
  static std::string dim(std::size_t d) { return std::to_string(d); }
};

template <>
struct DimOps<SymbolicShape> {
  static const std::string& dim(const std::string& d) { return d; }
};

template <class S, class M>
S infer(const Expr& e, const M& shapes) {
  auto fail = [&](const std::string& why) -> S {
    throw ShapeError(why + " in '" + to_string(e) + "'");
  };
  auto fmt = [](const S& s) {
    return "(" + std::string(DimOps<S>::dim(s.rows)) + "x" +
           std::string(DimOps<S>::dim(s.cols)) + ")";
  };
  switch (e->kind) {
    case ExprKind::Var: {
      auto it = shapes.find(e->name);
      if (it == shapes.end()) return fail("undefined matrix '" + e->name + "'");
      return it->second;
    }
    case ExprKind::Add:
    case ExprKind::Sub: {
      S a = infer<S>(e->lhs, shapes), b = infer<S>(e->rhs, shapes);
      if (!(a == b)) {
        return fail("operand shapes " + fmt(a) + " and " + fmt(b) +
                    " differ");
      }
      return a;
    }
    case ExprKind::Mul: {
      S a = infer<S>(e->lhs, shapes), b = infer<S>(e->rhs, shapes);
      if (!(a.cols == b.rows)) {
        return fail("product of " + fmt(a) + " and " + fmt(b) +
                    " does not conform");
      }
      return S{a.rows, b.cols};
    }
    case ExprKind::Scale:
      return infer<S>(e->lhs, shapes);
    case ExprKind::Transpose: {
      S a = infer<S>(e->lhs, shapes);
      return S{a.cols, a.rows};
    }
    case ExprKind::Inverse: {
      S a = infer<S>(e->lhs, shapes);
      if (!(a.rows == a.cols)) {
        return fail("inverse of non-square " + fmt(a));
      }
      return a;
    }
  }
  return fail("unknown node");
}

}  // namespace

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + ")";
}

Expr var(std::string name) {
  return make(ExprKind::Var, nullptr, nullptr, std::move(name));
}
Expr add(Expr a, Expr b) {
  return make(ExprKind::Add, std::move(a), std::move(b));
}
Expr sub(Expr a, Expr b) {
  return make(ExprKind::Sub, std::move(a), std::move(b));
}
Expr mul(Expr a, Expr b) {
  return make(ExprKind::Mul, std::move(a), std::move(b));
}
Expr scale(double lambda, Expr e) {
  return make(ExprKind::Scale, std::move(e), nullptr, {}, lambda);
}
Expr transpose(Expr e) { return make(ExprKind::Transpose, std::move(e)); }
Expr inverse(Expr e) { return make(ExprKind::Inverse, std::move(e)); }

Expr mul_chain(const std::vector<Expr>& factors) {
  if (factors.empty()) throw std::invalid_argument("mul_chain: no factors");
  Expr acc = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) acc = mul(acc, factors[i]);
  return acc;
}

Expr add_all(const std::vector<Expr>& terms) {
  if (terms.empty()) throw std::invalid_argument("add_all: no terms");
  Expr acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

bool is_var(const Expr& e) { return e->kind == ExprKind::Var; }
bool is_var(const Expr& e, const std::string& name) {
  return e->kind == ExprKind::Var && e->name == name;
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::Var:
      return a->name == b->name;
    case ExprKind::Scale:
      return a->scalar == b->scalar && structurally_equal(a->lhs, b->lhs);
    case ExprKind::Transpose:
    case ExprKind::Inverse:
      return structurally_equal(a->lhs, b->lhs);
    default:
      return structurally_equal(a->lhs, b->lhs) &&
             structurally_equal(a->rhs, b->rhs);
  }
}

Shape infer_shape(const Expr& e, const ShapeMap& shapes) {
  return infer<Shape>(e, shapes);
}

SymbolicShape infer_shape(const Expr& e, const SymbolicShapeMap& shapes) {
  return infer<SymbolicShape>(e, shapes);
}

Expr transposed(const Expr& e) {
  switch (e->kind) {
    case ExprKind::Var:
      return transpose(e);
    case ExprKind::Transpose:
      return e->lhs;
    case ExprKind::Add:
      return add(transposed(e->lhs), transposed(e->rhs));
    case ExprKind::Sub:
      return sub(transposed(e->lhs), transposed(e->rhs));
    case ExprKind::Mul:
      return mul(transposed(e->rhs), transposed(e->lhs));
    case ExprKind::Scale:
      return scale(e->scalar, transposed(e->lhs));
    case ExprKind::Inverse:
      return inverse(transposed(e->lhs));
  }
  return transpose(e);
}

Expr normalize(const Expr& e) {
  switch (e->kind) {
    case ExprKind::Var:
      return e;
    case ExprKind::Transpose: {
      // Transposes of leaves stay; everything else is pushed down.
      if (e->lhs->kind == ExprKind::Var) return e;
      return normalize(transposed(e->lhs));
    }
    case ExprKind::Add:
    case ExprKind::Sub: {
      Expr a = normalize(e->lhs), b = normalize(e->rhs);
      return e->kind == ExprKind::Add ? add(a, b) : sub(a, b);
    }
    case ExprKind::Inverse:
      return inverse(normalize(e->lhs));
    case ExprKind::Scale: {
      Expr inner = normalize(e->lhs);
      double s = e->scalar;
      if (inner->kind == ExprKind::Scale) {
        s *= inner->scalar;
        inner = inner->lhs;
      }
      return s == 1.0 ? inner : scale(s, inner);
    }
    case ExprKind::Mul: {
      Expr a = normalize(e->lhs), b = normalize(e->rhs);
      double s = 1.0;
      if (a->kind == ExprKind::Scale) {
        s *= a->scalar;
        a = a->lhs;
      }
      if (b->kind == ExprKind::Scale) {
        s *= b->scalar;
        b = b->lhs;
      }
      Expr m = mul(a, b);
      return s == 1.0 ? m : scale(s, m);
    }
  }
  return e;
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Var) {
    out.insert(e->name);
    return;
  }
  collect_vars(e->lhs, out);
  collect_vars(e->rhs, out);
}

std::set<std::string> vars_of(const Expr& e) {
  std::set<std::string> out;
  collect_vars(e, out);
  return out;
}

bool references(const Expr& e, const std::set<std::string>& names) {
  if (!e) return false;
  if (e->kind == ExprKind::Var) return names.contains(e->name);
  return references(e->lhs, names) || references(e->rhs, names);
}

Expr rewrite(const Expr& e, const std::function<Expr(const Expr&)>& fn) {
  if (!e) return e;
  Expr node = e;
  if (e->kind != ExprKind::Var) {
    Expr l = rewrite(e->lhs, fn);
    Expr r = rewrite(e->rhs, fn);
    if (l != e->lhs || r != e->rhs) {
      node = make(e->kind, l, r, e->name, e->scalar);
    }
  }
  Expr replaced = fn(node);
  return replaced ? replaced : node;
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
  return rewrite(e, [&](const Expr& n) -> Expr {
    if (n->kind != ExprKind::Var) return nullptr;
    auto it = bindings.find(n->name);
    return it == bindings.end() ? nullptr : it->second;
  });
}

std::size_t expr_size(const Expr& e) {
  if (!e) return 0;
  return 1 + expr_size(e->lhs) + expr_size(e->rhs);
}

}  // namespace ivla
