#include "ivla/evaluate.hpp"

#include <limits>

#include "ivla/error.hpp"

namespace ivla {

namespace {

// Borrowed or owned matrix; avoids copying named operands.
class Value {
 public:
  explicit Value(const Matrix* ref) : ref_(ref) {}
  explicit Value(Matrix owned) : owned_(std::move(owned)), ref_(&owned_) {}
  Value(Value&& o) noexcept
      : owned_(std::move(o.owned_)),
        ref_(o.ref_ == &o.owned_ ? &owned_ : o.ref_) {}
  Value(const Value&) = delete;

  const Matrix& get() const { return *ref_; }
  Matrix take() && { return ref_ == &owned_ ? std::move(owned_) : *ref_; }

 private:
  Matrix owned_;
  const Matrix* ref_;
};

Value eval(const Expr& e, const MatrixLookup& lookup, CostLedger& ledger) {
  switch (e->kind) {
    case ExprKind::Var: {
      const Matrix* m = lookup(e->name);
      if (!m) throw ShapeError("evaluate: unbound matrix '" + e->name + "'");
      return Value(m);
    }
    case ExprKind::Add: {
      Matrix a = eval(e->lhs, lookup, ledger).take();
      Value b = eval(e->rhs, lookup, ledger);
      mat_add_inplace(a, b.get(), ledger);
      return Value(std::move(a));
    }
    case ExprKind::Sub: {
      Value a = eval(e->lhs, lookup, ledger);
      Value b = eval(e->rhs, lookup, ledger);
      return Value(mat_sub(a.get(), b.get(), ledger));
    }
    case ExprKind::Mul: {
      if (e->lhs->kind == ExprKind::Transpose) {
        Value a = eval(e->lhs->lhs, lookup, ledger);
        Value b = eval(e->rhs, lookup, ledger);
        return Value(mat_mul_tn(a.get(), b.get(), ledger));
      }
      Value a = eval(e->lhs, lookup, ledger);
      Value b = eval(e->rhs, lookup, ledger);
      return Value(mat_mul(a.get(), b.get(), ledger));
    }
    case ExprKind::Scale: {
      Value a = eval(e->lhs, lookup, ledger);
      return Value(mat_scale(e->scalar, a.get(), ledger));
    }
    case ExprKind::Transpose: {
      Value a = eval(e->lhs, lookup, ledger);
      return Value(mat_transpose(a.get()));
    }
    case ExprKind::Inverse: {
      Value a = eval(e->lhs, lookup, ledger);
      return Value(mat_inverse(a.get(), ledger));
    }
  }
  throw std::logic_error("evaluate: unknown node");
}

void flatten_product(const Expr& e, std::vector<Expr>& out) {
  if (e->kind == ExprKind::Mul) {
    flatten_product(e->lhs, out);
    flatten_product(e->rhs, out);
  } else {
    out.push_back(e);
  }
}

Expr build(const std::vector<Expr>& factors, const ChainOrder& order,
           std::size_t i, std::size_t j) {
  if (i == j) return factors[i];
  const std::size_t k = order.split[i][j];
  return mul(build(factors, order, i, k), build(factors, order, k + 1, j));
}

}  // namespace

MatrixLookup lookup_in(const MatrixMap& m) {
  return [&m](const std::string& name) -> const Matrix* {
    auto it = m.find(name);
    return it == m.end() ? nullptr : &it->second;
  };
}

Matrix evaluate(const Expr& e, const MatrixLookup& lookup, CostLedger& ledger) {
  return eval(e, lookup, ledger).take();
}

Matrix evaluate(const Expr& e, const MatrixMap& env, CostLedger& ledger) {
  return evaluate(e, lookup_in(env), ledger);
}

MatrixMap evaluate_program(const Program& p, const MatrixMap& inputs,
                           CostLedger& ledger) {
  MatrixMap env;
  for (const auto& in : p.inputs) {
    auto it = inputs.find(in.name);
    if (it == inputs.end()) {
      throw ConfigError("no value supplied for input '" + in.name + "'");
    }
    env[in.name] = it->second;
  }
  for (const auto& s : p.statements) {
    LedgerLabel label(ledger, s.target);
    Matrix value = evaluate(s.expr, env, ledger);
    env[s.target] = std::move(value);
  }
  return env;
}

ChainOrder matrix_chain_order(const std::vector<std::size_t>& dims) {
  const std::size_t n = dims.size() - 1;
  ChainOrder order;
  order.split.assign(n, std::vector<std::size_t>(n, 0));
  std::vector<std::vector<std::uint64_t>> cost(n, std::vector<std::uint64_t>(n, 0));
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len - 1 < n; ++i) {
      const std::size_t j = i + len - 1;
      cost[i][j] = std::numeric_limits<std::uint64_t>::max();
      for (std::size_t k = i; k < j; ++k) {
        const std::uint64_t c = cost[i][k] + cost[k + 1][j] +
                                static_cast<std::uint64_t>(dims[i]) *
                                    dims[k + 1] * dims[j + 1];
        if (c < cost[i][j]) {
          cost[i][j] = c;
          order.split[i][j] = k;
        }
      }
    }
  }
  order.cost = n ? cost[0][n - 1] : 0;
  return order;
}

Expr reassociate(const Expr& e, const ShapeMap& shapes) {
  switch (e->kind) {
    case ExprKind::Var:
      return e;
    case ExprKind::Add:
      return add(reassociate(e->lhs, shapes), reassociate(e->rhs, shapes));
    case ExprKind::Sub:
      return sub(reassociate(e->lhs, shapes), reassociate(e->rhs, shapes));
    case ExprKind::Scale:
      return scale(e->scalar, reassociate(e->lhs, shapes));
    case ExprKind::Transpose:
      return transpose(reassociate(e->lhs, shapes));
    case ExprKind::Inverse:
      return inverse(reassociate(e->lhs, shapes));
    case ExprKind::Mul: {
      std::vector<Expr> factors;
      flatten_product(e, factors);
      std::vector<std::size_t> dims;
      for (auto& f : factors) {
        f = reassociate(f, shapes);
        const Shape s = infer_shape(f, shapes);
        if (dims.empty()) dims.push_back(s.rows);
        dims.push_back(s.cols);
      }
      return build(factors, matrix_chain_order(dims), 0, factors.size() - 1);
    }
  }
  return e;
}

OpCounts evaluation_counts(const Expr& e, const ShapeMap& shapes) {
  OpCounts c;
  if (!e || e->kind == ExprKind::Var) return c;
  c += evaluation_counts(e->lhs, shapes);
  c += evaluation_counts(e->rhs, shapes);
  switch (e->kind) {
    case ExprKind::Add:
    case ExprKind::Sub: {
      const Shape s = infer_shape(e, shapes);
      c.adds += s.rows * s.cols;
      break;
    }
    case ExprKind::Scale: {
      const Shape s = infer_shape(e, shapes);
      c.mul_adds += s.rows * s.cols;
      break;
    }
    case ExprKind::Mul: {
      const Shape a = infer_shape(e->lhs, shapes);
      const Shape b = infer_shape(e->rhs, shapes);
      c.mul_adds += a.rows * a.cols * b.cols;
      break;
    }
    case ExprKind::Inverse: {
      const Shape s = infer_shape(e, shapes);
      c.mul_adds += s.rows * s.rows * s.rows;
      break;
    }
    default:
      break;
  }
  return c;
}

std::uint64_t evaluation_cost(const Expr& e, const ShapeMap& shapes) {
  return evaluation_counts(e, shapes).total();
}

}  // namespace ivla
