#include "ivla/delta.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ivla/error.hpp"

namespace ivla {

DeltaEntry DeltaEntry::low_rank(std::string matrix, std::string left,
                                std::string right, std::size_t width) {
  DeltaEntry e;
  e.matrix = std::move(matrix);
  e.kind = Kind::LowRank;
  e.left = std::move(left);
  e.right = std::move(right);
  e.width = width;
  return e;
}

DeltaEntry DeltaEntry::dense(std::string matrix, std::string name) {
  DeltaEntry e;
  e.matrix = std::move(matrix);
  e.kind = Kind::Dense;
  e.left = std::move(name);
  return e;
}

Expr DeltaEntry::expr() const {
  if (kind == Kind::Dense) return var(left);
  return mul(var(left), transpose(var(right)));
}

const DeltaEntry* DeltaEnv::find(const std::string& matrix) const {
  for (const auto& e : entries) {
    if (e.matrix == matrix) return &e;
  }
  return nullptr;
}

bool DeltaEnv::affects(const Expr& e) const {
  return references(e, affected());
}

std::set<std::string> DeltaEnv::affected() const {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.matrix);
  return out;
}

std::set<std::string> DeltaEnv::delta_names() const {
  std::set<std::string> out;
  for (const auto& e : entries) {
    out.insert(e.left);
    if (e.kind == DeltaEntry::Kind::LowRank) out.insert(e.right);
  }
  return out;
}

DeltaEnv DeltaEnv::only(const std::string& matrix) const {
  DeltaEnv out;
  if (const DeltaEntry* e = find(matrix)) out.entries.push_back(*e);
  return out;
}

Expr derive_delta(const Expr& e, const DeltaEnv& env) {
  switch (e->kind) {
    case ExprKind::Var: {
      const DeltaEntry* entry = env.find(e->name);
      return entry ? entry->expr() : nullptr;
    }
    case ExprKind::Add: {
      Expr a = derive_delta(e->lhs, env), b = derive_delta(e->rhs, env);
      if (!a) return b;
      if (!b) return a;
      return add(a, b);
    }
    case ExprKind::Sub: {
      Expr a = derive_delta(e->lhs, env), b = derive_delta(e->rhs, env);
      if (!a && !b) return nullptr;
      if (!a) return scale(-1.0, b);
      if (!b) return a;
      return sub(a, b);
    }
    case ExprKind::Scale: {
      Expr a = derive_delta(e->lhs, env);
      return a ? scale(e->scalar, a) : nullptr;
    }
    case ExprKind::Transpose: {
      Expr a = derive_delta(e->lhs, env);
      return a ? transpose(a) : nullptr;
    }
    case ExprKind::Mul: {
      Expr a = derive_delta(e->lhs, env), b = derive_delta(e->rhs, env);
      std::vector<Expr> terms;
      if (a) terms.push_back(mul(a, e->rhs));
      if (b) terms.push_back(mul(e->lhs, b));
      if (a && b) terms.push_back(mul(a, b));
      return terms.empty() ? nullptr : add_all(terms);
    }
    case ExprKind::Inverse: {
      Expr a = derive_delta(e->lhs, env);
      return a ? sub(inverse(add(e->lhs, a)), e) : nullptr;
    }
  }
  return nullptr;
}

Expr derive_delta_sequential(const Expr& e, const DeltaEnv& env,
                             const std::vector<std::string>& order) {
  if (order.empty()) return nullptr;
  Expr first = derive_delta(e, env.only(order.front()));
  std::vector<std::string> rest(order.begin() + 1, order.end());
  Expr later = derive_delta_sequential(first ? add(e, first) : e, env, rest);
  if (!first) return later;
  if (!later) return first;
  return add(first, later);
}

std::size_t FactoredDelta::width() const {
  std::size_t w = 0;
  for (auto x : widths) w += x;
  return w;
}

std::string FactoredDelta::to_string() const {
  auto join = [](const std::vector<Expr>& blocks) {
    std::string s = "[";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) s += " | ";
      s += ivla::to_string(blocks[i]);
    }
    return s + "]";
  };
  return "Δ" + owner + " = " + join(u_blocks) + " · " + join(v_blocks) + "ᵀ";
}

namespace {

struct Monomial {
  double coef = 1.0;
  std::vector<Expr> factors;
};

std::vector<Monomial> expand(const Expr& e, const std::set<std::string>& names) {
  switch (e->kind) {
    case ExprKind::Scale: {
      auto out = expand(e->lhs, names);
      for (auto& m : out) m.coef *= e->scalar;
      return out;
    }
    case ExprKind::Mul: {
      auto left = expand(e->lhs, names), right = expand(e->rhs, names);
      std::vector<Monomial> out;
      out.reserve(left.size() * right.size());
      for (const auto& a : left) {
        for (const auto& b : right) {
          Monomial m{a.coef * b.coef, a.factors};
          m.factors.insert(m.factors.end(), b.factors.begin(), b.factors.end());
          out.push_back(std::move(m));
        }
      }
      return out;
    }
    case ExprKind::Add:
    case ExprKind::Sub: {
      if (!references(e, names)) break;
      auto out = expand(e->lhs, names);
      for (auto m : expand(e->rhs, names)) {
        if (e->kind == ExprKind::Sub) m.coef = -m.coef;
        out.push_back(std::move(m));
      }
      return out;
    }
    default:
      break;
  }
  return {Monomial{1.0, {e}}};
}

struct BlockInfo {
  std::map<std::string, std::size_t> widths;  // block name -> width
  std::set<std::string> all;                  // blocks and dense deltas
};

BlockInfo block_info(const DeltaEnv& env) {
  BlockInfo info;
  for (const auto& e : env.entries) {
    info.all.insert(e.left);
    if (e.kind == DeltaEntry::Kind::LowRank) {
      info.all.insert(e.right);
      info.widths[e.left] = e.width;
      info.widths[e.right] = e.width;
    }
  }
  return info;
}

bool is_block(const Expr& f, const BlockInfo& info) {
  const Expr& x = f->kind == ExprKind::Transpose ? f->lhs : f;
  return x->kind == ExprKind::Var && info.widths.contains(x->name);
}

// Index of the factor that closes the rightmost delta pair, or -1.
long closing_factor(const Monomial& m, const BlockInfo& info) {
  for (std::size_t j = m.factors.size(); j-- > 0;) {
    const Expr& f = m.factors[j];
    if (f->kind == ExprKind::Transpose && is_block(f, info)) {
      return static_cast<long>(j);
    }
  }
  return -1;
}

bool monomial_factorable(const Monomial& m, const BlockInfo& info) {
  for (const auto& f : m.factors) {
    if (!is_block(f, info) && references(f, info.all)) return false;
  }
  return closing_factor(m, info) > 0;
}

std::vector<Monomial> monomials(const Expr& d, const BlockInfo& info) {
  return expand(normalize(d), info.all);
}

Expr scaled(double coef, Expr e) {
  return coef == 1.0 ? e : scale(coef, std::move(e));
}

void accumulate(Expr& acc, double coef, const Expr& term) {
  if (!acc) {
    acc = scaled(coef, term);
  } else if (coef < 0) {
    acc = sub(acc, scaled(-coef, term));
  } else {
    acc = add(acc, scaled(coef, term));
  }
}

}  // namespace

bool is_factorable(const Expr& d, const DeltaEnv& env) {
  if (!d) return true;
  const BlockInfo info = block_info(env);
  for (const auto& m : monomials(d, info)) {
    if (!monomial_factorable(m, info)) return false;
  }
  return true;
}

FactoredDelta factor_delta(const Expr& d, const DeltaEnv& env,
                           std::string owner) {
  FactoredDelta out;
  out.owner = std::move(owner);
  if (!d) return out;
  const BlockInfo info = block_info(env);

  struct Group {
    std::string key;
    Expr left;
    Expr right;
    std::size_t width;
  };
  std::vector<Group> by_right;
  for (const auto& m : monomials(d, info)) {
    if (!monomial_factorable(m, info)) {
      throw Error("factor_delta: monomial without a low-rank delta factor");
    }
    const auto j = static_cast<std::size_t>(closing_factor(m, info));
    std::vector<Expr> right_factors;
    for (std::size_t i = m.factors.size(); i-- > j;) {
      right_factors.push_back(normalize(transposed(m.factors[i])));
    }
    Expr right = mul_chain(right_factors);
    Expr left = mul_chain({m.factors.begin(), m.factors.begin() + j});
    std::string key = to_string(right);
    auto it = std::find_if(by_right.begin(), by_right.end(),
                           [&](const Group& g) { return g.key == key; });
    if (it == by_right.end()) {
      by_right.push_back({std::move(key), nullptr, right,
                          info.widths.at(m.factors[j]->lhs->name)});
      it = std::prev(by_right.end());
    }
    accumulate(it->left, m.coef, left);
  }

  std::vector<Group> by_left;
  for (auto& g : by_right) {
    std::string key = to_string(g.left);
    auto it = std::find_if(by_left.begin(), by_left.end(),
                           [&](const Group& h) { return h.key == key; });
    if (it == by_left.end()) {
      by_left.push_back({std::move(key), g.left, g.right, g.width});
    } else {
      it->right = add(it->right, g.right);
    }
  }
  for (auto& g : by_left) {
    out.u_blocks.push_back(g.left);
    out.v_blocks.push_back(g.right);
    out.widths.push_back(g.width);
  }
  return out;
}

Matrix LowRankValue::dense(CostLedger& ledger) const {
  Matrix out(left.rows(), right.rows());
  mat_mul_nt_accumulate(out, left, right, ledger);
  return out;
}

double sm_tolerance(double qwp) {
  return 1e-10 * std::max(1.0, std::abs(qwp));
}

LowRankValue sherman_morrison_delta(const Matrix& w, const Matrix& u,
                                    const Matrix& v, CostLedger& ledger) {
  if (u.cols() != 1 || v.cols() != 1) {
    throw ShapeError("sherman_morrison_delta: u and v must be single columns");
  }
  return apply_sequential_sm(w, u, v, ledger);
}

LowRankValue apply_sequential_sm(const Matrix& w, const Matrix& p,
                                 const Matrix& q, CostLedger& ledger) {
  const std::size_t n = w.rows();
  if (w.cols() != n || p.rows() != n || q.rows() != n ||
      p.cols() != q.cols()) {
    throw ShapeError("sequential Sherman-Morrison: W " + w.shape_string() +
                     ", P " + p.shape_string() + ", Q " + q.shape_string());
  }
  const std::size_t k = p.cols();
  LowRankValue out{Matrix(n, k), Matrix(n, k)};
  for (std::size_t j = 0; j < k; ++j) {
    const Matrix pj = p.column(j), qj = q.column(j);
    Matrix wp = mat_mul(w, pj, ledger);
    Matrix wtq = mat_mul_tn(w, qj, ledger);
    if (j > 0) {
      const Matrix r = out.left.columns(0, j), s = out.right.columns(0, j);
      mat_add_inplace(wp, mat_mul(r, mat_mul_tn(s, pj, ledger), ledger),
                      ledger);
      mat_add_inplace(wtq, mat_mul(s, mat_mul_tn(r, qj, ledger), ledger),
                      ledger);
    }
    const double qwp = mat_mul_tn(qj, wp, ledger)(0, 0);
    const double denom = 1.0 + qwp;
    if (std::abs(denom) <= sm_tolerance(qwp)) {
      throw SingularityError("rank-1 inverse update " + std::to_string(j) +
                                 " makes the matrix singular (1 + q'Wp = " +
                                 std::to_string(denom) + ")",
                             j);
    }
    const Matrix rj = mat_scale(-1.0 / denom, wp, ledger);
    for (std::size_t i = 0; i < n; ++i) {
      out.left(i, j) = rj(i, 0);
      out.right(i, j) = wtq(i, 0);
    }
  }
  return out;
}

}  // namespace ivla
