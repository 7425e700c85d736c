#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace ivla {

enum class ExprKind { Var, Add, Sub, Mul, Scale, Transpose, Inverse };

struct ExprNode;
// Immutable, shareable expression tree.
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  std::string name;     // Var
  double scalar = 1.0;  // Scale
  Expr lhs;             // Add, Sub, Mul; operand of Scale/Transpose/Inverse
  Expr rhs;             // Add, Sub, Mul
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

using ShapeMap = std::map<std::string, Shape>;

// Shape with dimension symbols ("n", "m") or integer literals ("3").
struct SymbolicShape {
  std::string rows;
  std::string cols;
  friend bool operator==(const SymbolicShape&, const SymbolicShape&) = default;
};
using SymbolicShapeMap = std::map<std::string, SymbolicShape>;

Expr var(std::string name);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr scale(double lambda, Expr e);
Expr transpose(Expr e);
Expr inverse(Expr e);

// Left-nested product / sum of a non-empty list.
Expr mul_chain(const std::vector<Expr>& factors);
Expr add_all(const std::vector<Expr>& terms);

bool is_var(const Expr& e);
bool is_var(const Expr& e, const std::string& name);

// Pretty printer; the output re-parses to a structurally equal tree.
std::string to_string(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

// Shape of `e` given shapes for all referenced names. Throws ShapeError
// naming the offending sub-expression.
Shape infer_shape(const Expr& e, const ShapeMap& shapes);
// Same check with dimensions compared symbolically.
SymbolicShape infer_shape(const Expr& e, const SymbolicShapeMap& shapes);

// Transpose of `e` with the transpose pushed to the leaves:
// (XY)' = Y'X', (X+Y)' = X'+Y', X'' = X, inv(X)' = inv(X').
Expr transposed(const Expr& e);

// Pushes every transpose to the leaves, folds nested scales and merges
// Scale into the surrounding product. Value-preserving.
Expr normalize(const Expr& e);

void collect_vars(const Expr& e, std::set<std::string>& out);
std::set<std::string> vars_of(const Expr& e);
bool references(const Expr& e, const std::set<std::string>& names);

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);

// Post-order rewrite: `fn` is applied to each node after its children were
// rewritten; returning nullptr keeps the node.
Expr rewrite(const Expr& e, const std::function<Expr(const Expr&)>& fn);

// Number of nodes.
std::size_t expr_size(const Expr& e);

}  // namespace ivla
