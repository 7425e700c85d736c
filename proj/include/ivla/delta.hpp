#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivla/expr.hpp"
#include "ivla/ledger.hpp"
#include "ivla/matrix.hpp"

namespace ivla {

// The delta of one affected matrix. A low-rank delta is left * right' where
// `left` and `right` name tall-skinny block matrices of `width` columns; a
// dense delta names a single matrix of the owner's shape.
struct DeltaEntry {
  enum class Kind { LowRank, Dense };

  std::string matrix;
  Kind kind = Kind::LowRank;
  std::string left;   // LowRank: U block; Dense: the delta matrix itself
  std::string right;  // LowRank only
  std::size_t width = 0;

  static DeltaEntry low_rank(std::string matrix, std::string left,
                             std::string right, std::size_t width);
  static DeltaEntry dense(std::string matrix, std::string name);

  // u*v' or D.
  Expr expr() const;
};

// Affected matrices in statement order; the first entry is the triggering
// input.
struct DeltaEnv {
  std::vector<DeltaEntry> entries;

  const DeltaEntry* find(const std::string& matrix) const;
  bool affects(const Expr& e) const;
  std::set<std::string> affected() const;
  // Names of every block / dense-delta matrix.
  std::set<std::string> delta_names() const;
  DeltaEnv only(const std::string& matrix) const;
};

// Symbolic E(X + dX) - E(X) for all affected X at once. Returns nullptr when
// `e` references no affected matrix.
Expr derive_delta(const Expr& e, const DeltaEnv& env);

// The same delta built one matrix at a time:
//   D_{A,rest}(E) = D_A(E) + D_rest(E + D_A(E)).
// `order` lists affected matrices; the result is numerically independent of it.
Expr derive_delta_sequential(const Expr& e, const DeltaEnv& env,
                             const std::vector<std::string>& order);

struct FactoredDelta {
  std::string owner;
  std::vector<Expr> u_blocks;
  std::vector<Expr> v_blocks;
  std::vector<std::size_t> widths;

  std::size_t width() const;
  // "Δ<owner> = [U1 | U2] · [V1 | V2]ᵀ"
  std::string to_string() const;
};

// True when `d` expands to monomials that each carry a low-rank delta and no
// dense delta term.
bool is_factorable(const Expr& d, const DeltaEnv& env);

// Rewrites `d` as U * V' with common left and right factors merged. Throws
// Error when some monomial is not factorable.
FactoredDelta factor_delta(const Expr& d, const DeltaEnv& env,
                           std::string owner = {});

// Concrete low-rank value left * right'.
struct LowRankValue {
  Matrix left;
  Matrix right;
  std::size_t width() const { return left.cols(); }
  Matrix dense(CostLedger& ledger) const;
};

// Rank-one correction of W = E^-1 for E + u v':
//   left = -(W u) / (1 + v' W u),  right = W' v.
// Throws SingularityError when the denominator vanishes.
LowRankValue sherman_morrison_delta(const Matrix& w, const Matrix& u,
                                    const Matrix& v, CostLedger& ledger);

// Applies E + P Q' one column pair at a time, each step seeing the inverse
// already corrected by the previous ones. O(n^2) per column pair.
LowRankValue apply_sequential_sm(const Matrix& w, const Matrix& p,
                                 const Matrix& q, CostLedger& ledger);

// |1 + q'Wp| must exceed this.
double sm_tolerance(double qwp);

}  // namespace ivla
