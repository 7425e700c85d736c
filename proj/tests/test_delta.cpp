#include <gtest/gtest.h>

#include "ivla/compiler.hpp"
#include "ivla/delta.hpp"
#include "ivla/error.hpp"
#include "ivla/evaluate.hpp"
#include "ivla/random.hpp"

using namespace ivla;

namespace {

DeltaEnv env_for(const std::string& input) {
  DeltaEnv env;
  env.entries.push_back(DeltaEntry::low_rank(input, "u", "v", 1));
  return env;
}

double delta_error(const Expr& e, const std::string& target, std::size_t n,
                   std::uint64_t seed) {
  Rng rng(seed);
  MatrixMap m{{"A", random_well_conditioned(n, rng)},
              {"B", random_well_conditioned(n, rng)},
              {"u", scale_to_frobenius(random_matrix(n, 1, rng), 0.5)},
              {"v", scale_to_frobenius(random_matrix(n, 1, rng), 0.5)}};
  CostLedger l;
  Matrix before = evaluate(e, m, l);
  DeltaEnv env = env_for(target);
  Expr d = derive_delta(e, env);
  Matrix dv = evaluate(d, m, l);
  mat_mul_nt_accumulate(m[target], m["u"], m["v"], l);
  Matrix after = evaluate(e, m, l);
  return max_abs_diff(mat_add(before, dv, l), after);
}

}  // namespace

TEST(Delta, UnaffectedIsNull) {
  EXPECT_EQ(derive_delta(var("B"), env_for("A")), nullptr);
}

TEST(Delta, BruteForceRules) {
  Expr A = var("A"), B = var("B");
  std::vector<Expr> cases = {
      A,
      mul(A, A),
      mul(mul(A, B), A),
      add(A, transpose(A)),
      sub(mul(A, B), scale(3, A)),
      transpose(mul(A, A)),
      inverse(A),
      mul(inverse(A), B),
      inverse(mul(A, transpose(A))),
      mul(mul(A, A), mul(A, A)),
  };
  for (std::size_t i = 0; i < cases.size(); ++i)
    EXPECT_LT(delta_error(cases[i], "A", 8, 100 + i), 1e-9) << to_string(cases[i]);
}

TEST(Delta, FactoredWidthsOfPowers) {
  DeltaEnv env = env_for("A");
  FactoredDelta b = compute_delta(mul(var("A"), var("A")), env, "B");
  EXPECT_EQ(b.width(), 2u);
  EXPECT_EQ(b.to_string(), "ΔB = [u | A*u + u*v'*u] · [A'*v | v]ᵀ");
  env.entries.push_back(DeltaEntry::low_rank("B", "U_B", "V_B", 2));
  FactoredDelta c = compute_delta(mul(var("B"), var("B")), env.only("B"), "C");
  EXPECT_EQ(c.width(), 4u);
  DeltaEnv e3 = env.only("B");
  e3.entries.push_back(DeltaEntry::low_rank("C", "U_C", "V_C", 4));
  FactoredDelta d = compute_delta(mul(var("C"), var("C")), e3.only("C"), "D");
  EXPECT_EQ(d.width(), 8u);
}

TEST(Delta, FactoredValueMatchesDense) {
  DeltaEnv env = env_for("A");
  Expr e = mul(mul(var("A"), var("B")), var("A"));
  Expr d = derive_delta(e, env);
  ASSERT_TRUE(is_factorable(d, env));
  FactoredDelta f = factor_delta(d, env, "T");
  Rng rng(5);
  MatrixMap m{{"A", random_matrix(6, 6, rng)}, {"B", random_matrix(6, 6, rng)},
              {"u", random_matrix(6, 1, rng)}, {"v", random_matrix(6, 1, rng)}};
  CostLedger l;
  std::vector<Matrix> us, vs;
  for (const auto& x : f.u_blocks) us.push_back(evaluate(x, m, l));
  for (const auto& x : f.v_blocks) vs.push_back(evaluate(x, m, l));
  Matrix u = hcat(us), v = hcat(vs);
  EXPECT_EQ(u.cols(), f.width());
  EXPECT_LT(max_abs_diff(mat_mul(u, mat_transpose(v), l), evaluate(d, m, l)), 1e-12);
}

TEST(Delta, DenseDeltaIsNotFactorable) {
  DeltaEnv env;
  env.entries.push_back(DeltaEntry::dense("A", "D_A"));
  Expr d = derive_delta(mul(var("A"), var("A")), env);
  EXPECT_FALSE(is_factorable(d, env));
  EXPECT_THROW(factor_delta(d, env), Error);
}

TEST(Delta, SequentialOrderIndependence) {
  DeltaEnv env;
  env.entries.push_back(DeltaEntry::low_rank("A", "u", "v", 1));
  env.entries.push_back(DeltaEntry::low_rank("B", "p", "q", 1));
  Expr e = mul(mul(var("A"), var("B")), add(var("A"), inverse(var("B"))));
  Rng rng(6);
  MatrixMap m{{"A", random_well_conditioned(7, rng)}, {"B", random_well_conditioned(7, rng)}};
  for (const char* k : {"u", "v", "p", "q"})
    m[k] = scale_to_frobenius(random_matrix(7, 1, rng), 0.5);
  CostLedger l;
  Matrix joint = evaluate(derive_delta(e, env), m, l);
  Matrix ab = evaluate(derive_delta_sequential(e, env, {"A", "B"}), m, l);
  Matrix ba = evaluate(derive_delta_sequential(e, env, {"B", "A"}), m, l);
  EXPECT_LT(max_abs_diff(ab, joint), 1e-9);
  EXPECT_LT(max_abs_diff(ba, joint), 1e-9);
}

TEST(ShermanMorrison, MatchesInverse) {
  Rng rng(7);
  for (std::size_t n : {1, 3, 10, 40}) {
    Matrix e = random_well_conditioned(n, rng);
    Matrix u = random_matrix(n, 1, rng), v = random_matrix(n, 1, rng);
    CostLedger l;
    Matrix w = mat_inverse(e, l);
    LowRankValue d = sherman_morrison_delta(w, u, v, l);
    mat_mul_nt_accumulate(e, u, v, l);
    EXPECT_LT(frobenius_norm(mat_sub(mat_add(w, d.dense(l), l), mat_inverse(e, l), l)), 1e-8);
  }
}

TEST(ShermanMorrison, SequentialTwoSteps) {
  Rng rng(8);
  const std::size_t n = 12;
  Matrix e = random_well_conditioned(n, rng);
  Matrix p = random_matrix(n, 2, rng), q = random_matrix(n, 2, rng);
  CostLedger l;
  Matrix w = mat_inverse(e, l);
  LowRankValue d = apply_sequential_sm(w, p, q, l);
  EXPECT_EQ(d.width(), 2u);
  mat_mul_nt_accumulate(e, p, q, l);
  EXPECT_LT(frobenius_norm(mat_sub(mat_add(w, d.dense(l), l), mat_inverse(e, l), l)), 1e-8);
}

TEST(ShermanMorrison, SingularDenominator) {
  Matrix w = Matrix::identity(2);
  Matrix u{{1}, {0}}, v{{-1}, {0}};  // 1 + v'Wu = 0
  CostLedger l;
  EXPECT_THROW(sherman_morrison_delta(w, u, v, l), SingularityError);
  Matrix p = hcat(Matrix{{0}, {1}}, u), q = hcat(Matrix{{0}, {1}}, v);
  try {
    apply_sequential_sm(w, p, q, l);
    FAIL();
  } catch (const SingularityError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(ShermanMorrison, CostIsQuadratic) {
  Rng rng(9);
  std::uint64_t prev = 0;
  for (std::size_t n : {32, 64}) {
    Matrix w = random_well_conditioned(n, rng);
    CostLedger l;
    sherman_morrison_delta(w, random_matrix(n, 1, rng), random_matrix(n, 1, rng), l);
    if (prev) EXPECT_NEAR(double(l.mul_adds()) / prev, 4.0, 0.2);
    prev = l.mul_adds();
  }
}
