#include <gtest/gtest.h>

#include "ivla/compiler.hpp"
#include "ivla/error.hpp"
#include "support.hpp"

using namespace ivla;

namespace {

const char* kPowers4 = "input A : n x n; B := A * A; C := B * B; output C;";

TriggerSet build(const char* src, std::set<std::string> dyn, DimBindings dims,
                 std::size_t rank = 1) {
  CompileOptions o;
  o.rank = rank;
  return optimize(compile(parse_program(src), dyn, dims, o));
}

}  // namespace

TEST(Compiler, PowersGolden) {
  TriggerSet ts = build(kPowers4, {"A"}, {{"n", 64}});
  EXPECT_EQ(dump(ts),
            "ON UPDATE A BY (u,v):\n"
            "    U_B := [ u | A*u + u*(v'*u) ];\n"
            "    V_B := [ A'*v | v ];\n"
            "    U_C := [ U_B | B*U_B + U_B*(V_B'*U_B) ];\n"
            "    V_C := [ B'*V_B | V_B ];\n"
            "    A += u*v';\n"
            "    B += U_B*V_B';\n"
            "    C += U_C*V_C';\n");
  const TriggerProgram& t = ts.triggers.at(0);
  EXPECT_EQ(t.shapes.at("U_B").cols, 2u);
  EXPECT_EQ(t.shapes.at("U_C").cols, 4u);
  EXPECT_TRUE(t.hybrid.empty());
}

TEST(Compiler, WidthFallbackGoesDense) {
  // Width 4 for C needs 2*4 <= n.
  TriggerSet ts = build(kPowers4, {"A"}, {{"n", 6}});
  EXPECT_TRUE(ts.triggers[0].hybrid.count("C"));
  CompileOptions o;
  o.width_fallback = false;
  TriggerSet off = compile(parse_program(kPowers4), {"A"}, {{"n", 6}}, o);
  EXPECT_TRUE(off.triggers[0].hybrid.empty());
}

TEST(Compiler, ProductsAvoidOuterProducts) {
  TriggerSet ts = build("input A : n x n; input B : n x n; C := A * B; output C;",
                        {"B"}, {{"n", 32}});
  const std::string d = dump(ts);
  EXPECT_NE(d.find("U_C := [ A*u ]"), std::string::npos) << d;
  // A*u, then the rank-1 updates of B and C.
  EXPECT_EQ(trigger_cost(ts.triggers[0]).mul_adds, 3u * 32 * 32);
}

TEST(Compiler, TwoInputTriggers) {
  const char* src =
      "input A : n x n; input B : n x n; C := A * B; D := C * A; output D;";
  TriggerSet ts = build(src, {"A", "B"}, {{"n", 10}});
  ASSERT_EQ(ts.triggers.size(), 2u);
  EXPECT_NE(ts.find("A"), nullptr);
  EXPECT_NE(ts.find("B"), nullptr);
  Rng rng(1);
  MatrixMap in{{"A", random_matrix(10, 10, rng)}, {"B", random_matrix(10, 10, rng)}};
  std::vector<RankKUpdate> ups;
  for (int i = 0; i < 6; ++i)
    ups.push_back({i % 2 ? "A" : "B", random_matrix(10, 1, rng), random_matrix(10, 1, rng)});
  EXPECT_LT(testkit::max_trigger_error(ts, in, ups), 1e-10);
}

TEST(Compiler, StaticInputHasNoTrigger) {
  TriggerSet ts = build("input A : n x n; input B : n x n; C := A * B; output C;",
                        {"A"}, {{"n", 4}});
  EXPECT_EQ(ts.find("B"), nullptr);
  EXPECT_THROW(build("input A : n x n; C := A; output C;", {"Z"}, {{"n", 4}}),
               ConfigError);
  EXPECT_THROW(build(kPowers4, {"A"}, {{"n", 4}}, 0), ConfigError);
}

TEST(Compiler, OlsUsesShermanMorrisonAndSharing) {
  TriggerSet ts = build(ols_source(), {"X"}, {{"m", 200}, {"n", 100}, {"p", 1}});
  const std::string d = dump(ts);
  EXPECT_NE(d.find("sherman_morrison(W, P_W, Q_W)"), std::string::npos) << d;
  EXPECT_NE(d.find("_cse1 := X'*u;"), std::string::npos) << d;
}

TEST(Compiler, NestedInverseIsHoisted) {
  TriggerSet ts = build("input A : n x n; input b : n x 1; c := inv(A * A) * b; output c;",
                        {"A"}, {{"n", 12}});
  ASSERT_EQ(ts.aux_views.size(), 1u);
  EXPECT_EQ(ts.aux_views[0], "_aux1");
  EXPECT_EQ(dump(ts).rfind("VIEW _aux1 := inv(A*A);", 0), 0u) << dump(ts);
  Rng rng(2);
  MatrixMap in{{"A", random_well_conditioned(12, rng)}, {"b", random_matrix(12, 1, rng)}};
  std::vector<RankKUpdate> ups;
  for (int i = 0; i < 5; ++i)
    ups.push_back({"A", random_matrix(12, 1, rng), random_matrix(12, 1, rng)});
  EXPECT_LT(testkit::max_trigger_error(ts, in, ups), 1e-8);
}

TEST(Compiler, OptimizeIsIdempotent) {
  Rng rng(3);
  testkit::ProgramGenerator gen(rng);
  for (int i = 0; i < 50; ++i) {
    auto rp = gen.next();
    TriggerSet once = build(rp.source.c_str(), {"A", "X", "B"}, rp.dims);
    EXPECT_EQ(dump(optimize(once)), dump(once)) << rp.source;
  }
}

TEST(Compiler, TriggerCostMatchesLedger) {
  Rng rng(4);
  TriggerSet ts = build(ols_source(), {"X"}, {{"m", 40}, {"n", 10}, {"p", 2}}, 2);
  MatrixMap in{{"X", random_matrix(40, 10, rng)}, {"Y", random_matrix(40, 2, rng)}};
  CostLedger l;
  MatrixMap state = initialize_state(ts, in, l);
  l.reset();
  apply_trigger(ts.triggers[0], state, random_matrix(40, 2, rng),
                scale_to_frobenius(random_matrix(10, 2, rng), 0.1), l);
  EXPECT_EQ(l.totals(), trigger_cost(ts.triggers[0]));
}

TEST(Compiler, ZeroUpdateIsNoOp) {
  TriggerSet ts = build(kPowers4, {"A"}, {{"n", 16}});
  Rng rng(5);
  MatrixMap in{{"A", random_matrix(16, 16, rng)}};
  CostLedger l;
  MatrixMap state = initialize_state(ts, in, l);
  MatrixMap before = state;
  apply_trigger(ts.triggers[0], state, Matrix(16, 1), Matrix(16, 1), l);
  for (const auto& [k, v] : before) EXPECT_EQ(state.at(k), v) << k;
}

TEST(Compiler, LongStreamDrift) {
  TriggerSet ts = build(kPowers4, {"A"}, {{"n", 24}});
  Rng rng(6);
  MatrixMap in{{"A", scale_to_spectral_radius(random_matrix(24, 24, rng), 1.0)}};
  std::vector<RankKUpdate> ups = random_updates(24, 24, 1, 100, rng, 0.01);
  EXPECT_LT(testkit::max_trigger_error(ts, in, ups), 1e-9);
}

TEST(Compiler, FailedTriggerLeavesStateUnchanged) {
  TriggerSet ts = build("input A : n x n; W := inv(A); output W;", {"A"}, {{"n", 2}});
  MatrixMap in{{"A", Matrix::identity(2)}};
  CostLedger l;
  MatrixMap state = initialize_state(ts, in, l);
  MatrixMap before = state;
  Matrix u{{1}, {0}}, v{{-1}, {0}};
  EXPECT_THROW(apply_trigger(ts.triggers[0], state, u, v, l), SingularityError);
  EXPECT_EQ(state, before);
  EXPECT_THROW(apply_trigger(ts.triggers[0], state, Matrix(3, 1), v, l), DataError);
  EXPECT_EQ(state, before);
}

TEST(Compiler, RandomProgramsMatchReevaluation) {
  Rng rng(7);
  testkit::ProgramGenerator gen(rng);
  for (int i = 0; i < 60; ++i) {
    auto rp = gen.next();
    const std::size_t rank = 1 + rng.below(2);
    TriggerSet ts = build(rp.source.c_str(), {"A", "X", "B"}, rp.dims, rank);
    MatrixMap in = testkit::random_inputs(rp.dims, rng);
    std::vector<RankKUpdate> ups;
    for (int j = 0; j < 3; ++j) {
      static const char* kNames[] = {"A", "X", "B"};
      const char* name = kNames[rng.below(3)];
      const Matrix& m = in.at(name);
      ups.push_back({name, scale_to_frobenius(random_matrix(m.rows(), rank, rng), 0.3),
                     scale_to_frobenius(random_matrix(m.cols(), rank, rng), 0.3)});
    }
    EXPECT_LT(testkit::max_trigger_error(ts, in, ups), 1e-6) << rp.source;
  }
}
