#include <gtest/gtest.h>

#include "ivla/error.hpp"
#include "ivla/program.hpp"
#include "support.hpp"

using namespace ivla;

TEST(Expr, PrinterReparses) {
  Expr e = mul(transpose(add(var("A"), scale(2, var("B")))), inverse(var("C")));
  Expr back = parse_program("input A : n x n; input B : n x n; input C : n x n; T := " +
                            to_string(e) + "; output T;")
                  .statements[0]
                  .expr;
  EXPECT_TRUE(structurally_equal(e, back)) << to_string(e) << " vs " << to_string(back);
}

TEST(Expr, TransposedPushesToLeaves) {
  Expr e = transpose(mul(var("A"), inverse(var("B"))));
  EXPECT_EQ(to_string(transposed(transpose(e))), to_string(e));
  EXPECT_EQ(to_string(normalize(e)), "inv(B')*A'");
}

TEST(Expr, ShapeInference) {
  ShapeMap s{{"A", {3, 4}}, {"B", {4, 2}}};
  EXPECT_EQ(infer_shape(mul(var("A"), var("B")), s), (Shape{3, 2}));
  EXPECT_EQ(infer_shape(transpose(var("A")), s), (Shape{4, 3}));
  EXPECT_THROW(infer_shape(mul(var("B"), var("A")), s), ShapeError);
  EXPECT_THROW(infer_shape(inverse(var("A")), s), ShapeError);
  EXPECT_THROW(infer_shape(add(var("A"), var("B")), s), ShapeError);
}

TEST(Program, ParsesPowers) {
  Program p = parse_program(
      "# powers\ninput A : n x n;\nB := A * A;\nC := B * B;\noutput C;\n");
  ASSERT_EQ(p.inputs.size(), 1u);
  ASSERT_EQ(p.statements.size(), 2u);
  EXPECT_EQ(p.outputs, std::vector<std::string>{"C"});
  EXPECT_EQ(to_string(p.statements[1].expr), "B*B");
  ShapeMap s = shape_check(p, {{"n", 5}});
  EXPECT_EQ(s.at("C"), (Shape{5, 5}));
}

TEST(Program, ParsesOls) {
  Program p = parse_program(ols_source());
  ShapeMap s = shape_check(p, {{"m", 20}, {"n", 4}, {"p", 2}});
  EXPECT_EQ(s.at("W"), (Shape{4, 4}));
  EXPECT_EQ(s.at("beta"), (Shape{4, 2}));
}

TEST(Program, LiteralDimensionsAndScalars) {
  Program p = parse_program("input A : 3 x 3; B := 0.5 * A' + A; output B;");
  EXPECT_EQ(shape_check(p, {}).at("B"), (Shape{3, 3}));
}

TEST(Program, SymbolicShapeCheck) {
  Program p = parse_program("input A : n x m; B := A * A'; output B;");
  EXPECT_EQ(symbolic_shapes(p).at("B"), (SymbolicShape{"n", "n"}));
  EXPECT_THROW(parse_program("input A : n x m; B := A * A; output B;"),
               ShapeError);
}

TEST(Program, UnboundDimension) {
  Program p = parse_program("input A : n x n; B := A; output B;");
  EXPECT_THROW(shape_check(p, {}), ConfigError);
  EXPECT_THROW(shape_check(p, {{"n", 0}}), ConfigError);
}

TEST(Program, SyntaxErrorsCarryPosition) {
  try {
    parse_program("input A : n x n;\nB := A * ;\noutput B;");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_program("input A : n x n; B := C; output B;"), ParseError);
  EXPECT_THROW(parse_program("input A : n x n; B := A; B := A; output B;"),
               ParseError);
  EXPECT_THROW(parse_program("input A : n x n; A := A; output A;"), ParseError);
  EXPECT_THROW(parse_program("input A : n x n; B := A; output Q;"), ParseError);
  EXPECT_THROW(parse_program("input A : n x n; B := A $ A; output B;"),
               ParseError);
}

TEST(Program, RoundTripProperty) {
  Rng rng(11);
  testkit::ProgramGenerator gen(rng);
  for (int i = 0; i < 200; ++i) {
    Program p = parse_program(gen.next().source);
    Program q = parse_program(to_string(p));
    EXPECT_TRUE(structurally_equal(p, q)) << to_string(p);
  }
}

TEST(Program, GeneratedProgramsAreShapeValid) {
  Rng rng(12);
  testkit::ProgramGenerator gen(rng);
  for (int i = 0; i < 100; ++i) {
    auto rp = gen.next();
    Program p = parse_program(rp.source);
    EXPECT_NO_THROW(shape_check(p, rp.dims)) << rp.source;
  }
}

TEST(Evaluate, ProgramMatchesKernels) {
  Program p = parse_program(
      "input A : n x n; input b : n x 1; B := A * A; c := inv(B) * b; output c;");
  Rng rng(13);
  MatrixMap in{{"A", random_well_conditioned(6, rng)}, {"b", random_matrix(6, 1, rng)}};
  CostLedger l;
  MatrixMap out = evaluate_program(p, in, l);
  CostLedger s;
  Matrix expect = mat_mul(mat_inverse(mat_mul(in["A"], in["A"], s), s), in["b"], s);
  EXPECT_LT(max_abs_diff(out.at("c"), expect), 1e-12);
  EXPECT_EQ(l.totals(), s.totals());
  EXPECT_EQ(l.per_statement().at("B").mul_adds, 216u);
  EXPECT_THROW(evaluate_program(p, {{"A", in["A"]}}, l), ConfigError);
}

TEST(Evaluate, ChainOrderMatchesBruteForce) {
  // (10x100)(100x5)(5x50): classic example, optimum 7500.
  ChainOrder o = matrix_chain_order({10, 100, 5, 50});
  EXPECT_EQ(o.cost, 7500u);
  ShapeMap s{{"A", {64, 64}}, {"u", {64, 1}}, {"v", {64, 1}}};
  Expr e = mul(mul(var("A"), var("u")), transpose(var("v")));
  Expr r = reassociate(mul(var("A"), mul(var("u"), transpose(var("v")))), s);
  EXPECT_EQ(to_string(r), to_string(e));
  EXPECT_EQ(evaluation_cost(r, s), 64u * 64 + 64u * 64);
  EXPECT_TRUE(structurally_equal(reassociate(r, s), r));
}
