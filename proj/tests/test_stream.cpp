#include <gtest/gtest.h>

#include <sstream>

#include "ivla/error.hpp"
#include "ivla/stream.hpp"

using namespace ivla;

TEST(Stream, ParsesColumnMajorFactors) {
  std::istringstream in("# comment\n\nA;2;u=1,2,3,4;v=5,6,7,8\n");
  auto ups = read_update_stream(in, {{"A", {2, 2}}});
  ASSERT_EQ(ups.size(), 1u);
  EXPECT_EQ(ups[0].target, "A");
  EXPECT_EQ(ups[0].u, (Matrix{{1, 3}, {2, 4}}));
  EXPECT_EQ(ups[0].v, (Matrix{{5, 7}, {6, 8}}));
}

TEST(Stream, RoundTrip) {
  Rng rng(1);
  auto ups = random_updates(3, 4, 2, 5, rng);
  std::stringstream ss;
  write_update_stream(ss, ups);
  auto back = read_update_stream(ss, {{"A", {3, 4}}});
  ASSERT_EQ(back.size(), ups.size());
  for (std::size_t i = 0; i < ups.size(); ++i) {
    EXPECT_EQ(back[i].u, ups[i].u);
    EXPECT_EQ(back[i].v, ups[i].v);
  }
}

TEST(Stream, EmptyStream) {
  std::istringstream in("");
  EXPECT_TRUE(read_update_stream(in, {{"A", {2, 2}}}).empty());
}

TEST(Stream, MalformedRecordsNameTheRecord) {
  const ShapeMap shapes{{"A", {2, 2}}};
  for (const char* bad : {"A;1;u=1;v=1,2", "B;1;u=1,2;v=1,2", "A;x;u=1,2;v=1,2",
                          "A;1;u=1,q;v=1,2", "A;1;u=1,2", "A;0;u=;v="}) {
    std::istringstream in(std::string("A;1;u=1,2;v=3,4\n") + bad + "\n");
    try {
      read_update_stream(in, shapes);
      FAIL() << bad;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
    }
  }
}

TEST(Stream, KeyValuesAndDims) {
  auto kv = parse_key_values("count=3, seed=7");
  EXPECT_EQ(kv.at("count"), "3");
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_EQ(parse_dims("n=64,p=8"), (DimBindings{{"n", 64}, {"p", 8}}));
  EXPECT_THROW(parse_key_values("n64"), ConfigError);
  EXPECT_THROW(parse_dims("n=-1"), ConfigError);
  EXPECT_THROW(parse_dims("n=x"), ConfigError);
}
