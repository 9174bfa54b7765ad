#include "catch_amalgamated.hpp"

#include <string>
#include <vector>

#include "jitdb/common.hpp"
#include "jitdb/sql.hpp"

using namespace jitdb;

TEST_CASE("single-table parse covers operators and literal kinds", "[sql]") {
  QueryAst q = parse(
      "select * from marks where m1 = 4 and m2 < 3 and m3 <= 2 and m4 > 1 "
      "and m5 >= -7 and name = 'Ann Lee';");
  CHECK(q.base_table == "MARKS");
  CHECK_FALSE(q.join.has_value());
  REQUIRE(q.where.size() == 6);
  CHECK(q.where[0].lhs == ColumnRef{"", "M1"});
  CHECK(q.where[0].op == CmpOp::eq);
  CHECK(q.where[0].rhs_value == Value{std::int64_t{4}});
  CHECK(q.where[1].op == CmpOp::lt);
  CHECK(q.where[2].op == CmpOp::le);
  CHECK(q.where[3].op == CmpOp::gt);
  CHECK(q.where[4].op == CmpOp::ge);
  CHECK(q.where[4].rhs_value == Value{std::int64_t{-7}});
  // string literals keep their exact bytes, identifiers fold to uppercase
  CHECK(q.where[5].rhs_value == Value{std::string("Ann Lee")});
  CHECK(q.where[5].sargable());

  QueryAst colcol = parse("SELECT * FROM T WHERE A = B AND T.C > D");
  REQUIRE(colcol.where.size() == 2);
  CHECK(colcol.where[0].rhs_is_column);
  CHECK_FALSE(colcol.where[0].sargable());
  CHECK(colcol.where[1].lhs == ColumnRef{"T", "C"});
  CHECK(colcol.where[1].rhs_column == ColumnRef{"", "D"});
}

TEST_CASE("join parse", "[sql]") {
  QueryAst q = parse(
      "SELECT * FROM physicsmarks INNER JOIN chemistrymarks "
      "ON physicsmarks.p_id = chemistrymarks.p_id WHERE m1 = 4");
  REQUIRE(q.join.has_value());
  CHECK(q.join->right_table == "CHEMISTRYMARKS");
  CHECK(q.join->left_column == ColumnRef{"PHYSICSMARKS", "P_ID"});
  CHECK(q.join->right_column == ColumnRef{"CHEMISTRYMARKS", "P_ID"});
  CHECK(q.where.size() == 1);
}

TEST_CASE("referenced column count is textual and distinct", "[sql]") {
  CHECK(parse("SELECT * FROM T").referenced_column_count() == 0);
  CHECK(parse("SELECT * FROM T WHERE A = 1 AND A > 0").referenced_column_count() == 1);
  CHECK(parse("SELECT * FROM T WHERE A = 1 AND B = A").referenced_column_count() == 2);
  // qualified and unqualified mentions of the same column count separately
  CHECK(parse("SELECT * FROM T WHERE A = 1 AND T.A = 1").referenced_column_count() == 2);
  CHECK(parse("SELECT * FROM T INNER JOIN U ON T.K = U.K WHERE T.A = 1")
            .referenced_column_count() == 3);
}

TEST_CASE("render emits the canonical form", "[sql]") {
  CHECK(render(parse("select  *  from  t ;")) == "SELECT * FROM T");
  CHECK(render(parse("select * from t where x>=10 and y='ab c'")) ==
        "SELECT * FROM T WHERE X >= 10 AND Y = 'ab c'");
  CHECK(render(parse("select * from a inner join b on a.k=b.k where a.x<-3")) ==
        "SELECT * FROM A INNER JOIN B ON A.K = B.K WHERE A.X < -3");
}

namespace {

ColumnRef random_ref(SplitMix64& rng, bool allow_qualifier) {
  static const std::vector<std::string> tables = {"T1", "T2", "ZED"};
  static const std::vector<std::string> cols = {"A", "B9", "C_X", "MARK", "K"};
  ColumnRef ref;
  ref.column = cols[rng.below(cols.size())];
  if (allow_qualifier && rng.below(2) == 0)
    ref.table = tables[rng.below(tables.size())];
  return ref;
}

QueryAst random_ast(SplitMix64& rng) {
  static const std::vector<std::string> tables = {"T1", "T2", "ZED"};
  QueryAst q;
  q.base_table = tables[rng.below(tables.size())];
  if (rng.below(2) == 0) {
    JoinSpec j;
    j.right_table = tables[rng.below(tables.size())];
    j.left_column = random_ref(rng, true);
    j.right_column = random_ref(rng, true);
    q.join = std::move(j);
  }
  const std::size_t preds = rng.below(4);
  for (std::size_t i = 0; i < preds; ++i) {
    Predicate p;
    p.lhs = random_ref(rng, true);
    p.op = static_cast<CmpOp>(rng.below(5));
    switch (rng.below(3)) {
      case 0:
        p.rhs_value = Value(rng.between(-100, 100));
        break;
      case 1: {
        std::string s;
        for (std::size_t k = rng.below(6); k-- > 0;)
          s += static_cast<char>('a' + rng.below(26));
        s += rng.below(2) ? "Zz" : " q";  // mixed case and spaces survive
        p.rhs_value = Value(std::move(s));
        break;
      }
      default:
        p.rhs_is_column = true;
        p.rhs_column = random_ref(rng, true);
    }
    q.where.push_back(std::move(p));
  }
  return q;
}

}  // namespace

TEST_CASE("parse(render(q)) reproduces q", "[sql]") {
  SplitMix64 rng(20260814);
  for (int i = 0; i < 300; ++i) {
    QueryAst q = random_ast(rng);
    std::string text = render(q);
    QueryAst back = parse(text);
    REQUIRE(back == q);
    REQUIRE(render(back) == text);  // canonical form is a fixed point
  }
}

TEST_CASE("syntax errors carry byte offsets", "[sql]") {
  try {
    parse("SELECT * FROM T WHERE A == 1");
    FAIL("must throw");
  } catch (const Error& e) {
    CHECK(e.code() == errc::syntax_error);
    CHECK(e.offset() == 25);  // the second '='
  }
  try {
    parse("SELEC * FROM T");
    FAIL("must throw");
  } catch (const Error& e) {
    CHECK(e.code() == errc::syntax_error);
    CHECK(e.offset() == 0);
  }
  try {
    parse("SELECT * FROM T WHERE A = 'oops");
    FAIL("must throw");
  } catch (const Error& e) {
    CHECK(e.code() == errc::syntax_error);
    CHECK(e.offset() == 26);  // the opening quote
  }
  CHECK_THROWS_AS(parse(""), Error);
  CHECK_THROWS_AS(parse("SELECT * FROM T extra junk"), Error);
  CHECK_THROWS_AS(parse("SELECT * FROM T WHERE A = ?"), Error);
  CHECK_THROWS_AS(parse("SELECT * FROM T WHERE A = -"), Error);
}

TEST_CASE("unsupported constructs are named as such", "[sql]") {
  auto code_of = [](const std::string& sql) {
    try {
      parse(sql);
    } catch (const Error& e) {
      return e.code();
    }
    return errc::io_error;  // sentinel: no throw
  };
  CHECK(code_of("SELECT A FROM T") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T WHERE A = 1 OR B = 2") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T LEFT JOIN U ON T.K = U.K") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T CROSS JOIN U") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T ORDER BY A") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T GROUP BY A") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T LIMIT 5") == errc::unsupported_construct);
  CHECK(code_of("SELECT * FROM T WHERE (A = 1)") == errc::unsupported_construct);
  CHECK(code_of("SELECT (A) FROM T") == errc::unsupported_construct);
}

TEST_CASE("arbitrary input never crashes the parser", "[sql]") {
  SplitMix64 rng(777);
  const std::string charset =
      "SELECTFROMWHEREANDINERJON*.,;=<>()'- _abcxyz0123456789\t\n";
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const std::size_t len = rng.below(48);
    for (std::size_t k = 0; k < len; ++k) s += charset[rng.below(charset.size())];
    try {
      (void)parse(s);
    } catch (const Error&) {
      // any engine error is acceptable; crashes and foreign exceptions are not
    }
  }
  SUCCEED();
}
