#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jitdb/common.hpp"

namespace jitdb {

/// A column reference, optionally qualified with a table name. Identifiers
/// are case-insensitive and stored uppercase.
struct ColumnRef {
  std::string table;  // empty when unqualified
  std::string column;

  bool operator==(const ColumnRef&) const = default;
  bool operator<(const ColumnRef& o) const {
    return std::tie(table, column) < std::tie(o.table, o.column);
  }

  std::string to_string() const {
    return table.empty() ? column : table + "." + column;
  }
};

/// One conjunct of the WHERE clause: `lhs op rhs` where rhs is either a
/// literal or another column. Only literal comparisons are sargable.
struct Predicate {
  ColumnRef lhs;
  CmpOp op = CmpOp::eq;
  bool rhs_is_column = false;
  Value rhs_value;     // when rhs_is_column == false
  ColumnRef rhs_column;  // when rhs_is_column == true

  bool sargable() const { return !rhs_is_column; }
  bool operator==(const Predicate&) const = default;
};

/// INNER JOIN clause; exactly one equality condition.
struct JoinSpec {
  std::string right_table;
  ColumnRef left_column;
  ColumnRef right_column;

  bool operator==(const JoinSpec&) const = default;
};

struct QueryAst {
  std::string base_table;
  std::optional<JoinSpec> join;
  std::vector<Predicate> where;

  /// Number of distinct columns referenced by the WHERE clause and the join
  /// condition, counted textually (before name resolution).
  std::size_t referenced_column_count() const {
    std::set<ColumnRef> refs;
    for (const auto& p : where) {
      refs.insert(p.lhs);
      if (p.rhs_is_column) refs.insert(p.rhs_column);
    }
    if (join) {
      refs.insert(join->left_column);
      refs.insert(join->right_column);
    }
    return refs.size();
  }

  bool operator==(const QueryAst&) const = default;
};

namespace detail {

enum class TokType {
  ident,
  integer,
  string,
  star,
  dot,
  comma,
  lparen,
  rparen,
  op_eq,
  op_lt,
  op_le,
  op_gt,
  op_ge,
  semicolon,
  end,
};

struct Token {
  TokType type = TokType::end;
  std::string text;       // uppercased for idents, raw for strings
  std::int64_t ival = 0;  // for integers
  std::size_t offset = 0; // byte position in the input
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_ws();
    Token tok;
    tok.offset = pos_;
    if (pos_ >= src_.size()) return tok;

    char c = src_[pos_];
    if (c == '*') return punct(TokType::star);
    if (c == '.') return punct(TokType::dot);
    if (c == ',') return punct(TokType::comma);
    if (c == '(') return punct(TokType::lparen);
    if (c == ')') return punct(TokType::rparen);
    if (c == ';') return punct(TokType::semicolon);
    if (c == '=') return punct(TokType::op_eq);
    if (c == '<') {
      ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        tok.type = TokType::op_le;
      } else {
        tok.type = TokType::op_lt;
      }
      return tok;
    }
    if (c == '>') {
      ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        tok.type = TokType::op_ge;
      } else {
        tok.type = TokType::op_gt;
      }
      return tok;
    }
    if (c == '\'') {
      ++pos_;
      std::string text;
      while (pos_ < src_.size() && src_[pos_] != '\'') text += src_[pos_++];
      if (pos_ >= src_.size())
        fail(errc::syntax_error, "unterminated string literal", tok.offset);
      ++pos_;
      tok.type = TokType::string;
      tok.text = std::move(text);
      return tok;
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      if (c == '-') ++pos_;
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
        fail(errc::syntax_error, "expected digits after '-'", tok.offset);
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      tok.type = TokType::integer;
      tok.text = std::string(src_.substr(start, pos_ - start));
      tok.ival = std::stoll(tok.text);
      return tok;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok.type = TokType::ident;
      tok.text = to_upper(src_.substr(start, pos_ - start));
      return tok;
    }
    fail(errc::syntax_error,
         std::string("unexpected character '") + c + "'", tok.offset);
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  Token punct(TokType t) {
    Token tok;
    tok.offset = pos_++;
    tok.type = t;
    return tok;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { advance(); }

  QueryAst parse() {
    expect_keyword("SELECT");
    if (cur_.type == TokType::lparen)
      fail(errc::unsupported_construct, "subqueries are not supported",
           cur_.offset);
    if (cur_.type != TokType::star)
      fail(errc::unsupported_construct,
           "only SELECT * is supported", cur_.offset);
    advance();
    expect_keyword("FROM");
    QueryAst q;
    q.base_table = expect_ident("table name");

    if (is_keyword("INNER")) {
      advance();
      expect_keyword("JOIN");
      JoinSpec join;
      join.right_table = expect_ident("table name");
      expect_keyword("ON");
      join.left_column = column_ref();
      if (cur_.type != TokType::op_eq)
        fail(errc::syntax_error, "join condition must use '='", cur_.offset);
      advance();
      join.right_column = column_ref();
      q.join = std::move(join);
    } else if (is_keyword("JOIN") || is_keyword("LEFT") || is_keyword("RIGHT") ||
               is_keyword("FULL") || is_keyword("CROSS") || is_keyword("OUTER")) {
      fail(errc::unsupported_construct,
           "only INNER JOIN is supported", cur_.offset);
    }

    if (is_keyword("WHERE")) {
      advance();
      q.where.push_back(predicate());
      while (is_keyword("AND")) {
        advance();
        q.where.push_back(predicate());
      }
      if (is_keyword("OR"))
        fail(errc::unsupported_construct, "OR is not supported", cur_.offset);
    }

    for (const char* kw : {"ORDER", "GROUP", "LIMIT", "HAVING", "UNION"})
      if (is_keyword(kw))
        fail(errc::unsupported_construct,
             std::string(kw) + " is not supported", cur_.offset);

    if (cur_.type == TokType::semicolon) advance();
    if (cur_.type != TokType::end)
      fail(errc::syntax_error, "unexpected trailing input", cur_.offset);
    return q;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  bool is_keyword(std::string_view kw) const {
    return cur_.type == TokType::ident && cur_.text == kw;
  }

  void expect_keyword(std::string_view kw) {
    if (!is_keyword(kw))
      fail(errc::syntax_error, "expected " + std::string(kw), cur_.offset);
    advance();
  }

  std::string expect_ident(const char* what) {
    if (cur_.type != TokType::ident)
      fail(errc::syntax_error, std::string("expected ") + what, cur_.offset);
    std::string text = cur_.text;
    advance();
    return text;
  }

  ColumnRef column_ref() {
    ColumnRef ref;
    ref.column = expect_ident("column name");
    if (cur_.type == TokType::dot) {
      advance();
      ref.table = std::move(ref.column);
      ref.column = expect_ident("column name");
    }
    return ref;
  }

  Predicate predicate() {
    Predicate p;
    if (cur_.type == TokType::lparen)
      fail(errc::unsupported_construct,
           "parenthesized predicates are not supported", cur_.offset);
    p.lhs = column_ref();
    switch (cur_.type) {
      case TokType::op_eq: p.op = CmpOp::eq; break;
      case TokType::op_lt: p.op = CmpOp::lt; break;
      case TokType::op_le: p.op = CmpOp::le; break;
      case TokType::op_gt: p.op = CmpOp::gt; break;
      case TokType::op_ge: p.op = CmpOp::ge; break;
      default:
        fail(errc::syntax_error, "expected comparison operator", cur_.offset);
    }
    advance();
    if (cur_.type == TokType::integer) {
      p.rhs_value = Value(cur_.ival);
      advance();
    } else if (cur_.type == TokType::string) {
      p.rhs_value = Value(cur_.text);
      advance();
    } else if (cur_.type == TokType::ident) {
      p.rhs_is_column = true;
      p.rhs_column = column_ref();
    } else if (cur_.type == TokType::lparen) {
      fail(errc::unsupported_construct, "subqueries are not supported",
           cur_.offset);
    } else {
      fail(errc::syntax_error, "expected literal or column", cur_.offset);
    }
    return p;
  }

  Lexer lex_;
  Token cur_;
};

}  // namespace detail

/// Parses one query of the supported subset. Throws Error with code
/// syntax-error (carrying a byte offset) or unsupported-construct.
inline QueryAst parse(std::string_view sql) {
  return detail::Parser(sql).parse();
}

/// Canonical text form: uppercase keywords and identifiers, single spaces.
/// parse(render(q)) reproduces q exactly.
inline std::string render(const QueryAst& q) {
  std::string out = "SELECT * FROM " + q.base_table;
  if (q.join) {
    out += " INNER JOIN " + q.join->right_table + " ON " +
           q.join->left_column.to_string() + " = " +
           q.join->right_column.to_string();
  }
  if (!q.where.empty()) {
    out += " WHERE ";
    for (std::size_t i = 0; i < q.where.size(); ++i) {
      if (i) out += " AND ";
      const Predicate& p = q.where[i];
      out += p.lhs.to_string();
      out += ' ';
      out += cmp_op_symbol(p.op);
      out += ' ';
      if (p.rhs_is_column) {
        out += p.rhs_column.to_string();
      } else if (is_int(p.rhs_value)) {
        out += std::to_string(as_int(p.rhs_value));
      } else {
        out += '\'' + as_text(p.rhs_value) + '\'';
      }
    }
  }
  return out;
}

}  // namespace jitdb
