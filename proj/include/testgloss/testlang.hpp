// testlang: parser, deterministic printer, and analysis utilities for the
// linear Java-like subset language that machine-generated unit tests are
// written in. Anything outside the subset grammar survives as an Opaque
// statement so real-world files never hard-fail.
#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace testgloss {

// ---------------------------------------------------------------------------
// Errors

enum class ParseErrorKind {
  MalformedHeader,
  EmptyBody,
  UnterminatedString,
  UnterminatedBody,
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

// ---------------------------------------------------------------------------
// AST

enum class LiteralKind { Int, Long, Float, Double, String, Char, Boolean, Null };

enum class AssertKind { Equals, True, False, Null, NotNull, Same, NotSame, Fail };

inline const char* assert_kind_name(AssertKind k) {
  switch (k) {
    case AssertKind::Equals: return "assertEquals";
    case AssertKind::True: return "assertTrue";
    case AssertKind::False: return "assertFalse";
    case AssertKind::Null: return "assertNull";
    case AssertKind::NotNull: return "assertNotNull";
    case AssertKind::Same: return "assertSame";
    case AssertKind::NotSame: return "assertNotSame";
    case AssertKind::Fail: return "fail";
  }
  return "?";
}

inline std::optional<AssertKind> assert_kind_from(std::string_view name) {
  static const std::map<std::string_view, AssertKind> kMap = {
      {"assertEquals", AssertKind::Equals},   {"assertTrue", AssertKind::True},
      {"assertFalse", AssertKind::False},     {"assertNull", AssertKind::Null},
      {"assertNotNull", AssertKind::NotNull}, {"assertSame", AssertKind::Same},
      {"assertNotSame", AssertKind::NotSame}, {"fail", AssertKind::Fail},
  };
  auto it = kMap.find(name);
  if (it == kMap.end()) return std::nullopt;
  return it->second;
}

struct Expr;

struct ConstructorCall {
  std::string type_name;
  std::vector<Expr> args;
  bool operator==(const ConstructorCall&) const;
};

struct MethodCall {
  std::string receiver;
  std::string method;
  std::vector<Expr> args;
  bool operator==(const MethodCall&) const;
};

struct Literal {
  LiteralKind kind;
  std::string lexeme;  // re-rendered byte-identically
  bool operator==(const Literal&) const = default;
};

struct VarRef {
  std::string name;
  bool operator==(const VarRef&) const = default;
};

struct Cast {
  std::string type_name;          // primitive type
  std::vector<Expr> inner;        // exactly one element
  bool operator==(const Cast&) const;
};

struct Expr {
  std::variant<ConstructorCall, MethodCall, Literal, VarRef, Cast> node;
  bool operator==(const Expr&) const = default;
};

inline bool ConstructorCall::operator==(const ConstructorCall& o) const {
  return type_name == o.type_name && args == o.args;
}
inline bool MethodCall::operator==(const MethodCall& o) const {
  return receiver == o.receiver && method == o.method && args == o.args;
}
inline bool Cast::operator==(const Cast& o) const {
  return type_name == o.type_name && inner == o.inner;
}

struct VarDecl {
  std::string type_name;
  std::string var_name;
  Expr initializer;
  bool operator==(const VarDecl&) const = default;
};

struct CallStmt {
  std::string receiver;
  std::string method;
  std::vector<Expr> args;
  bool operator==(const CallStmt&) const = default;
};

struct AssertStmt {
  AssertKind kind;
  std::optional<std::string> message;  // raw string lexeme, quotes included
  std::vector<Expr> args;
  bool operator==(const AssertStmt&) const = default;
};

struct Comment {
  std::string text;
  bool operator==(const Comment&) const = default;
};

struct Opaque {
  std::string text;  // preserved verbatim on render
  bool operator==(const Opaque&) const = default;
};

struct Statement {
  std::variant<VarDecl, CallStmt, AssertStmt, Comment, Opaque> node;
  std::vector<std::string> attached_comments;
  bool operator==(const Statement&) const = default;
};

struct TestCase {
  std::string name;
  std::vector<Statement> statements;
  std::vector<std::string> leading_comments;
  std::pair<int, int> source_span{0, 0};

  // Structural equality; source spans are bookkeeping, not structure.
  bool operator==(const TestCase& o) const {
    return name == o.name && statements == o.statements &&
           leading_comments == o.leading_comments;
  }
};

inline bool is_comment(const Statement& s) {
  return std::holds_alternative<Comment>(s.node);
}
inline bool is_opaque(const Statement& s) {
  return std::holds_alternative<Opaque>(s.node);
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// ---------------------------------------------------------------------------
// Lexer

enum class TokenKind { Identifier, Number, String, Char, Punct };

struct Token {
  TokenKind kind;
  std::string text;
  bool operator==(const Token&) const = default;
};

struct LexedLine {
  std::vector<Token> tokens;
  std::optional<std::string> trailing_comment;  // text after a trailing //
};

namespace detail {

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string strip_comment_marker(std::string_view line) {
  std::string t = trim(line);
  if (t.rfind("//", 0) == 0) t = trim(std::string_view(t).substr(2));
  return t;
}

}  // namespace detail

// Lexes one line. In loose mode nothing throws: an unterminated string becomes
// a single token covering the rest of the line and unknown bytes become
// one-character punctuation tokens.
inline LexedLine lex_line(std::string_view line, bool loose = false) {
  LexedLine out;
  size_t i = 0;
  const size_t n = line.size();
  while (i < n) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && line[i + 1] == '/') {
      out.trailing_comment = detail::trim(line.substr(i + 2));
      break;
    }
    if (detail::is_ident_start(c)) {
      size_t j = i + 1;
      while (j < n && detail::is_ident_char(line[j])) ++j;
      out.tokens.push_back({TokenKind::Identifier, std::string(line.substr(i, j - i))});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '.')) {
        // exponent sign: 1.0E-5
        if ((line[j] == 'e' || line[j] == 'E') && j + 1 < n &&
            (line[j + 1] == '+' || line[j + 1] == '-')) {
          j += 2;
          continue;
        }
        ++j;
      }
      out.tokens.push_back({TokenKind::Number, std::string(line.substr(i, j - i))});
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      const char quote = c;
      size_t j = i + 1;
      bool closed = false;
      while (j < n) {
        if (line[j] == '\\' && j + 1 < n) {
          j += 2;
          continue;
        }
        if (line[j] == quote) {
          closed = true;
          ++j;
          break;
        }
        ++j;
      }
      if (!closed) {
        if (!loose) {
          throw ParseError(ParseErrorKind::UnterminatedString,
                           "unterminated " + std::string(quote == '"' ? "string" : "char") +
                               " literal: " + detail::trim(line));
        }
        j = n;
      }
      out.tokens.push_back({quote == '"' ? TokenKind::String : TokenKind::Char,
                            std::string(line.substr(i, j - i))});
      i = j;
      continue;
    }
    out.tokens.push_back({TokenKind::Punct, std::string(1, c)});
    ++i;
  }
  return out;
}

namespace detail {

inline const std::set<std::string>& primitive_types() {
  static const std::set<std::string> kPrims = {"byte",  "short", "int",  "long",
                                               "float", "double", "char", "boolean"};
  return kPrims;
}

class TokenCursor {
 public:
  explicit TokenCursor(const std::vector<Token>& toks) : toks_(toks) {}

  bool done() const { return pos_ >= toks_.size(); }
  const Token* peek(size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }
  const Token* next() { return pos_ < toks_.size() ? &toks_[pos_++] : nullptr; }
  bool accept_punct(char c) {
    const Token* t = peek();
    if (t && t->kind == TokenKind::Punct && t->text.size() == 1 && t->text[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_ident(std::string_view word) {
    const Token* t = peek();
    if (t && t->kind == TokenKind::Identifier && t->text == word) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::optional<std::string> accept_any_ident() {
    const Token* t = peek();
    if (t && t->kind == TokenKind::Identifier) {
      ++pos_;
      return t->text;
    }
    return std::nullopt;
  }
  size_t mark() const { return pos_; }
  void rewind(size_t m) { pos_ = m; }

 private:
  const std::vector<Token>& toks_;
  size_t pos_ = 0;
};

inline LiteralKind classify_number(const std::string& lexeme) {
  char suffix = lexeme.empty() ? '\0' : lexeme.back();
  if (suffix == 'L' || suffix == 'l') return LiteralKind::Long;
  if (suffix == 'F' || suffix == 'f') return LiteralKind::Float;
  if (suffix == 'D' || suffix == 'd') return LiteralKind::Double;
  if (lexeme.find('.') != std::string::npos || lexeme.find('e') != std::string::npos ||
      lexeme.find('E') != std::string::npos) {
    return LiteralKind::Double;
  }
  return LiteralKind::Int;
}

// qualified name: ident ('.' ident)*
inline std::optional<std::string> parse_qualified(TokenCursor& cur) {
  auto first = cur.accept_any_ident();
  if (!first) return std::nullopt;
  std::string name = *first;
  while (true) {
    size_t m = cur.mark();
    if (cur.accept_punct('.')) {
      auto part = cur.accept_any_ident();
      if (!part) {
        cur.rewind(m);
        break;
      }
      name += "." + *part;
    } else {
      break;
    }
  }
  return name;
}

std::optional<Expr> parse_expr(TokenCursor& cur);

inline std::optional<std::vector<Expr>> parse_args(TokenCursor& cur) {
  if (!cur.accept_punct('(')) return std::nullopt;
  std::vector<Expr> args;
  if (cur.accept_punct(')')) return args;
  while (true) {
    auto e = parse_expr(cur);
    if (!e) return std::nullopt;
    args.push_back(std::move(*e));
    if (cur.accept_punct(')')) break;
    if (!cur.accept_punct(',')) return std::nullopt;
  }
  return args;
}

inline std::optional<Expr> parse_expr(TokenCursor& cur) {
  const Token* t = cur.peek();
  if (!t) return std::nullopt;

  // new Type(args)
  if (t->kind == TokenKind::Identifier && t->text == "new") {
    cur.next();
    auto type = parse_qualified(cur);
    if (!type) return std::nullopt;
    auto args = parse_args(cur);
    if (!args) return std::nullopt;
    return Expr{ConstructorCall{*type, std::move(*args)}};
  }

  // (prim) expr  — primitive cast; otherwise transparent grouping
  if (t->kind == TokenKind::Punct && t->text == "(") {
    size_t m = cur.mark();
    cur.next();
    const Token* inner = cur.peek();
    if (inner && inner->kind == TokenKind::Identifier &&
        primitive_types().count(inner->text)) {
      std::string prim = inner->text;
      cur.next();
      if (cur.accept_punct(')')) {
        auto operand = parse_expr(cur);
        if (!operand) return std::nullopt;
        return Expr{Cast{prim, {std::move(*operand)}}};
      }
    }
    cur.rewind(m);
    cur.next();  // consume '('
    auto grouped = parse_expr(cur);
    if (!grouped || !cur.accept_punct(')')) return std::nullopt;
    return grouped;
  }

  // negative numeric literal
  if (t->kind == TokenKind::Punct && t->text == "-") {
    const Token* num = cur.peek(1);
    if (num && num->kind == TokenKind::Number) {
      cur.next();
      cur.next();
      std::string lexeme = "-" + num->text;
      return Expr{Literal{classify_number(num->text), lexeme}};
    }
    return std::nullopt;
  }

  if (t->kind == TokenKind::Number) {
    cur.next();
    return Expr{Literal{classify_number(t->text), t->text}};
  }
  if (t->kind == TokenKind::String) {
    cur.next();
    return Expr{Literal{LiteralKind::String, t->text}};
  }
  if (t->kind == TokenKind::Char) {
    cur.next();
    return Expr{Literal{LiteralKind::Char, t->text}};
  }

  if (t->kind == TokenKind::Identifier) {
    if (t->text == "true" || t->text == "false") {
      cur.next();
      return Expr{Literal{LiteralKind::Boolean, t->text}};
    }
    if (t->text == "null") {
      cur.next();
      return Expr{Literal{LiteralKind::Null, t->text}};
    }
    // receiver.method(args) or plain variable reference
    size_t m = cur.mark();
    std::string name = t->text;
    cur.next();
    if (cur.accept_punct('.')) {
      auto method = cur.accept_any_ident();
      if (method) {
        auto args = parse_args(cur);
        if (args) return Expr{MethodCall{name, *method, std::move(*args)}};
      }
      cur.rewind(m);
      cur.next();
    }
    return Expr{VarRef{name}};
  }
  return std::nullopt;
}

inline size_t min_assert_arity(AssertKind k) {
  switch (k) {
    case AssertKind::Equals:
    case AssertKind::Same:
    case AssertKind::NotSame: return 2;
    case AssertKind::Fail: return 0;
    default: return 1;
  }
}

// Parses a full statement from the token list; all tokens must be consumed.
inline std::optional<Statement> parse_statement_tokens(const std::vector<Token>& tokens) {
  if (tokens.empty()) return std::nullopt;
  TokenCursor cur(tokens);

  // assertion, optionally qualified with Assert. / org.junit.Assert.
  {
    size_t m = cur.mark();
    size_t skip = 0;
    const Token* t0 = cur.peek();
    if (t0 && t0->kind == TokenKind::Identifier) {
      if (t0->text == "Assert") {
        skip = 1;
      } else if (t0->text == "org") {
        // org.junit.Assert.
        if (cur.peek(1) && cur.peek(1)->text == "." && cur.peek(2) &&
            cur.peek(2)->text == "junit" && cur.peek(3) && cur.peek(3)->text == "." &&
            cur.peek(4) && cur.peek(4)->text == "Assert") {
          skip = 5;
        }
      }
    }
    for (size_t i = 0; i < skip; ++i) cur.next();
    if (skip > 0 && !cur.accept_punct('.')) {
      cur.rewind(m);
    } else {
      const Token* kindTok = cur.peek();
      std::optional<AssertKind> kind;
      if (kindTok && kindTok->kind == TokenKind::Identifier) {
        kind = assert_kind_from(kindTok->text);
      }
      if (kind) {
        cur.next();
        auto args = parse_args(cur);
        if (args && cur.accept_punct(';') && cur.done()) {
          AssertStmt st{*kind, std::nullopt, std::move(*args)};
          if (st.args.size() > min_assert_arity(st.kind) && !st.args.empty()) {
            if (auto* lit = std::get_if<Literal>(&st.args.front().node);
                lit && lit->kind == LiteralKind::String) {
              st.message = lit->lexeme;
              st.args.erase(st.args.begin());
            }
          }
          return Statement{std::move(st), {}};
        }
      }
      cur.rewind(m);
    }
  }

  // variable declaration: Type name = expr;
  {
    size_t m = cur.mark();
    auto type = parse_qualified(cur);
    if (type) {
      auto name = cur.accept_any_ident();
      if (name && cur.accept_punct('=')) {
        auto init = parse_expr(cur);
        if (init && cur.accept_punct(';') && cur.done()) {
          return Statement{VarDecl{*type, *name, std::move(*init)}, {}};
        }
      }
    }
    cur.rewind(m);
  }

  // call statement: receiver.method(args);
  {
    size_t m = cur.mark();
    auto recv = cur.accept_any_ident();
    if (recv && cur.accept_punct('.')) {
      auto method = cur.accept_any_ident();
      if (method) {
        auto args = parse_args(cur);
        if (args && cur.accept_punct(';') && cur.done()) {
          return Statement{CallStmt{*recv, *method, std::move(*args)}, {}};
        }
      }
    }
    cur.rewind(m);
  }

  return std::nullopt;
}

struct HeaderInfo {
  std::string name;
  bool has_open_brace = false;
};

// public void <name>() [throws X[, Y…]] [{]
inline std::optional<HeaderInfo> parse_header_tokens(const std::vector<Token>& tokens) {
  TokenCursor cur(tokens);
  if (!cur.accept_ident("public")) return std::nullopt;
  if (!cur.accept_ident("void")) return std::nullopt;
  auto name = cur.accept_any_ident();
  if (!name) return std::nullopt;
  if (!cur.accept_punct('(') || !cur.accept_punct(')')) return std::nullopt;
  if (cur.accept_ident("throws")) {
    if (!parse_qualified(cur)) return std::nullopt;
    while (cur.accept_punct(',')) {
      if (!parse_qualified(cur)) return std::nullopt;
    }
  }
  HeaderInfo info{*name, false};
  if (cur.accept_punct('{')) info.has_open_brace = true;
  if (!cur.done()) return std::nullopt;
  return info;
}

// Brace depth transitions for one line, skipping strings, chars and comments.
inline int brace_delta_until_close(std::string_view line, int& depth,
                                   size_t& close_pos) {
  close_pos = std::string_view::npos;
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') break;
    if (c == '"' || c == '\'') {
      char quote = c;
      ++i;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          i += 2;
          continue;
        }
        if (line[i] == quote) {
          ++i;
          break;
        }
        ++i;
      }
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}') {
      --depth;
      if (depth == 0) {
        close_pos = i;
        return depth;
      }
    }
    ++i;
  }
  return depth;
}

// First '{' outside any string, char or line comment.
inline size_t find_open_brace(std::string_view line) {
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') return std::string_view::npos;
    if (c == '"' || c == '\'') {
      char quote = c;
      ++i;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          i += 2;
          continue;
        }
        if (line[i] == quote) {
          ++i;
          break;
        }
        ++i;
      }
      continue;
    }
    if (c == '{') return i;
    ++i;
  }
  return std::string_view::npos;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string_view line = text.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.emplace_back(line);
      start = i + 1;
    }
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

// Removes /* … */ blocks (string-aware); records one warning per block.
inline std::string strip_block_comments(std::string_view text,
                                        std::vector<std::string>* warnings) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  bool in_string = false, in_char = false, in_line_comment = false;
  while (i < text.size()) {
    char c = text[i];
    if (in_line_comment) {
      out += c;
      if (c == '\n') in_line_comment = false;
      ++i;
      continue;
    }
    if (in_string || in_char) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) {
        out += text[i + 1];
        i += 2;
        continue;
      }
      if ((in_string && c == '"') || (in_char && c == '\'')) in_string = in_char = false;
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      in_line_comment = true;
      out += c;
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      size_t end = text.find("*/", i + 2);
      if (warnings) warnings->push_back("block comment discarded");
      if (end == std::string_view::npos) {
        i = text.size();
      } else {
        // keep newlines so line numbers stay meaningful
        for (size_t j = i; j < end + 2; ++j) {
          if (text[j] == '\n') out += '\n';
        }
        i = end + 2;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '\'') in_char = true;
    out += c;
    ++i;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing

struct ParsedFile {
  std::vector<TestCase> tests;
  std::vector<std::string> warnings;
};

// Parses every test method in the text. Throws ParseError only for defects
// that make the file unreadable as a whole (unterminated string/body);
// individual junk lines inside a body degrade to Opaque statements.
inline ParsedFile parse_file(std::string_view source) {
  ParsedFile out;
  std::string cleaned = detail::strip_block_comments(source, &out.warnings);
  std::vector<std::string> lines = detail::split_lines(cleaned);

  std::vector<std::string> leading;
  size_t i = 0;
  while (i < lines.size()) {
    std::string trimmed = detail::trim(lines[i]);
    if (trimmed.empty()) {
      ++i;
      continue;
    }
    if (trimmed.rfind("//", 0) == 0) {
      leading.push_back(detail::strip_comment_marker(trimmed));
      ++i;
      continue;
    }
    if (!trimmed.empty() && trimmed[0] == '@') {
      ++i;
      continue;
    }

    size_t brace = detail::find_open_brace(trimmed);
    std::string header_text = brace == std::string::npos ? trimmed : trimmed.substr(0, brace);
    std::string first_segment;
    LexedLine lexed = lex_line(header_text);
    auto header = detail::parse_header_tokens(lexed.tokens);
    if (!header) {
      out.warnings.push_back("ignored line outside any test method: " + trimmed);
      leading.clear();
      ++i;
      continue;
    }

    TestCase tc;
    tc.name = header->name;
    tc.leading_comments = std::move(leading);
    leading.clear();
    tc.source_span.first = static_cast<int>(i + 1);
    if (brace != std::string::npos) first_segment = trimmed.substr(brace + 1);
    ++i;

    if (brace == std::string::npos) {
      while (i < lines.size() && detail::trim(lines[i]).empty()) ++i;
      if (i >= lines.size()) {
        throw ParseError(ParseErrorKind::MalformedHeader,
                         "method header for '" + tc.name + "' has no opening brace");
      }
      std::string next = detail::trim(lines[i]);
      if (next.empty() || next[0] != '{') {
        throw ParseError(ParseErrorKind::MalformedHeader,
                         "method header for '" + tc.name + "' has no opening brace");
      }
      first_segment = next.substr(1);
      ++i;
    }

    int depth = 1;
    std::vector<std::string> pending;
    bool closed = false;
    int real_statements = 0;
    bool on_first_segment = true;
    auto process_segment = [&](const std::string& raw) {
      size_t close_pos;
      detail::brace_delta_until_close(raw, depth, close_pos);
      std::string body_part = raw;
      if (close_pos != std::string::npos) {
        body_part = raw.substr(0, close_pos);
        closed = true;
      }
      std::string trimmed_part = detail::trim(body_part);
      if (trimmed_part.empty()) return;
      if (trimmed_part.rfind("//", 0) == 0) {
        pending.push_back(detail::strip_comment_marker(trimmed_part));
        return;
      }
      LexedLine ll = lex_line(trimmed_part);
      if (ll.tokens.empty() && ll.trailing_comment) {
        pending.push_back(*ll.trailing_comment);
        return;
      }
      auto stmt = detail::parse_statement_tokens(ll.tokens);
      if (stmt) {
        stmt->attached_comments = std::move(pending);
        pending.clear();
        if (ll.trailing_comment) {
          stmt->attached_comments.push_back(*ll.trailing_comment);
        }
        tc.statements.push_back(std::move(*stmt));
        ++real_statements;
      } else {
        Statement op{Opaque{trimmed_part}, std::move(pending)};
        pending.clear();
        tc.statements.push_back(std::move(op));
        ++real_statements;
      }
    };

    while (true) {
      if (on_first_segment) {
        process_segment(first_segment);
        on_first_segment = false;
        tc.source_span.second = static_cast<int>(i);
        if (closed) break;
        continue;
      }
      if (i >= lines.size()) break;
      process_segment(lines[i]);
      tc.source_span.second = static_cast<int>(i + 1);
      ++i;
      if (closed) break;
    }
    if (!closed) {
      throw ParseError(ParseErrorKind::UnterminatedBody,
                       "test method '" + tc.name + "' never closes its body");
    }
    for (auto& c : pending) {
      tc.statements.push_back(Statement{Comment{std::move(c)}, {}});
    }
    if (real_statements == 0) {
      throw ParseError(ParseErrorKind::EmptyBody,
                       "test method '" + tc.name + "' has an empty body");
    }
    out.tests.push_back(std::move(tc));
  }
  return out;
}

// Parses exactly one test method (the first one found).
inline TestCase parse_test_case(std::string_view source) {
  ParsedFile f = parse_file(source);
  if (f.tests.empty()) {
    throw ParseError(ParseErrorKind::MalformedHeader, "no method signature found");
  }
  return std::move(f.tests.front());
}

// ---------------------------------------------------------------------------
// Rendering

enum class RenderStyle { WithComments, Stripped };

namespace detail {

inline void render_expr(const Expr& e, std::string& out);

inline void render_args(const std::vector<Expr>& args, std::string& out) {
  out += '(';
  for (size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ", ";
    render_expr(args[i], out);
  }
  out += ')';
}

inline void render_expr(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ConstructorCall>) {
          out += "new " + node.type_name;
          render_args(node.args, out);
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          out += node.receiver + "." + node.method;
          render_args(node.args, out);
        } else if constexpr (std::is_same_v<T, Literal>) {
          out += node.lexeme;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          out += node.name;
        } else if constexpr (std::is_same_v<T, Cast>) {
          out += "(" + node.type_name + ")";
          render_expr(node.inner.front(), out);
        }
      },
      e.node);
}

}  // namespace detail

// Single-line canonical source of one statement (comments not included).
inline std::string statement_source(const Statement& s) {
  std::string out;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, VarDecl>) {
          out += node.type_name + " " + node.var_name + " = ";
          detail::render_expr(node.initializer, out);
          out += ';';
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          out += node.receiver + "." + node.method;
          detail::render_args(node.args, out);
          out += ';';
        } else if constexpr (std::is_same_v<T, AssertStmt>) {
          out += assert_kind_name(node.kind);
          out += '(';
          bool first = true;
          if (node.message) {
            out += *node.message;
            first = false;
          }
          for (const auto& a : node.args) {
            if (!first) out += ", ";
            detail::render_expr(a, out);
            first = false;
          }
          out += ");";
        } else if constexpr (std::is_same_v<T, Comment>) {
          out += "// " + node.text;
        } else if constexpr (std::is_same_v<T, Opaque>) {
          out += node.text;
        }
      },
      s.node);
  return out;
}

// Deterministic printer: the same AST always yields byte-identical text.
inline std::string render(const TestCase& test, RenderStyle style) {
  std::string out;
  const bool with_comments = style == RenderStyle::WithComments;
  if (with_comments) {
    for (const auto& c : test.leading_comments) out += "// " + c + "\n";
  }
  out += "@Test\n";
  out += "public void " + test.name + "() {\n";
  for (const auto& st : test.statements) {
    if (is_comment(st) && !with_comments) continue;
    if (with_comments) {
      for (const auto& c : st.attached_comments) out += "    // " + c + "\n";
    }
    out += "    " + statement_source(st) + "\n";
  }
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizeOpts {
  bool alpha_rename = false;
  bool strip_comments = false;
  bool strip_assert_messages = false;

  static NormalizeOpts all() { return {true, true, true}; }
};

namespace detail {

inline void rename_in_expr(Expr& e, const std::map<std::string, std::string>& names) {
  std::visit(
      [&](auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ConstructorCall>) {
          for (auto& a : node.args) rename_in_expr(a, names);
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          if (auto it = names.find(node.receiver); it != names.end()) {
            node.receiver = it->second;
          }
          for (auto& a : node.args) rename_in_expr(a, names);
        } else if constexpr (std::is_same_v<T, VarRef>) {
          if (auto it = names.find(node.name); it != names.end()) node.name = it->second;
        } else if constexpr (std::is_same_v<T, Cast>) {
          rename_in_expr(node.inner.front(), names);
        }
      },
      e.node);
}

}  // namespace detail

inline std::vector<std::string> declared_vars(const TestCase& test) {
  std::vector<std::string> vars;
  for (const auto& st : test.statements) {
    if (const auto* vd = std::get_if<VarDecl>(&st.node)) vars.push_back(vd->var_name);
  }
  return vars;
}

inline TestCase normalize(const TestCase& test, const NormalizeOpts& opts) {
  TestCase out = test;
  if (opts.strip_comments) {
    out.leading_comments.clear();
    std::vector<Statement> kept;
    kept.reserve(out.statements.size());
    for (auto& st : out.statements) {
      if (is_comment(st)) continue;
      st.attached_comments.clear();
      kept.push_back(std::move(st));
    }
    out.statements = std::move(kept);
  }
  if (opts.strip_assert_messages) {
    for (auto& st : out.statements) {
      if (auto* as = std::get_if<AssertStmt>(&st.node)) as->message.reset();
    }
  }
  if (opts.alpha_rename) {
    std::map<std::string, std::string> names;
    int counter = 0;
    for (const auto& st : out.statements) {
      if (const auto* vd = std::get_if<VarDecl>(&st.node)) {
        if (!names.count(vd->var_name)) {
          names[vd->var_name] = "v" + std::to_string(counter++);
        }
      }
    }
    for (auto& st : out.statements) {
      std::visit(
          [&](auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, VarDecl>) {
              node.var_name = names.at(node.var_name);
              detail::rename_in_expr(node.initializer, names);
            } else if constexpr (std::is_same_v<T, CallStmt>) {
              if (auto it = names.find(node.receiver); it != names.end()) {
                node.receiver = it->second;
              }
              for (auto& a : node.args) detail::rename_in_expr(a, names);
            } else if constexpr (std::is_same_v<T, AssertStmt>) {
              for (auto& a : node.args) detail::rename_in_expr(a, names);
            }
          },
          st.node);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Call signatures

struct CallSignature {
  enum class Kind { Constructor, Instance, Static };
  Kind kind;
  std::string type_or_receiver;  // constructor/static: type; instance: receiver var
  std::string method;            // empty for constructors
  int arity = 0;

  auto operator<=>(const CallSignature&) const = default;
};

namespace detail {

inline void collect_signatures(const Expr& e, const std::set<std::string>& vars,
                               std::set<CallSignature>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ConstructorCall>) {
          out.insert({CallSignature::Kind::Constructor, node.type_name, "",
                      static_cast<int>(node.args.size())});
          for (const auto& a : node.args) collect_signatures(a, vars, out);
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          auto kind = vars.count(node.receiver) ? CallSignature::Kind::Instance
                                                : CallSignature::Kind::Static;
          out.insert({kind, node.receiver, node.method, static_cast<int>(node.args.size())});
          for (const auto& a : node.args) collect_signatures(a, vars, out);
        } else if constexpr (std::is_same_v<T, Cast>) {
          collect_signatures(node.inner.front(), vars, out);
        }
      },
      e.node);
}

}  // namespace detail

// Every call signature appearing in any statement or initializer. Opaque
// statements and assertion kinds themselves contribute nothing; expressions
// inside assertion arguments do.
inline std::set<CallSignature> signature_set(const TestCase& test) {
  std::set<CallSignature> out;
  auto var_list = declared_vars(test);
  std::set<std::string> vars(var_list.begin(), var_list.end());
  for (const auto& st : test.statements) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, VarDecl>) {
            detail::collect_signatures(node.initializer, vars, out);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            auto kind = vars.count(node.receiver) ? CallSignature::Kind::Instance
                                                  : CallSignature::Kind::Static;
            out.insert(
                {kind, node.receiver, node.method, static_cast<int>(node.args.size())});
            for (const auto& a : node.args) detail::collect_signatures(a, vars, out);
          } else if constexpr (std::is_same_v<T, AssertStmt>) {
            for (const auto& a : node.args) detail::collect_signatures(a, vars, out);
          }
        },
        st.node);
  }
  return out;
}

// Number of non-comment statements.
inline int total_length(const TestCase& test) {
  int n = 0;
  for (const auto& st : test.statements) {
    if (!is_comment(st)) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Token stream for similarity metrics: non-comment statements only, Opaque
// text lexed loosely so arbitrary bytes still contribute tokens.

inline std::vector<std::string> body_token_stream(const TestCase& test) {
  std::vector<std::string> tokens;
  for (const auto& st : test.statements) {
    if (is_comment(st)) continue;
    LexedLine ll = lex_line(statement_source(st), /*loose=*/true);
    for (auto& t : ll.tokens) tokens.push_back(std::move(t.text));
  }
  return tokens;
}

}  // namespace testgloss
