// Test-only helpers: seeded random AST generation and corpus loading.
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "testgloss/testlang.hpp"

namespace testgloss::testsupport {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path repo_root() {
  return std::filesystem::path(TESTGLOSS_REPO_ROOT);
}

inline std::vector<TestCase> load_corpus_tests() {
  std::vector<TestCase> tests;
  auto dir = repo_root() / "corpus" / "tests";
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    ParsedFile pf = parse_file(read_file(f));
    for (auto& t : pf.tests) tests.push_back(std::move(t));
  }
  return tests;
}

class AstGen {
 public:
  explicit AstGen(uint64_t seed) : rng_(seed) {}

  TestCase test_case() {
    TestCase tc;
    tc.name = "test" + std::to_string(pick(0, 999));
    int n = pick(1, 7);
    for (int i = 0; i < n; ++i) tc.statements.push_back(statement());
    bool has_real = std::any_of(tc.statements.begin(), tc.statements.end(),
                                [](const Statement& s) { return !is_comment(s); });
    if (!has_real) {
      tc.statements.insert(tc.statements.begin(),
                           Statement{VarDecl{"Budget", fresh_var(), literal()}, {}});
    }
    if (chance(4)) tc.leading_comments.push_back("generated case");
    // trailing comments round-trip only in canonical tail position
    if (chance(5)) tc.statements.push_back(Statement{Comment{"end marker"}, {}});
    return tc;
  }

  Statement statement() {
    Statement st;
    switch (pick(0, 4)) {
      case 0: {
        std::string type = type_name();
        std::string var = fresh_var();
        st.node = VarDecl{type, var, expr(2)};
        break;
      }
      case 1:
        if (!vars_.empty()) {
          st.node = CallStmt{random_var(), method_name(), expr_list(0, 3, 2)};
        } else {
          st.node = CallStmt{"Helper", method_name(), expr_list(0, 3, 2)};
        }
        break;
      case 2: {
        AssertStmt as;
        as.kind = static_cast<AssertKind>(pick(0, 7));
        size_t min = as.kind == AssertKind::Fail              ? 0
                     : (as.kind == AssertKind::Equals || as.kind == AssertKind::Same ||
                        as.kind == AssertKind::NotSame)
                         ? 2
                         : 1;
        as.args = expr_list(static_cast<int>(min), static_cast<int>(min) + 1, 1);
        // a leading string literal would reparse as a message
        if (!as.args.empty()) {
          if (auto* lit = std::get_if<Literal>(&as.args.front().node);
              lit && lit->kind == LiteralKind::String) {
            as.args.front() = Expr{Literal{LiteralKind::Int, "7"}};
          }
        }
        if (chance(3) && !as.args.empty()) as.message = "\"expected outcome\"";
        st.node = as;
        break;
      }
      case 3:
        st.node = Comment{"note " + std::to_string(pick(0, 99))};
        break;
      default:
        st.node = Opaque{"synchronized(lock" + std::to_string(pick(0, 9)) + ") { tick(); }"};
        break;
    }
    if (chance(4) && !std::holds_alternative<Comment>(st.node)) {
      st.attached_comments.push_back("attached " + std::to_string(pick(0, 99)));
    }
    return st;
  }

  Expr expr(int depth) {
    if (depth <= 0 || chance(2)) return literal();
    switch (pick(0, 3)) {
      case 0:
        return Expr{ConstructorCall{type_name(), expr_list(0, 3, depth - 1)}};
      case 1:
        if (!vars_.empty()) {
          return Expr{MethodCall{random_var(), method_name(), expr_list(0, 2, depth - 1)}};
        }
        return literal();
      case 2:
        if (!vars_.empty()) return Expr{VarRef{random_var()}};
        return literal();
      default:
        return Expr{Cast{"byte", {literal()}}};
    }
  }

  Expr literal() {
    switch (pick(0, 4)) {
      case 0: return Expr{Literal{LiteralKind::Int, std::to_string(pick(-50, 50))}};
      case 1: return Expr{Literal{LiteralKind::String, "\"s" + std::to_string(pick(0, 99)) + "\""}};
      case 2: return Expr{Literal{LiteralKind::Boolean, chance(2) ? "true" : "false"}};
      case 3: return Expr{Literal{LiteralKind::Double, std::to_string(pick(0, 9)) + ".5"}};
      default: return Expr{Literal{LiteralKind::Null, "null"}};
    }
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::vector<Expr> expr_list(int lo, int hi, int depth) {
    std::vector<Expr> out;
    int n = pick(lo, hi);
    for (int i = 0; i < n; ++i) out.push_back(expr(depth));
    return out;
  }

  std::string type_name() {
    static const char* kTypes[] = {"WeaponGameData", "Budget", "Rational", "CartItem"};
    return kTypes[pick(0, 3)];
  }
  std::string method_name() {
    static const char* kMethods[] = {"getDmgBonus", "total", "reduce", "apply", "close"};
    return kMethods[pick(0, 4)];
  }
  std::string fresh_var() {
    std::string v = "var" + std::to_string(next_var_++);
    vars_.push_back(v);
    return v;
  }
  std::string random_var() { return vars_[static_cast<size_t>(pick(0, static_cast<int>(vars_.size()) - 1))]; }

  int pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance(int one_in) { return pick(1, one_in) == 1; }

  std::mt19937_64 rng_;
  std::vector<std::string> vars_;
  int next_var_ = 0;
};

}  // namespace testgloss::testsupport
