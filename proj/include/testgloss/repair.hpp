// Hallucination-tolerant handling of raw LLM responses: code extraction,
// prose demotion, bracket balancing, and statement-by-statement alignment of
// a refined test against the original it came from.
#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "testgloss/testlang.hpp"

namespace testgloss {

enum class RepairErrorKind { NoCodeFound, UnbalancedBeyondRepair, NothingSalvageable };

class RepairError : public std::runtime_error {
 public:
  RepairError(RepairErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  RepairErrorKind kind() const { return kind_; }

 private:
  RepairErrorKind kind_;
};

struct RepairAction {
  enum class Kind {
    ExtractedFence,
    DemotedProse,
    BalancedBrackets,
    SkippedStatement,
    ArityFallback,
    SubstitutedOriginal,
  };
  Kind kind;
  int index = 0;       // line number or statement index in the action's input
  std::string detail;  // skipped text, signature, closer count…

  bool operator==(const RepairAction&) const = default;
};

inline const char* repair_action_name(RepairAction::Kind k) {
  switch (k) {
    case RepairAction::Kind::ExtractedFence: return "extracted_fence";
    case RepairAction::Kind::DemotedProse: return "demoted_prose";
    case RepairAction::Kind::BalancedBrackets: return "balanced_brackets";
    case RepairAction::Kind::SkippedStatement: return "skipped_statement";
    case RepairAction::Kind::ArityFallback: return "arity_fallback";
    case RepairAction::Kind::SubstitutedOriginal: return "substituted_original";
  }
  return "?";
}

struct RepairLog {
  std::vector<RepairAction> actions;

  void add(RepairAction::Kind kind, int index, std::string detail = {}) {
    actions.push_back({kind, index, std::move(detail)});
  }
  void merge(const RepairLog& other) {
    actions.insert(actions.end(), other.actions.begin(), other.actions.end());
  }
  int count(RepairAction::Kind kind) const {
    int n = 0;
    for (const auto& a : actions) {
      if (a.kind == kind) ++n;
    }
    return n;
  }
};

namespace detail {

inline bool parses_as_statement(const std::string& trimmed) {
  try {
    LexedLine ll = lex_line(trimmed);
    if (ll.tokens.empty()) return false;
    return parse_statement_tokens(ll.tokens).has_value();
  } catch (const ParseError&) {
    return false;
  }
}

inline bool looks_like_header(const std::string& trimmed) {
  size_t brace = find_open_brace(trimmed);
  std::string head = brace == std::string::npos ? trimmed : trimmed.substr(0, brace);
  try {
    LexedLine ll = lex_line(head, /*loose=*/true);
    return parse_header_tokens(ll.tokens).has_value();
  } catch (const ParseError&) {
    return false;
  }
}

// Structural scaffolding that must never be demoted to a comment.
inline bool is_structural_line(const std::string& trimmed) {
  if (trimmed.empty()) return true;
  if (trimmed[0] == '@') return true;
  if (trimmed == "{" || trimmed == "}" || trimmed == "};") return true;
  return looks_like_header(trimmed);
}

inline bool lexes_as_code(const std::string& trimmed) {
  if (trimmed.empty()) return false;
  if (trimmed.rfind("//", 0) == 0) return true;
  if (is_structural_line(trimmed)) return true;
  if (parses_as_statement(trimmed)) return true;
  if (trimmed.back() == ';' || trimmed.back() == '{' || trimmed.back() == '}') {
    try {
      lex_line(trimmed);
      return true;
    } catch (const ParseError&) {
      return false;
    }
  }
  return false;
}

}  // namespace detail

// Returns the content of the first non-empty fenced code block; without
// fences, the longest maximal run of lines that lex as code.
inline std::string extract_code_block(const std::string& response,
                                      RepairLog* log = nullptr) {
  std::vector<std::string> lines = detail::split_lines(response);

  std::optional<size_t> fence_open;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string trimmed = detail::trim(lines[i]);
    if (trimmed.rfind("```", 0) != 0) continue;
    if (!fence_open) {
      fence_open = i;
      continue;
    }
    // closing fence
    std::string content;
    for (size_t j = *fence_open + 1; j < i; ++j) content += lines[j] + "\n";
    if (!detail::trim(content).empty()) {
      if (log) log->add(RepairAction::Kind::ExtractedFence, static_cast<int>(*fence_open + 1));
      return content;
    }
    fence_open.reset();
  }
  if (fence_open) {
    // unterminated fence: everything after it
    std::string content;
    for (size_t j = *fence_open + 1; j < lines.size(); ++j) content += lines[j] + "\n";
    if (!detail::trim(content).empty()) {
      if (log) log->add(RepairAction::Kind::ExtractedFence, static_cast<int>(*fence_open + 1));
      return content;
    }
  }

  // no usable fence: pick the longest run of code-looking lines
  size_t best_start = 0, best_len = 0;
  size_t run_start = 0, run_len = 0;
  for (size_t i = 0; i <= lines.size(); ++i) {
    bool codey = i < lines.size() && detail::lexes_as_code(detail::trim(lines[i]));
    if (codey) {
      if (run_len == 0) run_start = i;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_start = run_start;
      }
    } else {
      run_len = 0;
    }
  }
  if (best_len == 0) {
    throw RepairError(RepairErrorKind::NoCodeFound, "response contains no code lines");
  }
  std::string content;
  for (size_t j = best_start; j < best_start + best_len; ++j) content += lines[j] + "\n";
  return content;
}

// Rewrites lines that neither lex as a statement nor carry a statement
// terminator into // comments. Already-commented, blank and structural lines
// pass through, which makes the operation idempotent.
inline std::pair<std::string, RepairLog> demote_prose_lines(const std::string& code) {
  RepairLog log;
  std::vector<std::string> lines = detail::split_lines(code);
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string trimmed = detail::trim(lines[i]);
    bool keep = trimmed.empty() || trimmed.rfind("//", 0) == 0 ||
                detail::is_structural_line(trimmed) ||
                detail::parses_as_statement(trimmed) ||
                trimmed.find(';') != std::string::npos;
    if (keep) {
      out += lines[i] + "\n";
    } else {
      out += "// " + trimmed + "\n";
      log.add(RepairAction::Kind::DemotedProse, static_cast<int>(i + 1), trimmed);
    }
  }
  return {out, log};
}

// Appends missing closers in last-open-first-closed order. Brackets inside
// string/char literals and line comments are ignored. Excess closers cannot
// be repaired by appending.
inline std::pair<std::string, RepairLog> balance_brackets(const std::string& code) {
  RepairLog log;
  std::vector<char> stack;
  bool in_string = false, in_char = false, in_comment = false;
  for (size_t i = 0; i < code.size(); ++i) {
    char c = code[i];
    if (in_comment) {
      if (c == '\n') in_comment = false;
      continue;
    }
    if (in_string || in_char) {
      if (c == '\\' && i + 1 < code.size()) {
        ++i;
        continue;
      }
      if ((in_string && c == '"') || (in_char && c == '\'')) in_string = in_char = false;
      if (c == '\n') in_string = in_char = false;  // unterminated literal ends at EOL
      continue;
    }
    switch (c) {
      case '/':
        if (i + 1 < code.size() && code[i + 1] == '/') in_comment = true;
        break;
      case '"': in_string = true; break;
      case '\'': in_char = true; break;
      case '(': case '[': case '{': stack.push_back(c); break;
      case ')': case ']': case '}': {
        char expected = c == ')' ? '(' : c == ']' ? '[' : '{';
        if (stack.empty() || stack.back() != expected) {
          throw RepairError(RepairErrorKind::UnbalancedBeyondRepair,
                            std::string("closer '") + c + "' has no matching opener");
        }
        stack.pop_back();
        break;
      }
      default: break;
    }
  }
  if (stack.empty()) return {code, log};

  // closers in last-open-first-closed order; ')' and ']' belong inside the
  // statement and go before a trailing ';', any '}' run goes at the very end
  std::string closers;
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    closers += *it == '(' ? ')' : *it == '[' ? ']' : '}';
  }
  size_t first_brace = closers.find('}');
  std::string inner = closers.substr(0, first_brace == std::string::npos
                                            ? closers.size()
                                            : first_brace);
  std::string tail = first_brace == std::string::npos ? "" : closers.substr(first_brace);

  std::string out = code;
  if (!inner.empty()) {
    size_t p = out.find_last_not_of(" \t\r\n");
    if (p != std::string::npos && out[p] == ';') {
      out.insert(p, inner);
    } else {
      out += inner;
    }
  }
  out += tail;
  log.add(RepairAction::Kind::BalancedBrackets, 0, std::to_string(closers.size()));
  return {out, log};
}

namespace detail {

// Primary signature of a statement: the call that defines what the statement
// does. Statements without a call (literal declarations) have none.
inline std::optional<CallSignature> primary_signature(
    const Statement& st, const std::set<std::string>& vars) {
  if (const auto* vd = std::get_if<VarDecl>(&st.node)) {
    if (const auto* ctor = std::get_if<ConstructorCall>(&vd->initializer.node)) {
      return CallSignature{CallSignature::Kind::Constructor, ctor->type_name, "",
                           static_cast<int>(ctor->args.size())};
    }
    if (const auto* mc = std::get_if<MethodCall>(&vd->initializer.node)) {
      auto kind = vars.count(mc->receiver) ? CallSignature::Kind::Instance
                                           : CallSignature::Kind::Static;
      return CallSignature{kind, mc->receiver, mc->method,
                           static_cast<int>(mc->args.size())};
    }
    return std::nullopt;
  }
  if (const auto* cs = std::get_if<CallStmt>(&st.node)) {
    auto kind = vars.count(cs->receiver) ? CallSignature::Kind::Instance
                                         : CallSignature::Kind::Static;
    return CallSignature{kind, cs->receiver, cs->method,
                         static_cast<int>(cs->args.size())};
  }
  return std::nullopt;
}

inline bool same_callee(const CallSignature& a, const CallSignature& b) {
  return a.kind == b.kind && a.type_or_receiver == b.type_or_receiver &&
         a.method == b.method;
}

inline std::string signature_text(const CallSignature& sig) {
  std::string out;
  switch (sig.kind) {
    case CallSignature::Kind::Constructor: out = "new " + sig.type_or_receiver; break;
    default: out = sig.type_or_receiver + "." + sig.method; break;
  }
  return out + "/" + std::to_string(sig.arity);
}

struct StatementRefs {
  std::set<std::string> var_refs;   // unambiguous variable uses
  std::set<std::string> receivers;  // may be variables or type names
};

inline void collect_refs(const Expr& e, StatementRefs& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, VarRef>) {
          out.var_refs.insert(node.name);
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          out.receivers.insert(node.receiver);
          for (const auto& a : node.args) collect_refs(a, out);
        } else if constexpr (std::is_same_v<T, ConstructorCall>) {
          for (const auto& a : node.args) collect_refs(a, out);
        } else if constexpr (std::is_same_v<T, Cast>) {
          collect_refs(node.inner.front(), out);
        }
      },
      e.node);
}

inline StatementRefs collect_refs(const Statement& st) {
  StatementRefs out;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, VarDecl>) {
          collect_refs(node.initializer, out);
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          out.receivers.insert(node.receiver);
          for (const auto& a : node.args) collect_refs(a, out);
        } else if constexpr (std::is_same_v<T, AssertStmt>) {
          for (const auto& a : node.args) collect_refs(a, out);
        }
      },
      st.node);
  return out;
}

}  // namespace detail

// Builds the refined test statement by statement against the original's call
// vocabulary. Accepted statements come verbatim from the refined source;
// everything else is either replaced by an original statement or skipped.
inline std::pair<TestCase, RepairLog> align_refinement(const TestCase& original,
                                                       const std::string& refined_source) {
  RepairLog log;

  // tolerate full methods, bare bodies and stray block comments
  std::string cleaned = detail::strip_block_comments(refined_source, nullptr);
  std::vector<std::string> all_lines = detail::split_lines(cleaned);
  std::vector<std::string> body_lines;
  {
    std::optional<size_t> header_at;
    for (size_t i = 0; i < all_lines.size(); ++i) {
      if (detail::looks_like_header(detail::trim(all_lines[i]))) {
        header_at = i;
        break;
      }
    }
    if (!header_at) {
      body_lines = all_lines;
    } else {
      std::string header_line = detail::trim(all_lines[*header_at]);
      size_t brace = detail::find_open_brace(header_line);
      size_t start = *header_at + 1;
      if (brace != std::string::npos) {
        if (brace + 1 < header_line.size()) {
          body_lines.push_back(header_line.substr(brace + 1));
        }
      } else {
        // opening brace expected on one of the next lines
        while (start < all_lines.size() && detail::trim(all_lines[start]).empty()) ++start;
        if (start < all_lines.size()) {
          std::string t = detail::trim(all_lines[start]);
          if (!t.empty() && t[0] == '{') {
            if (t.size() > 1) body_lines.push_back(t.substr(1));
            ++start;
          }
        }
      }
      int depth = 1;
      for (size_t i = start; i < all_lines.size() && depth > 0; ++i) {
        size_t close_pos;
        detail::brace_delta_until_close(all_lines[i], depth, close_pos);
        if (close_pos != std::string::npos) {
          std::string before = detail::trim(all_lines[i].substr(0, close_pos));
          if (!before.empty()) body_lines.push_back(before);
          break;
        }
        body_lines.push_back(all_lines[i]);
      }
    }
  }

  const std::set<CallSignature> vocabulary = signature_set(original);
  std::vector<const Statement*> original_stmts;
  for (const auto& st : original.statements) {
    if (!is_comment(st)) original_stmts.push_back(&st);
  }
  auto original_var_list = declared_vars(original);
  const std::set<std::string> original_vars(original_var_list.begin(),
                                            original_var_list.end());

  TestCase out;
  out.name = original.name;
  out.leading_comments = original.leading_comments;

  std::set<std::string> declared;
  std::vector<std::string> pending_comments;

  auto admit = [&](Statement st) -> bool {
    const auto refs = detail::collect_refs(st);
    for (const auto& v : refs.var_refs) {
      if (!declared.count(v)) return false;
    }
    for (const auto& r : refs.receivers) {
      // a receiver must be a declared variable or a name the original never
      // treated as a variable (a type, for static calls)
      if (!declared.count(r) && original_vars.count(r)) return false;
    }
    if (const auto* vd = std::get_if<VarDecl>(&st.node)) {
      if (declared.count(vd->var_name)) return false;
      declared.insert(vd->var_name);
    }
    std::vector<std::string> attached = std::move(pending_comments);
    pending_comments.clear();
    attached.insert(attached.end(), st.attached_comments.begin(),
                    st.attached_comments.end());
    st.attached_comments = std::move(attached);
    out.statements.push_back(std::move(st));
    return true;
  };

  int position = 0;  // index over candidate statement lines
  for (const std::string& raw : body_lines) {
    std::string trimmed = detail::trim(raw);
    if (trimmed.empty() || trimmed == "}") continue;
    if (trimmed.rfind("//", 0) == 0) {
      pending_comments.push_back(detail::strip_comment_marker(trimmed));
      continue;
    }

    std::optional<Statement> stmt;
    try {
      LexedLine ll = lex_line(trimmed);
      if (ll.tokens.empty() && ll.trailing_comment) {
        pending_comments.push_back(*ll.trailing_comment);
        continue;
      }
      stmt = detail::parse_statement_tokens(ll.tokens);
      if (stmt && ll.trailing_comment) {
        pending_comments.push_back(*ll.trailing_comment);
      }
    } catch (const ParseError&) {
      stmt.reset();
    }

    const int here = position++;
    if (!stmt) {
      if (here < static_cast<int>(original_stmts.size())) {
        if (admit(*original_stmts[static_cast<size_t>(here)])) {
          log.add(RepairAction::Kind::SubstitutedOriginal, here, trimmed);
        } else {
          log.add(RepairAction::Kind::SkippedStatement, here, trimmed);
        }
      } else {
        log.add(RepairAction::Kind::SkippedStatement, here, trimmed);
      }
      continue;
    }

    auto sig = detail::primary_signature(*stmt, declared);
    if (!sig) {
      // pure data statement; nothing to validate against the vocabulary
      if (!admit(std::move(*stmt))) {
        log.add(RepairAction::Kind::SkippedStatement, here, trimmed);
      }
      continue;
    }
    if (vocabulary.count(*sig)) {
      if (!admit(std::move(*stmt))) {
        log.add(RepairAction::Kind::SkippedStatement, here, trimmed);
      }
      continue;
    }
    // same callee, different arity: fall back to the original call
    const CallSignature* by_name = nullptr;
    for (const auto& v : vocabulary) {
      if (detail::same_callee(v, *sig)) {
        by_name = &v;
        break;
      }
    }
    if (by_name) {
      bool substituted = false;
      for (const Statement* orig : original_stmts) {
        auto orig_sig = detail::primary_signature(*orig, original_vars);
        if (orig_sig && detail::same_callee(*orig_sig, *sig)) {
          if (admit(*orig)) {
            log.add(RepairAction::Kind::ArityFallback, here,
                    detail::signature_text(*sig) + " -> " +
                        detail::signature_text(*orig_sig));
            substituted = true;
          }
          break;
        }
      }
      if (!substituted) {
        log.add(RepairAction::Kind::SkippedStatement, here, trimmed);
      }
      continue;
    }
    log.add(RepairAction::Kind::SkippedStatement, here, trimmed);
  }

  for (auto& c : pending_comments) {
    out.statements.push_back(Statement{Comment{std::move(c)}, {}});
  }

  bool has_real = std::any_of(out.statements.begin(), out.statements.end(),
                              [](const Statement& s) { return !is_comment(s); });
  if (!has_real) {
    throw RepairError(RepairErrorKind::NothingSalvageable,
                      "no refined statement survived alignment");
  }
  return {std::move(out), std::move(log)};
}

// Strict mode: after normalization the two tests must agree statement for
// statement — identifiers, comments and assertion messages are free, the
// statements, calls and literals are not. Non-strict mode defers entirely to
// the similarity gate.
inline bool validate_logic_preserved(const TestCase& original, const TestCase& enhanced,
                                     bool strict) {
  if (!strict) return true;
  TestCase a = normalize(original, NormalizeOpts::all());
  TestCase b = normalize(enhanced, NormalizeOpts::all());
  return a.statements == b.statements;
}

// True iff comments starting with Given, When and Then all occur, in that
// relative order (as a subsequence, case-insensitive).
inline bool check_comment_convention(const TestCase& test) {
  auto classify = [](const std::string& text) -> int {
    std::string lower;
    for (char c : text) {
      lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    std::string_view v = lower;
    size_t b = v.find_first_not_of(" \t");
    if (b == std::string_view::npos) return -1;
    v.remove_prefix(b);
    if (v.rfind("given", 0) == 0) return 0;
    if (v.rfind("when", 0) == 0) return 1;
    if (v.rfind("then", 0) == 0) return 2;
    return -1;
  };
  std::vector<int> marks;
  for (const auto& c : test.leading_comments) marks.push_back(classify(c));
  for (const auto& st : test.statements) {
    for (const auto& c : st.attached_comments) marks.push_back(classify(c));
    if (const auto* cm = std::get_if<Comment>(&st.node)) marks.push_back(classify(cm->text));
  }
  int want = 0;
  for (int m : marks) {
    if (m == want) ++want;
    if (want == 3) return true;
  }
  return false;
}

}  // namespace testgloss
