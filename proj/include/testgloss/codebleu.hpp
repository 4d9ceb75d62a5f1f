// Code similarity metric gating the post-processing stage: BLEU-style n-gram
// match, keyword-weighted n-gram match, AST subtree match and dataflow match,
// combined as a weighted sum. Comments never contribute: similarity is
// computed on comment-stripped token streams and structure.
#pragma once

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "testgloss/testlang.hpp"

namespace testgloss {

enum class MetricErrorKind { EmptyInput, ParseFailure, WeightSumInvalid };

class MetricError : public std::runtime_error {
 public:
  MetricError(MetricErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  MetricErrorKind kind() const { return kind_; }

 private:
  MetricErrorKind kind_;
};

struct CodeBleuWeights {
  double ngram = 0.25;
  double weighted_ngram = 0.25;
  double ast = 0.25;
  double dataflow = 0.25;

  double sum() const { return ngram + weighted_ngram + ast + dataflow; }
};

struct CodeBleuParams {
  CodeBleuWeights weights;
  int max_n = 4;
  double keyword_weight = 5.0;
};

struct CodeBleuScore {
  double ngram = 0.0;
  double weighted_ngram = 0.0;
  double ast_match = 0.0;
  double dataflow_match = 0.0;
  CodeBleuWeights weights;
  double combined = 0.0;
  bool dataflow_degenerate = false;
};

// Subset-language reserved words plus assertion kinds.
inline const std::set<std::string>& metric_keywords() {
  static const std::set<std::string> kWords = {
      "public",        "void",       "new",        "throws",     "null",
      "true",          "false",      "byte",       "short",      "int",
      "long",          "float",      "double",     "char",       "boolean",
      "assertEquals",  "assertTrue", "assertFalse", "assertNull", "assertNotNull",
      "assertSame",    "assertNotSame", "fail",
  };
  return kWords;
}

namespace detail {

inline std::string ngram_key(std::span<const std::string> tokens, size_t start, int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    if (k > 0) key += '\x1f';
    key += tokens[start + static_cast<size_t>(k)];
  }
  return key;
}

// Modified n-gram precision with per-gram weights (weight of a gram is taken
// from its first token). Zero clipped counts get add-one smoothing on both
// numerator and denominator.
inline double weighted_precision(std::span<const std::string> cand,
                                 std::span<const std::string> ref, int n,
                                 double keyword_weight, bool* usable) {
  if (cand.size() < static_cast<size_t>(n)) {
    *usable = false;
    return 0.0;
  }
  *usable = true;
  auto weight_of = [&](std::span<const std::string> toks, size_t start) {
    return metric_keywords().count(toks[start]) ? keyword_weight : 1.0;
  };
  std::map<std::string, int> ref_counts;
  if (ref.size() >= static_cast<size_t>(n)) {
    for (size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[ngram_key(ref, i, n)];
  }
  std::map<std::string, int> cand_counts;
  std::map<std::string, double> cand_weight;
  for (size_t i = 0; i + n <= cand.size(); ++i) {
    std::string key = ngram_key(cand, i, n);
    ++cand_counts[key];
    cand_weight[key] = weight_of(cand, i);
  }
  double numerator = 0.0, denominator = 0.0;
  for (const auto& [key, count] : cand_counts) {
    double w = cand_weight[key];
    denominator += w * count;
    auto it = ref_counts.find(key);
    int clipped = it == ref_counts.end() ? 0 : std::min(count, it->second);
    numerator += w * clipped;
  }
  if (numerator == 0.0) return (numerator + 1.0) / (denominator + 1.0);
  return numerator / denominator;
}

inline double bleu_core(std::span<const std::string> cand,
                        std::span<const std::string> ref, int max_n,
                        double keyword_weight) {
  if (cand.empty() || ref.empty()) {
    throw MetricError(MetricErrorKind::EmptyInput, "empty token stream");
  }
  if (max_n < 1) throw MetricError(MetricErrorKind::EmptyInput, "max_n must be >= 1");
  double log_sum = 0.0;
  int used = 0;
  for (int n = 1; n <= max_n; ++n) {
    bool usable;
    double p = weighted_precision(cand, ref, n, keyword_weight, &usable);
    if (!usable) continue;
    log_sum += std::log(p);
    ++used;
  }
  double geo = used == 0 ? 0.0 : std::exp(log_sum / used);
  double brevity = std::min(
      1.0, std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size())));
  return brevity * geo;
}

}  // namespace detail

// BLEU-style geometric mean of modified n-gram precisions with a brevity
// penalty of min(1, exp(1 - |ref|/|cand|)).
inline double ngram_match(std::span<const std::string> candidate,
                          std::span<const std::string> reference, int max_n = 4) {
  return detail::bleu_core(candidate, reference, max_n, 1.0);
}

// Same computation with n-grams whose first token is a keyword weighted by
// keyword_weight. A weight of 1 reproduces ngram_match exactly.
inline double weighted_ngram_match(std::span<const std::string> candidate,
                                   std::span<const std::string> reference,
                                   int max_n = 4, double keyword_weight = 5.0) {
  return detail::bleu_core(candidate, reference, max_n, keyword_weight);
}

namespace detail {

inline const char* literal_kind_name(LiteralKind k) {
  switch (k) {
    case LiteralKind::Int: return "int";
    case LiteralKind::Long: return "long";
    case LiteralKind::Float: return "float";
    case LiteralKind::Double: return "double";
    case LiteralKind::String: return "string";
    case LiteralKind::Char: return "char";
    case LiteralKind::Boolean: return "boolean";
    case LiteralKind::Null: return "null";
  }
  return "?";
}

// Serializes an expression subtree with identifier names erased (variables
// become "Var", literal lexemes become their kind). Internal nodes are
// appended to out.
inline std::string expr_subtree(const Expr& e, const std::set<std::string>& vars,
                                std::vector<std::string>* out) {
  std::string sig;
  bool internal = false;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ConstructorCall>) {
          sig = "New:" + node.type_name;
          for (const auto& a : node.args) sig += "(" + expr_subtree(a, vars, out) + ")";
          internal = !node.args.empty();
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          std::string recv = vars.count(node.receiver) ? "Var" : "Type:" + node.receiver;
          sig = "Call:" + node.method + "(" + recv + ")";
          for (const auto& a : node.args) sig += "(" + expr_subtree(a, vars, out) + ")";
          internal = true;  // receiver counts as a child
        } else if constexpr (std::is_same_v<T, Literal>) {
          sig = std::string("Lit:") + literal_kind_name(node.kind);
        } else if constexpr (std::is_same_v<T, VarRef>) {
          sig = "Var";
        } else if constexpr (std::is_same_v<T, Cast>) {
          sig = "Cast:" + node.type_name + "(" +
                expr_subtree(node.inner.front(), vars, out) + ")";
          internal = true;
        }
      },
      e.node);
  if (internal && out) out->push_back(sig);
  return sig;
}

}  // namespace detail

// All rooted subtrees of depth >= 1 across the non-comment statements, as a
// serialized multiset. Variable names are erased so renames are free; type
// and method names are kept. Opaque statements contribute nothing.
inline std::vector<std::string> ast_subtrees(const TestCase& test) {
  std::vector<std::string> out;
  auto var_list = declared_vars(test);
  std::set<std::string> vars(var_list.begin(), var_list.end());
  for (const auto& st : test.statements) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, VarDecl>) {
            std::string sig = "Decl:" + node.type_name + "(" +
                              detail::expr_subtree(node.initializer, vars, &out) + ")";
            out.push_back(sig);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            std::string recv = vars.count(node.receiver) ? "Var" : "Type:" + node.receiver;
            std::string sig = "Call:" + node.method + "(" + recv + ")";
            for (const auto& a : node.args) {
              sig += "(" + detail::expr_subtree(a, vars, &out) + ")";
            }
            out.push_back(sig);
          } else if constexpr (std::is_same_v<T, AssertStmt>) {
            if (node.args.empty()) return;  // bare fail() is a leaf
            std::string sig = std::string("Assert:") + assert_kind_name(node.kind);
            for (const auto& a : node.args) {
              sig += "(" + detail::expr_subtree(a, vars, &out) + ")";
            }
            out.push_back(sig);
          }
        },
        st.node);
  }
  return out;
}

// Fraction of reference subtrees present in the candidate (multiset
// semantics, clipped). An empty reference multiset scores 1.
inline double ast_match(const TestCase& candidate, const TestCase& reference) {
  std::vector<std::string> ref = ast_subtrees(reference);
  if (ref.empty()) return 1.0;
  std::map<std::string, int> cand_counts;
  for (auto& s : ast_subtrees(candidate)) ++cand_counts[s];
  std::map<std::string, int> ref_counts;
  for (auto& s : ref) ++ref_counts[s];
  int matched = 0;
  for (const auto& [sig, count] : ref_counts) {
    auto it = cand_counts.find(sig);
    if (it != cand_counts.end()) matched += std::min(count, it->second);
  }
  return static_cast<double>(matched) / static_cast<double>(ref.size());
}

struct DataflowEdge {
  std::string def_var;   // canonical (alpha-renamed) name
  int stmt_index = 0;    // index in the normalized statement list
  int arg_pos = 0;       // argument slot; -1 for a receiver position
  auto operator<=>(const DataflowEdge&) const = default;
};

namespace detail {

inline void collect_var_uses(const Expr& e, const std::set<std::string>& declared,
                             int stmt_index, int slot, std::set<DataflowEdge>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, VarRef>) {
          if (declared.count(node.name)) out.insert({node.name, stmt_index, slot});
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          if (declared.count(node.receiver)) out.insert({node.receiver, stmt_index, slot});
          for (const auto& a : node.args) collect_var_uses(a, declared, stmt_index, slot, out);
        } else if constexpr (std::is_same_v<T, ConstructorCall>) {
          for (const auto& a : node.args) collect_var_uses(a, declared, stmt_index, slot, out);
        } else if constexpr (std::is_same_v<T, Cast>) {
          collect_var_uses(node.inner.front(), declared, stmt_index, slot, out);
        }
      },
      e.node);
}

}  // namespace detail

// Def-use edges of the alpha-renamed, comment- and message-stripped test.
// A use records the statement index and the top-level argument slot it sits
// in (-1 for receiver positions).
inline std::set<DataflowEdge> dataflow_edges(const TestCase& test) {
  TestCase t = normalize(test, NormalizeOpts::all());
  std::set<DataflowEdge> out;
  std::set<std::string> declared;
  int index = 0;
  for (const auto& st : t.statements) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, VarDecl>) {
            const Expr& init = node.initializer;
            if (const auto* ctor = std::get_if<ConstructorCall>(&init.node)) {
              for (size_t k = 0; k < ctor->args.size(); ++k) {
                detail::collect_var_uses(ctor->args[k], declared, index,
                                         static_cast<int>(k), out);
              }
            } else if (const auto* mc = std::get_if<MethodCall>(&init.node)) {
              if (declared.count(mc->receiver)) out.insert({mc->receiver, index, -1});
              for (size_t k = 0; k < mc->args.size(); ++k) {
                detail::collect_var_uses(mc->args[k], declared, index,
                                         static_cast<int>(k), out);
              }
            } else {
              detail::collect_var_uses(init, declared, index, 0, out);
            }
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            if (declared.count(node.receiver)) out.insert({node.receiver, index, -1});
            for (size_t k = 0; k < node.args.size(); ++k) {
              detail::collect_var_uses(node.args[k], declared, index,
                                       static_cast<int>(k), out);
            }
          } else if constexpr (std::is_same_v<T, AssertStmt>) {
            for (size_t k = 0; k < node.args.size(); ++k) {
              detail::collect_var_uses(node.args[k], declared, index,
                                       static_cast<int>(k), out);
            }
          }
        },
        st.node);
    if (const auto* vd = std::get_if<VarDecl>(&st.node)) declared.insert(vd->var_name);
    ++index;
  }
  return out;
}

// |candidate ∩ reference| / |reference| over def-use edges. A reference with
// no edges scores 1 and is flagged degenerate.
inline double dataflow_match(const TestCase& candidate, const TestCase& reference,
                             bool* degenerate = nullptr) {
  std::set<DataflowEdge> ref = dataflow_edges(reference);
  if (degenerate) *degenerate = ref.empty();
  if (ref.empty()) return 1.0;
  std::set<DataflowEdge> cand = dataflow_edges(candidate);
  int matched = 0;
  for (const auto& e : ref) {
    if (cand.count(e)) ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(ref.size());
}

inline CodeBleuScore codebleu(const TestCase& candidate, const TestCase& reference,
                              const CodeBleuParams& params = {}) {
  if (std::abs(params.weights.sum() - 1.0) > 1e-9 || params.weights.ngram < 0 ||
      params.weights.weighted_ngram < 0 || params.weights.ast < 0 ||
      params.weights.dataflow < 0) {
    throw MetricError(MetricErrorKind::WeightSumInvalid,
                      "component weights must be non-negative and sum to 1");
  }
  std::vector<std::string> cand_tokens = body_token_stream(candidate);
  std::vector<std::string> ref_tokens = body_token_stream(reference);

  CodeBleuScore score;
  score.weights = params.weights;
  score.ngram = ngram_match(cand_tokens, ref_tokens, params.max_n);
  score.weighted_ngram =
      weighted_ngram_match(cand_tokens, ref_tokens, params.max_n, params.keyword_weight);
  score.ast_match = ast_match(candidate, reference);
  score.dataflow_match = dataflow_match(candidate, reference, &score.dataflow_degenerate);
  score.combined = params.weights.ngram * score.ngram +
                   params.weights.weighted_ngram * score.weighted_ngram +
                   params.weights.ast * score.ast_match +
                   params.weights.dataflow * score.dataflow_match;
  return score;
}

// Text-level entry point; reports which side failed to parse.
inline CodeBleuScore codebleu(const std::string& candidate_source,
                              const std::string& reference_source,
                              const CodeBleuParams& params = {}) {
  TestCase cand, ref;
  try {
    cand = parse_test_case(candidate_source);
  } catch (const ParseError& e) {
    throw MetricError(MetricErrorKind::ParseFailure,
                      std::string("candidate does not parse: ") + e.what());
  }
  try {
    ref = parse_test_case(reference_source);
  } catch (const ParseError& e) {
    throw MetricError(MetricErrorKind::ParseFailure,
                      std::string("reference does not parse: ") + e.what());
  }
  return codebleu(cand, ref, params);
}

}  // namespace testgloss
