// Stage prompts: persona, action-word instruction, chain-of-thought cue and
// format spec, rendered deterministically so replay cassettes stay stable.
// Templates live in code and can be overridden by plain-text files (four
// sections separated by `---` lines, placeholders {{test_source}},
// {{class_source}}, {{taken_names}}).
#pragma once

#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "testgloss/testlang.hpp"

namespace testgloss {

enum class PromptStage { DataRefinement, PostProcess, PostProcessRelaxed, NameSuggestion };

inline const char* prompt_stage_name(PromptStage s) {
  switch (s) {
    case PromptStage::DataRefinement: return "data_refinement";
    case PromptStage::PostProcess: return "post_process";
    case PromptStage::PostProcessRelaxed: return "post_process_relaxed";
    case PromptStage::NameSuggestion: return "name_suggestion";
  }
  return "?";
}

enum class PromptErrorKind { MissingTemplate, BadTemplate, MissingContext, NoNameFound };

class PromptError : public std::runtime_error {
 public:
  PromptError(PromptErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  PromptErrorKind kind() const { return kind_; }

 private:
  PromptErrorKind kind_;
};

struct PromptTemplate {
  PromptStage stage = PromptStage::PostProcess;
  std::string persona;
  std::string instruction;
  std::string reasoning_cue;
  std::string format_spec;
};

struct PromptContext {
  std::string test_source;
  std::optional<std::string> class_under_test_source;
  std::vector<std::string> taken_names;
  std::optional<std::string> extra_notes;
};

namespace detail {

inline void replace_all(std::string& text, std::string_view needle,
                        std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

inline std::string first_fenced_block(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  std::optional<size_t> open;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).rfind("```", 0) != 0) continue;
    if (!open) {
      open = i;
      continue;
    }
    std::string content;
    for (size_t j = *open + 1; j < i; ++j) content += lines[j] + "\n";
    return content;
  }
  return "";
}

inline PromptTemplate builtin_template(PromptStage stage) {
  PromptTemplate t;
  t.stage = stage;
  switch (stage) {
    case PromptStage::DataRefinement:
      t.persona =
          "You are an experienced software test engineer who chooses realistic, "
          "domain-appropriate test data.";
      t.instruction =
          "Rewrite the literal argument values in the unit test below so that they are "
          "meaningful in the context of the class under test. Keep every statement, every "
          "method call and every variable name exactly as they are; change only literal "
          "values.\n"
          "\n"
          "The unit test:\n"
          "```\n"
          "{{test_source}}\n"
          "```\n"
          "\n"
          "The class under test:\n"
          "```\n"
          "{{class_source}}\n"
          "```";
      t.reasoning_cue =
          "Think step by step about what the class models and which concrete values a "
          "developer working on it would immediately recognize.";
      t.format_spec =
          "Reply with the complete rewritten test method in a single fenced code block, "
          "keeping the method name unchanged. Keeping a value that is already meaningful "
          "is a good outcome.";
      break;
    case PromptStage::PostProcess:
      t.persona =
          "You are a senior software engineer who makes unit tests easy to read.";
      t.instruction =
          "Add explanatory comments to the unit test below and rename its local variables "
          "to descriptive names. Leave the test data and the logic untouched: keep every "
          "statement, every method call and every literal value exactly as they are.\n"
          "\n"
          "The unit test:\n"
          "```\n"
          "{{test_source}}\n"
          "```";
      t.reasoning_cue =
          "Think step by step about what the test sets up, what it exercises and what it "
          "verifies before writing the final version.";
      t.format_spec =
          "Reply with the complete test method in a single fenced code block. Structure "
          "the comments with the Given, When, Then convention: a `// Given ...` line before "
          "the setup, a `// When ...` line before the action and a `// Then ...` line "
          "before the assertions. You may add a short assertion message. Keep the method "
          "name unchanged.";
      break;
    case PromptStage::PostProcessRelaxed:
      t.persona =
          "You are a senior software engineer who makes unit tests easy to read.";
      t.instruction =
          "Add helpful comments to the unit test below and rename its local variables to "
          "descriptive names. Leave the test data and the logic untouched: keep every "
          "statement, every method call and every literal value exactly as they are.\n"
          "\n"
          "The unit test:\n"
          "```\n"
          "{{test_source}}\n"
          "```";
      t.reasoning_cue =
          "Think step by step about what the test sets up, what it exercises and what it "
          "verifies before writing the final version.";
      t.format_spec =
          "Reply with the complete test method in a single fenced code block. Comment it "
          "in whatever style reads best. You may add a short assertion message. Keep the "
          "method name unchanged.";
      break;
    case PromptStage::NameSuggestion:
      t.persona =
          "You are a senior software engineer who names tests after the behaviour they "
          "verify.";
      t.instruction =
          "Deduce a descriptive method name for the unit test below. The name must reflect "
          "the assertions and the scenario, and it must be different from every name in "
          "the taken list.\n"
          "\n"
          "The unit test:\n"
          "```\n"
          "{{test_source}}\n"
          "```\n"
          "\n"
          "Already taken names: {{taken_names}}";
      t.reasoning_cue =
          "Think step by step about the scenario, the action and the expected outcome the "
          "assertions encode.";
      t.format_spec =
          "Reply with only the method name in backticks, in camelCase, starting with "
          "'test', with no parameter list.";
      break;
  }
  return t;
}

inline void validate_template(const PromptTemplate& t) {
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) {
      throw PromptError(PromptErrorKind::BadTemplate,
                        std::string(prompt_stage_name(t.stage)) + " template: " + what);
    }
  };
  require(!t.persona.empty(), "empty persona section");
  require(!t.instruction.empty(), "empty instruction section");
  require(!t.reasoning_cue.empty(), "empty reasoning cue section");
  require(!t.format_spec.empty(), "empty format spec section");
  std::string whole = t.persona + t.instruction + t.reasoning_cue + t.format_spec;
  require(whole.find("{{test_source}}") != std::string::npos,
          "missing {{test_source}} placeholder");
  if (t.stage == PromptStage::DataRefinement) {
    require(whole.find("{{class_source}}") != std::string::npos,
            "missing {{class_source}} placeholder");
  }
  if (t.stage == PromptStage::NameSuggestion) {
    require(whole.find("{{taken_names}}") != std::string::npos,
            "missing {{taken_names}} placeholder");
  }
  if (t.stage == PromptStage::PostProcessRelaxed) {
    require(t.format_spec.find("Given") == std::string::npos,
            "relaxed format spec must not impose a comment structure");
  }
}

}  // namespace detail

class PromptLibrary {
 public:
  static PromptLibrary builtin() {
    PromptLibrary lib;
    for (PromptStage s : {PromptStage::DataRefinement, PromptStage::PostProcess,
                          PromptStage::PostProcessRelaxed, PromptStage::NameSuggestion}) {
      PromptTemplate t = detail::builtin_template(s);
      detail::validate_template(t);
      lib.templates_[index(s)] = std::move(t);
    }
    return lib;
  }

  // Loads one file per stage (<stage-name>.txt); a missing file is a startup
  // error. Files hold the four sections separated by `---` lines.
  static PromptLibrary load_dir(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (PromptStage s : {PromptStage::DataRefinement, PromptStage::PostProcess,
                          PromptStage::PostProcessRelaxed, PromptStage::NameSuggestion}) {
      std::filesystem::path file = dir / (std::string(prompt_stage_name(s)) + ".txt");
      std::ifstream in(file, std::ios::binary);
      if (!in) {
        throw PromptError(PromptErrorKind::MissingTemplate,
                          "missing template file: " + file.string());
      }
      std::ostringstream ss;
      ss << in.rdbuf();
      lib.templates_[index(s)] = parse_template(s, ss.str());
      detail::validate_template(lib.templates_[index(s)]);
    }
    return lib;
  }

  const PromptTemplate& get(PromptStage stage) const { return templates_[index(stage)]; }

  // Deterministic render: persona, instruction (with fenced context blocks),
  // reasoning cue, format spec — byte-identical for identical inputs.
  std::string render(PromptStage stage, const PromptContext& ctx) const {
    if (ctx.test_source.empty()) {
      throw PromptError(PromptErrorKind::MissingContext, "test source must not be empty");
    }
    if (stage == PromptStage::DataRefinement && !ctx.class_under_test_source) {
      throw PromptError(PromptErrorKind::MissingContext,
                        "data refinement requires the class under test source");
    }
    const PromptTemplate& t = get(stage);
    std::string taken;
    if (ctx.taken_names.empty()) {
      taken = "(none)";
    } else {
      for (size_t i = 0; i < ctx.taken_names.size(); ++i) {
        if (i > 0) taken += ", ";
        taken += ctx.taken_names[i];
      }
    }
    auto chomp = [](std::string s) {
      while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
      return s;
    };
    auto substitute = [&](std::string section) {
      detail::replace_all(section, "{{test_source}}", chomp(ctx.test_source));
      detail::replace_all(section, "{{class_source}}",
                          chomp(ctx.class_under_test_source.value_or("")));
      detail::replace_all(section, "{{taken_names}}", taken);
      detail::replace_all(section, "{{extra_notes}}", ctx.extra_notes.value_or(""));
      return section;
    };
    return substitute(t.persona) + "\n\n" + substitute(t.instruction) + "\n\n" +
           substitute(t.reasoning_cue) + "\n\n" + substitute(t.format_spec) + "\n";
  }

 private:
  static size_t index(PromptStage s) { return static_cast<size_t>(s); }

  static PromptTemplate parse_template(PromptStage stage, const std::string& text) {
    std::vector<std::string> sections(1);
    for (const std::string& line : detail::split_lines(text)) {
      if (detail::trim(line) == "---") {
        sections.emplace_back();
      } else {
        sections.back() += line + "\n";
      }
    }
    if (sections.size() != 4) {
      throw PromptError(PromptErrorKind::BadTemplate,
                        std::string(prompt_stage_name(stage)) +
                            " template: expected 4 sections separated by --- lines, got " +
                            std::to_string(sections.size()));
    }
    PromptTemplate t;
    t.stage = stage;
    auto tidy = [](std::string s) {
      while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
      return s;
    };
    t.persona = tidy(sections[0]);
    t.instruction = tidy(sections[1]);
    t.reasoning_cue = tidy(sections[2]);
    t.format_spec = tidy(sections[3]);
    return t;
  }

  std::array<PromptTemplate, 4> templates_;
};

// Pulls the first plausible method name out of a free-form response: a
// fenced block, a backticked token, an identifier followed by '(', or the
// longest camelCase identifier. The result always starts with "test".
inline std::string parse_name_response(const std::string& response) {
  auto sanitize = [](std::string raw) -> std::optional<std::string> {
    std::string clean;
    for (char c : raw) {
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') clean += c;
    }
    while (!clean.empty() && std::isdigit(static_cast<unsigned char>(clean.front()))) {
      clean.erase(clean.begin());
    }
    if (clean.empty() || !is_identifier(clean)) return std::nullopt;
    return clean;
  };

  auto identifiers_of = [](const std::string& text) {
    std::vector<std::pair<std::string, bool>> out;  // (identifier, followed by '(')
    size_t i = 0;
    while (i < text.size()) {
      if (detail::is_ident_start(text[i])) {
        size_t j = i + 1;
        while (j < text.size() && detail::is_ident_char(text[j])) ++j;
        out.emplace_back(text.substr(i, j - i), j < text.size() && text[j] == '(');
        i = j;
      } else {
        ++i;
      }
    }
    return out;
  };

  auto is_camel = [](const std::string& s) {
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      if (std::islower(static_cast<unsigned char>(s[i])) &&
          std::isupper(static_cast<unsigned char>(s[i + 1]))) {
        return true;
      }
    }
    return false;
  };

  auto from_text = [&](const std::string& text) -> std::optional<std::string> {
    // backticked token
    size_t tick = text.find('`');
    while (tick != std::string::npos) {
      size_t end = text.find('`', tick + 1);
      if (end == std::string::npos) break;
      if (auto name = sanitize(text.substr(tick + 1, end - tick - 1))) return name;
      tick = text.find('`', end + 1);
    }
    auto idents = identifiers_of(text);
    // method-call shape, preferring test-prefixed ones
    for (const auto& [ident, called] : idents) {
      if (called && ident.rfind("test", 0) == 0) {
        if (auto name = sanitize(ident)) return name;
      }
    }
    for (const auto& [ident, called] : idents) {
      if (called && ident != "void" && !assert_kind_from(ident)) {
        if (auto name = sanitize(ident)) return name;
      }
    }
    // longest camelCase identifier
    std::string best;
    for (const auto& [ident, called] : idents) {
      if (is_camel(ident) && ident.size() > best.size()) best = ident;
    }
    if (!best.empty()) return sanitize(best);
    return std::nullopt;
  };

  std::optional<std::string> name;
  std::string fenced = detail::first_fenced_block(response);
  if (!fenced.empty()) name = from_text(fenced);
  if (!name) name = from_text(response);
  if (!name) {
    throw PromptError(PromptErrorKind::NoNameFound,
                      "response contains no plausible method name");
  }
  std::string result = *name;
  bool has_prefix = result.size() >= 4 && (result[0] == 't' || result[0] == 'T') &&
                    (result[1] == 'e' || result[1] == 'E') &&
                    (result[2] == 's' || result[2] == 'S') &&
                    (result[3] == 't' || result[3] == 'T');
  if (!has_prefix) {
    if (!result.empty()) {
      result[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(result[0])));
    }
    result = "test" + result;
  }
  return result;
}

}  // namespace testgloss
