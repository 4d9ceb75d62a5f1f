#include "testgloss/repair.hpp"

#include <gtest/gtest.h>

#include "support/gen.hpp"
#include "testgloss/testlang.hpp"

using namespace testgloss;

namespace {

TEST(ExtractCode, FirstFencedBlockWins) {
  RepairLog log;
  std::string code = extract_code_block("Here is the test:\n```\nint a = 5;\n```", &log);
  EXPECT_EQ(code, "int a = 5;\n");
  EXPECT_EQ(log.count(RepairAction::Kind::ExtractedFence), 1);
}

TEST(ExtractCode, LanguageTagsAndSecondBlocksIgnored) {
  std::string code = extract_code_block(
      "```java\nint a = 1;\n```\nand also\n```\nint b = 2;\n```");
  EXPECT_EQ(code, "int a = 1;\n");
}

TEST(ExtractCode, LongestCodeRunWithoutFences) {
  std::string response =
      "Sure! The improved test follows.\n"
      "int a = 5;\n"
      "Budget b = new Budget(a, 2);\n"
      "assertEquals(7, b.total());\n"
      "Hope that helps; let me know.\n";
  std::string code = extract_code_block(response);
  EXPECT_EQ(code,
            "int a = 5;\n"
            "Budget b = new Budget(a, 2);\n"
            "assertEquals(7, b.total());\n");
}

TEST(ExtractCode, PureProseIsAnError) {
  try {
    extract_code_block("I am not able to write that test for you.");
    FAIL() << "expected RepairError";
  } catch (const RepairError& e) {
    EXPECT_EQ(e.kind(), RepairErrorKind::NoCodeFound);
  }
}

TEST(ExtractCode, EmptyFenceFallsBackToRunScan) {
  std::string code = extract_code_block("```\n```\nint a = 5;\n");
  EXPECT_EQ(code, "int a = 5;\n");
}

TEST(DemoteProse, ProseLineBecomesComment) {
  auto [code, log] = demote_prose_lines("This test checks equality\nint a = 5;\n");
  EXPECT_EQ(code, "// This test checks equality\nint a = 5;\n");
  ASSERT_EQ(log.actions.size(), 1u);
  EXPECT_EQ(log.actions[0].kind, RepairAction::Kind::DemotedProse);
  EXPECT_EQ(log.actions[0].index, 1);
}

TEST(DemoteProse, ValidCodeUntouchedWithEmptyLog) {
  std::string input =
      "@Test\n"
      "public void t() {\n"
      "    int a = 5;\n"
      "    assertEquals(5, a);\n"
      "}\n";
  auto [code, log] = demote_prose_lines(input);
  EXPECT_EQ(code, input);
  EXPECT_TRUE(log.actions.empty());
}

TEST(DemoteProse, ExactlyTwoActionsOnMixedInput) {
  auto [code, log] = demote_prose_lines(
      "First we create the budget\n"
      "Budget b = new Budget(1, 2);\n"
      "b.add(5);\n"
      "Then we verify the total\n"
      "assertEquals(8, b.total());\n");
  EXPECT_EQ(log.count(RepairAction::Kind::DemotedProse), 2);
  EXPECT_NE(code.find("// First we create the budget"), std::string::npos);
  EXPECT_NE(code.find("// Then we verify the total"), std::string::npos);
}

TEST(DemoteProse, Idempotent) {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    testsupport::AstGen gen(seed + 2200);
    std::string text = render(gen.test_case(), RenderStyle::WithComments) +
                       "prose tail line number " + std::to_string(seed) + "\n";
    auto [once, log1] = demote_prose_lines(text);
    auto [twice, log2] = demote_prose_lines(once);
    EXPECT_EQ(once, twice) << "seed " << seed;
    EXPECT_TRUE(log2.actions.empty()) << "seed " << seed;
  }
}

TEST(BalanceBrackets, AppendsOneMissingCloser) {
  auto [code, log] = balance_brackets("foo(bar(1);");
  EXPECT_EQ(code, "foo(bar(1));");
  ASSERT_EQ(log.actions.size(), 1u);
  EXPECT_EQ(log.actions[0].kind, RepairAction::Kind::BalancedBrackets);
  EXPECT_EQ(log.actions[0].detail, "1");
}

TEST(BalanceBrackets, BalancedInputUnchanged) {
  std::string input = "public void t() {\n    int a = (int)5;\n}\n";
  auto [code, log] = balance_brackets(input);
  EXPECT_EQ(code, input);
  EXPECT_TRUE(log.actions.empty());
}

TEST(BalanceBrackets, ExcessClosersBeyondRepair) {
  try {
    balance_brackets("}}");
    FAIL() << "expected RepairError";
  } catch (const RepairError& e) {
    EXPECT_EQ(e.kind(), RepairErrorKind::UnbalancedBeyondRepair);
  }
}

TEST(BalanceBrackets, BracketsInsideLiteralsAndCommentsIgnored) {
  std::string input = "String s = \"){}(\";\n// stray ) in comment\nchar c = '(';\n";
  auto [code, log] = balance_brackets(input);
  EXPECT_EQ(code, input);
  EXPECT_TRUE(log.actions.empty());
}

TEST(BalanceBrackets, LastOpenFirstClosedOrder) {
  auto [code, log] = balance_brackets("a({[1");
  EXPECT_EQ(code, "a({[1]})");
}

TEST(BalanceBrackets, OnlyAddsClosersNeverRemovesTokens) {
  auto is_closer = [](const std::string& t) { return t == ")" || t == "]" || t == "}"; };
  for (uint64_t seed = 0; seed < 60; ++seed) {
    testsupport::AstGen gen(seed + 3100);
    std::string text = render(gen.test_case(), RenderStyle::Stripped);
    // drop every closing brace/paren after the midpoint
    std::string broken;
    for (size_t i = 0; i < text.size(); ++i) {
      if (i > text.size() / 2 && (text[i] == ')' || text[i] == '}')) continue;
      broken += text[i];
    }
    std::string repaired;
    try {
      repaired = balance_brackets(broken).first;
    } catch (const RepairError&) {
      continue;  // a dropped closer can expose an excess one
    }
    // the original token sequence survives in order; additions are closers
    std::vector<std::string> before, after;
    for (const auto& line : {broken}) {
      for (const auto& ln : testgloss::detail::split_lines(line)) {
        for (auto& t : lex_line(ln, true).tokens) before.push_back(t.text);
      }
    }
    for (const auto& ln : testgloss::detail::split_lines(repaired)) {
      for (auto& t : lex_line(ln, true).tokens) after.push_back(t.text);
    }
    size_t bi = 0;
    int added = 0;
    for (const auto& t : after) {
      if (bi < before.size() && before[bi] == t) {
        ++bi;
      } else {
        EXPECT_TRUE(is_closer(t)) << "seed " << seed << " token " << t;
        ++added;
      }
    }
    EXPECT_EQ(bi, before.size()) << "seed " << seed;
    (void)added;
  }
}

const char* kAlignOriginal =
    "public void test0() {\n"
    "  WeaponGameData weaponGameData0 = new WeaponGameData(0, 0, 0, \"N&zMn$@6gffi<\", \"\", 0);\n"
    "  weaponGameData0.getDmgBonus();\n"
    "  assertEquals(0, weaponGameData0.getMinDmg());\n"
    "}\n";

TEST(Align, KeepsDataRefinementDropsInventionRestoresArity) {
  TestCase original = parse_test_case(kAlignOriginal);
  std::string refined =
      "WeaponGameData weaponGameData0 = new WeaponGameData(0, 0, 0, \"Ninja Sword\", \"\", 0);\n"
      "weaponGameData0.increaseDmg(10);\n"
      "weaponGameData0.getDmgBonus(10);\n"
      "assertEquals(0, weaponGameData0.getMinDmg());\n";
  auto [aligned, log] = align_refinement(original, refined);

  ASSERT_EQ(aligned.statements.size(), 3u);
  std::string text = render(aligned, RenderStyle::WithComments);
  EXPECT_NE(text.find("\"Ninja Sword\""), std::string::npos);
  EXPECT_EQ(text.find("increaseDmg"), std::string::npos);
  EXPECT_NE(text.find("weaponGameData0.getDmgBonus();"), std::string::npos);

  EXPECT_EQ(log.count(RepairAction::Kind::SkippedStatement), 1);
  EXPECT_EQ(log.count(RepairAction::Kind::ArityFallback), 1);

  // and the result re-parses to itself
  EXPECT_EQ(parse_test_case(text), aligned);
}

TEST(Align, AcceptsFullMethodResponses) {
  TestCase original = parse_test_case(kAlignOriginal);
  std::string refined =
      "@Test\n"
      "public void test0() throws Throwable {\n"
      "  WeaponGameData weaponGameData0 = new WeaponGameData(1, 2, 3, \"Katana\", \"sharp\", 4);\n"
      "  weaponGameData0.getDmgBonus();\n"
      "  assertEquals(0, weaponGameData0.getMinDmg());\n"
      "}\n";
  auto [aligned, log] = align_refinement(original, refined);
  EXPECT_EQ(aligned.statements.size(), 3u);
  EXPECT_NE(render(aligned, RenderStyle::Stripped).find("\"Katana\""), std::string::npos);
}

TEST(Align, UnparseableLineWithPositionalCounterpartIsSubstituted) {
  TestCase original = parse_test_case(kAlignOriginal);
  std::string refined =
      "WeaponGameData weaponGameData0 = new WeaponGameData(0, 0, 0, \"Ninja Sword\", \"\", 0);\n"
      "while (true) do the thing\n"
      "assertEquals(0, weaponGameData0.getMinDmg());\n";
  auto [aligned, log] = align_refinement(original, refined);
  ASSERT_EQ(aligned.statements.size(), 3u);
  EXPECT_EQ(log.count(RepairAction::Kind::SubstitutedOriginal), 1);
  // position 1 in the original is the getDmgBonus call
  EXPECT_NE(render(aligned, RenderStyle::Stripped).find("weaponGameData0.getDmgBonus();"),
            std::string::npos);
}

TEST(Align, UnparseableLineBeyondOriginalIsSkipped) {
  TestCase original = parse_test_case(kAlignOriginal);
  std::string refined =
      "WeaponGameData weaponGameData0 = new WeaponGameData(0, 0, 0, \"Ninja Sword\", \"\", 0);\n"
      "weaponGameData0.getDmgBonus();\n"
      "assertEquals(0, weaponGameData0.getMinDmg());\n"
      "and that concludes the improved test!\n";
  auto [aligned, log] = align_refinement(original, refined);
  EXPECT_EQ(aligned.statements.size(), 3u);
  EXPECT_EQ(log.count(RepairAction::Kind::SkippedStatement), 1);
}

TEST(Align, ProseLinesReconstructTheirPositionalOriginals) {
  // unparseable lines with positional counterparts fall back to the original
  TestCase original = parse_test_case(kAlignOriginal);
  auto [aligned, log] = align_refinement(original, "totally unrelated prose\nmore prose\n");
  ASSERT_EQ(aligned.statements.size(), 2u);
  EXPECT_EQ(statement_source(aligned.statements[0]),
            statement_source(original.statements[0]));
  EXPECT_EQ(log.count(RepairAction::Kind::SubstitutedOriginal), 2);
}

TEST(Align, NothingSalvageableWhenAllStatementsUnknown) {
  TestCase original = parse_test_case(kAlignOriginal);
  try {
    align_refinement(original, "banana.peel(1);\n");
    FAIL() << "expected RepairError";
  } catch (const RepairError& e) {
    EXPECT_EQ(e.kind(), RepairErrorKind::NothingSalvageable);
  }
}

TEST(Align, DuplicateDeclarationsRejected) {
  TestCase original = parse_test_case(kAlignOriginal);
  std::string refined =
      "WeaponGameData weaponGameData0 = new WeaponGameData(0, 0, 0, \"A\", \"\", 0);\n"
      "WeaponGameData weaponGameData0 = new WeaponGameData(0, 0, 0, \"B\", \"\", 0);\n";
  auto [aligned, log] = align_refinement(original, refined);
  EXPECT_EQ(aligned.statements.size(), 1u);
  EXPECT_NE(render(aligned, RenderStyle::Stripped).find("\"A\""), std::string::npos);
}

TEST(Align, ConservatismEveryOutputStatementComesFromOneSide) {
  TestCase original = parse_test_case(kAlignOriginal);
  std::string refined =
      "WeaponGameData weaponGameData0 = new WeaponGameData(9, 9, 9, \"Axe\", \"x\", 9);\n"
      "weaponGameData0.sharpen();\n"
      "weaponGameData0.getDmgBonus(1, 2);\n"
      "gibberish here\n";
  auto [aligned, log] = align_refinement(original, refined);
  std::set<std::string> allowed;
  for (const std::string& line : {std::string("WeaponGameData weaponGameData0 = new "
                                              "WeaponGameData(9, 9, 9, \"Axe\", \"x\", 9);")}) {
    allowed.insert(line);
  }
  for (const auto& st : original.statements) allowed.insert(statement_source(st));
  for (const auto& st : aligned.statements) {
    if (is_comment(st)) continue;
    EXPECT_TRUE(allowed.count(statement_source(st)))
        << "unexpected statement: " << statement_source(st);
  }
}

TEST(ValidateLogic, RenameCommentsAndMessageOnlyIsPreserved) {
  TestCase original = parse_test_case(kAlignOriginal);
  TestCase enhanced = parse_test_case(
      "public void test0() {\n"
      "  // Given a freshly created weapon\n"
      "  WeaponGameData defaultWeapon = new WeaponGameData(0, 0, 0, \"N&zMn$@6gffi<\", \"\", 0);\n"
      "  // When the bonus is read\n"
      "  defaultWeapon.getDmgBonus();\n"
      "  // Then the minimum damage is untouched\n"
      "  assertEquals(\"fresh weapons deal no damage\", 0, defaultWeapon.getMinDmg());\n"
      "}\n");
  EXPECT_TRUE(validate_logic_preserved(original, enhanced, /*strict=*/true));
}

TEST(ValidateLogic, LiteralChangeFailsStrictMode) {
  TestCase original = parse_test_case("public void t() {\n  int a = 0;\n}\n");
  TestCase enhanced = parse_test_case("public void t() {\n  int a = 1;\n}\n");
  EXPECT_FALSE(validate_logic_preserved(original, enhanced, /*strict=*/true));
  EXPECT_TRUE(validate_logic_preserved(original, enhanced, /*strict=*/false));
}

TestCase with_comments(std::vector<std::string> comments) {
  TestCase tc = parse_test_case("public void t() {\n  int a = 1;\n}\n");
  for (auto& c : comments) tc.statements.push_back(Statement{Comment{std::move(c)}, {}});
  return tc;
}

TEST(CommentConvention, AllThreeInOrder) {
  EXPECT_TRUE(check_comment_convention(
      with_comments({"Given a default weapon", "When compared", "Then not equal"})));
}

TEST(CommentConvention, MissingOrDisordered) {
  EXPECT_FALSE(check_comment_convention(with_comments({})));
  EXPECT_FALSE(check_comment_convention(with_comments({"Given x", "When y"})));
  EXPECT_FALSE(check_comment_convention(
      with_comments({"Then z", "Given x", "When y"})));
  EXPECT_TRUE(check_comment_convention(
      with_comments({"given lowercase", "  when padded", "THEN shouted"})));
  EXPECT_TRUE(check_comment_convention(
      with_comments({"setup note", "Given x", "noise", "When y", "Then z"})));
}

TEST(CommentConvention, AttachedCommentsCount) {
  TestCase tc = parse_test_case(
      "public void t() {\n"
      "  // Given a budget\n"
      "  Budget b = new Budget(1, 2);\n"
      "  // When we total it\n"
      "  // Then the result is seven\n"
      "  assertEquals(7, b.total());\n"
      "}\n");
  EXPECT_TRUE(check_comment_convention(tc));
}

}  // namespace
