#include "vfxopt/prompt.hpp"

#include <gtest/gtest.h>

#include <regex>

namespace vfxopt {
namespace {

PromptState state() {
  PromptState s;
  s.subject = "paper lantern";
  s.environment = "still pond";
  s.desired_effect = "glowing light";
  s.current_prompt = "a paper lantern over a still pond, glowing";
  return s;
}

VlmAnalysis analysis(const std::string &comparison, const std::string &refined = "next") {
  VlmAnalysis a;
  a.comparison = comparison;
  a.refined_prompt = refined;
  return a;
}

bool has_placeholder(const std::string &text) {
  static const std::regex re("<[a-z_]+>");
  return std::regex_search(text, re);
}

// --- instruction template ---------------------------------------------------

TEST(Instruction, FirstIterationDropsPreviousBlock) {
  const auto text = build_instruction(state(), {});
  EXPECT_FALSE(has_placeholder(text));
  EXPECT_EQ(text.find("- \"B\""), std::string::npos);
  EXPECT_EQ(text.find("last_generated_description"), std::string::npos);
  EXPECT_NE(text.find("Previous history: none"), std::string::npos);
  EXPECT_NE(text.find("Subject: paper lantern"), std::string::npos);
  EXPECT_NE(text.find("Environment: still pond"), std::string::npos);
  EXPECT_NE(text.find("Current prompt: a paper lantern over a still pond, glowing"),
            std::string::npos);
  EXPECT_NE(text.find("\"glowing light\""), std::string::npos);
}

TEST(Instruction, LaterIterationShowsPreviousAndMemory) {
  auto s = state();
  s.last_prompt = "an earlier prompt";
  Trajectory t;
  for (int i = 0; i < 3; ++i) {
    update_history(t, "prompt " + std::to_string(i), analysis("gap " + std::to_string(i)),
                   "v" + std::to_string(i));
  }
  InstructionOptions o;
  o.has_previous = true;
  const auto text = build_instruction(s, t, o);
  EXPECT_FALSE(has_placeholder(text));
  EXPECT_NE(text.find("\"B\" (middle, if present)"), std::string::npos);
  EXPECT_NE(text.find("\"an earlier prompt\""), std::string::npos);
  EXPECT_NE(text.find("1. iteration 0 — prompt: prompt 0 | comparison: gap 0"),
            std::string::npos);
  EXPECT_NE(text.find("3. iteration 2 — prompt: prompt 2 | comparison: gap 2"),
            std::string::npos);
}

TEST(Instruction, MemoryCanBeWithheld) {
  Trajectory t;
  update_history(t, "p", analysis("c"), "v");
  InstructionOptions o;
  o.include_memory = false;
  const auto text = build_instruction(state(), t, o);
  EXPECT_NE(text.find("Previous history: none"), std::string::npos);
  EXPECT_EQ(text.find("iteration 0"), std::string::npos);
}

TEST(Instruction, SubstitutedTextIsNotRescanned) {
  auto s = state();
  s.current_prompt = "literal <subject> stays";
  InstructionOptions o;
  o.template_text = "P: <current_prompt> S: <subject>";
  EXPECT_EQ(build_instruction(s, {}, o), "P: literal <subject> stays S: paper lantern");
}

TEST(Instruction, UnknownPlaceholderThrows) {
  InstructionOptions o;
  o.template_text = "hello <mystery_field>";
  EXPECT_THROW(build_instruction(state(), {}, o), TemplateError);
}

TEST(Instruction, PreviousWithoutPromptThrows) {
  InstructionOptions o;
  o.has_previous = true;
  EXPECT_THROW(build_instruction(state(), {}, o), TemplateError);
}

TEST(Instruction, EmptyPromptIsInvalid) {
  auto s = state();
  s.current_prompt.clear();
  EXPECT_THROW(build_instruction(s, {}), Error);
}

TEST(Instruction, NonPlaceholderAnglesPass) {
  InstructionOptions o;
  o.template_text = "a < b and <Upper> and <> stay";
  EXPECT_EQ(build_instruction(state(), {}, o), "a < b and <Upper> and <> stay");
}

// --- digest -----------------------------------------------------------------

TEST(Digest, EmptyIsNone) { EXPECT_EQ(memory_digest({}), "none"); }

TEST(Digest, ComparisonTruncatedByCodePoints) {
  Trajectory t;
  std::string long_text;
  for (int i = 0; i < 600; ++i) {
    long_text += "é";
  }
  update_history(t, "p", analysis(long_text), "v");
  const auto digest = memory_digest(t);
  const auto pos = digest.find("comparison: ") + 12;
  EXPECT_EQ(digest.size() - pos, 2 * kDigestComparisonLimit);
}

TEST(Utf8, TruncateNeverSplitsCodePoints) {
  EXPECT_EQ(truncate_utf8("héllo", 2), "hé");
  EXPECT_EQ(truncate_utf8("日本語", 1), "日");
  EXPECT_EQ(truncate_utf8("🙂x", 1), "🙂");
  EXPECT_EQ(truncate_utf8("abc", 10), "abc");
  EXPECT_EQ(truncate_utf8("abc", 0), "");
}

// --- reply parsing ------------------------------------------------------------

TEST(Parse, MinimalObject) {
  const auto a = parse_vlm_response(R"({"analysis": {}, "refined_prompt": "x"})");
  EXPECT_EQ(a.refined_prompt, "x");
  EXPECT_FALSE(a.last_generated_description);
}

TEST(Parse, FullObjectInFenceWithProse) {
  const auto a = parse_vlm_response(
      "Sure! Here you go:\n```json\n"
      R"({"analysis": {"reference_description": "r", "new_generated_description": "n",)"
      R"( "last_generated_description": "l", "comparison": "c"}, "refined_prompt": "p"})"
      "\n```\nHope this helps.");
  EXPECT_EQ(a.reference_description, "r");
  EXPECT_EQ(a.new_generated_description, "n");
  EXPECT_EQ(a.last_generated_description, "l");
  EXPECT_EQ(a.comparison, "c");
  EXPECT_EQ(a.refined_prompt, "p");
}

TEST(Parse, StringAnalysisIsTheComparison) {
  EXPECT_EQ(parse_vlm_response(R"({"analysis": "too dim", "refined_prompt": "x"})").comparison,
            "too dim");
}

TEST(Parse, BracesInsideStrings) {
  const auto a = parse_vlm_response(
      R"({"analysis": {"comparison": "uses } and { \" braces"}, "refined_prompt": "a {b}"})");
  EXPECT_EQ(a.comparison, "uses } and { \" braces");
  EXPECT_EQ(a.refined_prompt, "a {b}");
}

TEST(Parse, SkipsIrrelevantObjects) {
  const auto a = parse_vlm_response(
      R"(Note {"unrelated": 1} then {"analysis": {}, "refined_prompt": "y"})");
  EXPECT_EQ(a.refined_prompt, "y");
}

ParseError::Kind parse_kind(std::string_view raw) {
  try {
    parse_vlm_response(raw);
  } catch (const ParseError &e) {
    EXPECT_TRUE(e.retryable());
    return e.kind();
  }
  ADD_FAILURE() << "parsed: " << raw;
  return ParseError::Kind::no_json_object;
}

TEST(Parse, Failures) {
  EXPECT_EQ(parse_kind("no json here"), ParseError::Kind::no_json_object);
  EXPECT_EQ(parse_kind("{broken"), ParseError::Kind::no_json_object);
  EXPECT_EQ(parse_kind(R"({"analysis": {}})"), ParseError::Kind::missing_key);
  EXPECT_EQ(parse_kind(R"({"refined_prompt": "x"})"), ParseError::Kind::missing_key);
  EXPECT_EQ(parse_kind(R"({"analysis": {}, "refined_prompt": 4})"),
            ParseError::Kind::missing_key);
  EXPECT_EQ(parse_kind(R"({"analysis": {}, "refined_prompt": "  "})"),
            ParseError::Kind::empty_refined_prompt);
}

TEST(Analysis, JsonRoundTrip) {
  VlmAnalysis a{"r", "n", std::string("l"), "c", "p"};
  EXPECT_EQ(analysis_from_json(to_json(a)), a);
  a.last_generated_description.reset();
  EXPECT_EQ(analysis_from_json(to_json(a)), a);
}

// --- history ------------------------------------------------------------------

TEST(History, AppendsContiguously) {
  Trajectory t;
  for (std::size_t i = 0; i < 10; ++i) {
    update_history(t, "p" + std::to_string(i), analysis("c"), "v", i % 2 == 0, false);
  }
  ASSERT_EQ(t.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(t.entries[i].iteration, i);
    EXPECT_EQ(t.entries[i].prompt, "p" + std::to_string(i));
    EXPECT_EQ(t.entries[i].accepted, i % 2 == 0);
  }
}

// --- visual context -----------------------------------------------------------

VideoFrames clip(std::uint8_t value) {
  VideoFrames v;
  v.frames.emplace_back(2, 2, std::vector<std::uint8_t>(12, value));
  return v;
}

TEST(VisualContext, LabelsAndLength) {
  const auto two = select_visual_context(clip(1), std::nullopt, clip(3));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].label, "A");
  EXPECT_EQ(two[1].label, "C");
  const auto three = select_visual_context(clip(1), clip(2), clip(3));
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[1].label, "B");
  EXPECT_EQ(three[1].frames, clip(2).frames);
  EXPECT_EQ(three[2].frames, clip(3).frames);
}

// --- content constraints --------------------------------------------------------

TEST(Constraints, AcceptsWhenBothPresent) {
  const auto r = enforce_content_constraints(state(), "A Paper   Lantern drifts on a STILL pond");
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.prompt, "A Paper   Lantern drifts on a STILL pond");
}

TEST(Constraints, RejectsDroppedSubjectOrEnvironment) {
  for (const char *bad : {"a glowing orb over a still pond", "a paper lantern in the sky",
                          "bright light"}) {
    const auto r = enforce_content_constraints(state(), bad);
    EXPECT_FALSE(r.accepted) << bad;
    EXPECT_EQ(r.prompt, state().current_prompt);
  }
}

TEST(Constraints, EmptyConstraintsAlwaysPass) {
  auto s = state();
  s.subject.clear();
  s.environment.clear();
  EXPECT_TRUE(enforce_content_constraints(s, "anything").accepted);
}

TEST(Normalize, CaseAndWhitespace) {
  EXPECT_EQ(normalize_for_match("  Hello \t\n World  "), "hello world");
}

} // namespace
} // namespace vfxopt
