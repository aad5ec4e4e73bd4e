#pragma once

#include "vfxopt/error.hpp"
#include "vfxopt/media.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vfxopt {

/// The VLM instruction template compiled in from assets/vlm_instruction.txt.
std::string_view default_instruction_template() noexcept;

struct PromptState {
  std::string subject;
  std::string environment;
  std::string desired_effect;
  std::string current_prompt;
  std::optional<std::string> last_prompt;

  void validate() const;
};

struct VlmAnalysis {
  std::string reference_description;
  std::string new_generated_description;
  std::optional<std::string> last_generated_description;
  std::string comparison;
  std::string refined_prompt;

  friend bool operator==(const VlmAnalysis &, const VlmAnalysis &) = default;
};

nlohmann::json to_json(const VlmAnalysis &analysis);
VlmAnalysis analysis_from_json(const nlohmann::json &j);

struct TrajectoryEntry {
  std::size_t iteration = 0;
  std::string prompt;      // the prompt that produced this iteration's video
  VlmAnalysis analysis;
  std::string video_ref;   // where the generated video lives
  bool accepted = true;    // refined prompt passed the content constraints
  bool failed = false;     // the VLM never produced a parseable reply

  friend bool operator==(const TrajectoryEntry &, const TrajectoryEntry &) = default;
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

class TemplateError : public Error {
public:
  explicit TemplateError(const std::string &message)
      : Error(ErrorCategory::format, message) {}
};

/// Longest comparison text kept per digest entry, in characters.
inline constexpr std::size_t kDigestComparisonLimit = 500;

/// Numbered text-only history: "N. iteration k — prompt: ... | comparison: ...",
/// or "none" when empty.
std::string memory_digest(const Trajectory &trajectory);

/// UTF-8 aware prefix of at most max_chars code points.
std::string truncate_utf8(std::string_view text, std::size_t max_chars);

struct InstructionOptions {
  bool has_previous = false;
  bool include_memory = true; // false renders the history as "none"
  std::string_view template_text = default_instruction_template();
};

/// Substitutes every placeholder of the template. Without a previous
/// generation the "B" lines are removed. Unknown placeholders throw
/// TemplateError.
std::string build_instruction(const PromptState &state, const Trajectory &trajectory,
                              const InstructionOptions &options = {});

class ParseError : public Error {
public:
  enum class Kind { no_json_object, missing_key, empty_refined_prompt };

  ParseError(Kind kind, const std::string &message)
      : Error(ErrorCategory::format, message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }
  /// Malformed replies are worth asking again.
  bool retryable() const noexcept { return true; }

private:
  Kind kind_;
};

/// Extracts the first JSON object with the expected keys from a reply that
/// may carry prose or code fences around it.
VlmAnalysis parse_vlm_response(std::string_view raw);

/// Appends one entry; iteration numbers must stay contiguous from 0.
void update_history(Trajectory &trajectory, std::string prompt, VlmAnalysis analysis,
                    std::string video_ref, bool accepted = true, bool failed = false);

/// [reference, previous (if any), current]; never more than three videos.
std::vector<VideoFrames> select_visual_context(const VideoFrames &reference,
                                               const std::optional<VideoFrames> &previous,
                                               const VideoFrames &current);

struct ConstraintResult {
  std::string prompt; // the prompt to carry into the next iteration
  bool accepted = false;
};

/// Lowercases ASCII and collapses whitespace runs to one space.
std::string normalize_for_match(std::string_view text);

/// Accepts the refined prompt only if it still contains the subject and the
/// environment; otherwise carries the current prompt forward.
ConstraintResult enforce_content_constraints(const PromptState &state,
                                             std::string_view refined_prompt);

} // namespace vfxopt
