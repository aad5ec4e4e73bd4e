#include "vfxopt/prompt.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace vfxopt {

namespace {

using json = nlohmann::json;

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  return s;
}

// Lines that only make sense when a previous generation ("B") is shown.
bool is_previous_only_line(std::string_view line) {
  static constexpr std::array<std::string_view, 4> kPrefixes = {
      R"(- "B")",
      R"(- For "B")",
      R"(- Evaluate how the prompt changes from "B")",
      R"(- "last_generated_description")",
  };
  const auto trimmed = trim_left(line);
  return std::any_of(kPrefixes.begin(), kPrefixes.end(),
                     [&](std::string_view p) { return trimmed.starts_with(p); });
}

std::string drop_previous_lines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    const bool has_newline = end != std::string_view::npos;
    if (!has_newline) {
      end = text.size();
    }
    const auto line = text.substr(pos, end - pos);
    if (!is_previous_only_line(line)) {
      out.append(line);
      if (has_newline) {
        out.push_back('\n');
      }
    }
    pos = end + 1;
  }
  return out;
}

bool is_placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || c == '_';
}

std::string json_string_or_empty(const json &j, const char *key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return {};
  }
  return it->is_string() ? it->get<std::string>() : it->dump();
}

// Index one past the brace closing the object opened at `open`, or npos.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) {
        return i + 1;
      }
    }
  }
  return std::string_view::npos;
}

} // namespace

void PromptState::validate() const {
  if (current_prompt.empty()) {
    throw Error(ErrorCategory::validation, "current prompt must not be empty");
  }
}

json to_json(const VlmAnalysis &a) {
  json analysis = {
      {"reference_description", a.reference_description},
      {"new_generated_description", a.new_generated_description},
      {"comparison", a.comparison},
  };
  if (a.last_generated_description) {
    analysis["last_generated_description"] = *a.last_generated_description;
  }
  return {{"analysis", std::move(analysis)}, {"refined_prompt", a.refined_prompt}};
}

VlmAnalysis analysis_from_json(const json &j) {
  if (!j.is_object()) {
    throw ParseError(ParseError::Kind::missing_key, "VLM reply is not a JSON object");
  }
  const auto analysis = j.find("analysis");
  if (analysis == j.end() || analysis->is_null()) {
    throw ParseError(ParseError::Kind::missing_key, "VLM reply lacks \"analysis\"");
  }
  const auto refined = j.find("refined_prompt");
  if (refined == j.end() || refined->is_null()) {
    throw ParseError(ParseError::Kind::missing_key, "VLM reply lacks \"refined_prompt\"");
  }
  if (!refined->is_string()) {
    throw ParseError(ParseError::Kind::missing_key, "\"refined_prompt\" is not a string");
  }

  VlmAnalysis out;
  out.refined_prompt = refined->get<std::string>();
  const bool blank = std::all_of(out.refined_prompt.begin(), out.refined_prompt.end(),
                                 [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank) {
    throw ParseError(ParseError::Kind::empty_refined_prompt, "\"refined_prompt\" is empty");
  }
  if (analysis->is_string()) {
    out.comparison = analysis->get<std::string>();
  } else if (analysis->is_object()) {
    out.reference_description = json_string_or_empty(*analysis, "reference_description");
    out.new_generated_description =
        json_string_or_empty(*analysis, "new_generated_description");
    out.comparison = json_string_or_empty(*analysis, "comparison");
    if (analysis->contains("last_generated_description") &&
        !(*analysis)["last_generated_description"].is_null()) {
      out.last_generated_description =
          json_string_or_empty(*analysis, "last_generated_description");
    }
  } else {
    throw ParseError(ParseError::Kind::missing_key,
                     "\"analysis\" must be an object or a string");
  }
  return out;
}

std::string truncate_utf8(std::string_view text, std::size_t max_chars) {
  std::size_t chars = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (chars == max_chars) {
      return std::string(text.substr(0, i));
    }
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    i = std::min(text.size(), i + len);
    ++chars;
  }
  return std::string(text);
}

std::string memory_digest(const Trajectory &trajectory) {
  if (trajectory.empty()) {
    return "none";
  }
  std::string out;
  for (std::size_t n = 0; n < trajectory.entries.size(); ++n) {
    const auto &e = trajectory.entries[n];
    if (n > 0) {
      out += '\n';
    }
    out += std::to_string(n + 1) + ". iteration " + std::to_string(e.iteration) +
           " — prompt: " + e.prompt + " | comparison: " +
           truncate_utf8(e.analysis.comparison, kDigestComparisonLimit);
  }
  return out;
}

std::string build_instruction(const PromptState &state, const Trajectory &trajectory,
                              const InstructionOptions &options) {
  state.validate();
  if (options.has_previous && !state.last_prompt) {
    throw TemplateError("a previous generation needs the previous prompt");
  }
  const std::string text = options.has_previous
                               ? std::string(options.template_text)
                               : drop_previous_lines(options.template_text);
  const std::string memory =
      options.include_memory ? memory_digest(trajectory) : std::string("none");

  const auto value_for = [&](std::string_view name) -> const std::string * {
    if (name == "desired_visual_effect") return &state.desired_effect;
    if (name == "subject") return &state.subject;
    if (name == "environment") return &state.environment;
    if (name == "current_prompt" || name == "current_text_prompt") {
      return &state.current_prompt;
    }
    if (name == "last_text_prompt") {
      if (!state.last_prompt) {
        throw TemplateError("template references <last_text_prompt> without a previous prompt");
      }
      return &*state.last_prompt;
    }
    if (name == "memory_to_replace") return &memory;
    return nullptr;
  };

  // One left-to-right pass, so substituted text is never rescanned.
  std::string out;
  out.reserve(text.size() + memory.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      std::size_t j = i + 1;
      while (j < text.size() && is_placeholder_char(text[j])) {
        ++j;
      }
      if (j > i + 1 && j < text.size() && text[j] == '>') {
        const std::string_view name(text.data() + i + 1, j - i - 1);
        const auto *value = value_for(name);
        if (value == nullptr) {
          throw TemplateError("unknown template placeholder <" + std::string(name) + ">");
        }
        out += *value;
        i = j + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

VlmAnalysis parse_vlm_response(std::string_view raw) {
  std::optional<ParseError> first_error;
  std::size_t pos = raw.find('{');
  while (pos != std::string_view::npos) {
    const auto end = matching_brace(raw, pos);
    if (end != std::string_view::npos) {
      json j = json::parse(raw.substr(pos, end - pos), nullptr, false);
      if (!j.is_discarded() && j.is_object()) {
        try {
          return analysis_from_json(j);
        } catch (const ParseError &e) {
          if (!first_error) {
            first_error = e;
          }
        }
      }
    }
    pos = raw.find('{', pos + 1);
  }
  if (first_error) {
    throw *first_error;
  }
  throw ParseError(ParseError::Kind::no_json_object, "VLM reply contains no JSON object");
}

void update_history(Trajectory &trajectory, std::string prompt, VlmAnalysis analysis,
                    std::string video_ref, bool accepted, bool failed) {
  TrajectoryEntry entry;
  entry.iteration = trajectory.entries.size();
  entry.prompt = std::move(prompt);
  entry.analysis = std::move(analysis);
  entry.video_ref = std::move(video_ref);
  entry.accepted = accepted;
  entry.failed = failed;
  trajectory.entries.push_back(std::move(entry));
}

std::vector<VideoFrames> select_visual_context(const VideoFrames &reference,
                                               const std::optional<VideoFrames> &previous,
                                               const VideoFrames &current) {
  std::vector<VideoFrames> out;
  out.reserve(3);
  out.push_back(reference);
  out.back().label = std::string(kReferenceLabel);
  if (previous) {
    out.push_back(*previous);
    out.back().label = std::string(kPreviousLabel);
  }
  out.push_back(current);
  out.back().label = std::string(kCurrentLabel);
  return out;
}

std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

ConstraintResult enforce_content_constraints(const PromptState &state,
                                             std::string_view refined_prompt) {
  const auto haystack = normalize_for_match(refined_prompt);
  const auto contains = [&](const std::string &needle) {
    return haystack.find(normalize_for_match(needle)) != std::string::npos;
  };
  if (contains(state.subject) && contains(state.environment)) {
    return {std::string(refined_prompt), true};
  }
  return {state.current_prompt, false};
}

} // namespace vfxopt
