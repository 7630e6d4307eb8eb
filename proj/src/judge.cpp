#include "paf/judge.hpp"

#include <cctype>

#include "paf/prompts.hpp"

namespace paf {

namespace {

bool is_id_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::string render_path(const std::vector<NodeId>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += " -> ";
    out += path[i].str();
  }
  return out;
}

bool keyword_at(const std::string& text, std::size_t i) {
  static constexpr std::string_view kKeyword = "node";
  if (i + kKeyword.size() > text.size()) return false;
  if (i > 0 && is_id_char(text[i - 1])) return false;
  for (std::size_t k = 0; k < kKeyword.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(text[i + k])) != kKeyword[k]) return false;
  }
  const std::size_t after = i + kKeyword.size();
  return after < text.size() && !is_id_char(text[after]);
}

}  // namespace

std::vector<ChatMessage> build_judge_prompt(const NavigationMap& map, const std::vector<ChatMessage>& history,
                                            const std::optional<NodeId>& last_node, const std::string& task) {
  std::string system = "You track where an agent is in the navigation map of the workflow \"" + map.name() +
                       "\" while it talks with a user.\n";
  if (last_node) {
    const PathAnchor anchor = map.path_anchor(*last_node);
    system += "You were previously on Node " + last_node->str() + " with options to navigate to in the map " +
              render_path(anchor.path) + " each with instructions being:\n";
    if (anchor.children.empty()) system += "(no further steps; this node ends the workflow)\n";
    for (const auto& child : anchor.children) {
      system += "- Node " + child.id.str() + ": " + child.instruction + " (condition: " + child.condition + ")\n";
    }
  } else {
    system += "This is the start of the task " + task + ", proceed to Node " + map.start().str() + ".\n";
  }
  system += "Answer with the single node you are on now, written as the word \"Node\" followed by its id.";

  std::vector<ChatMessage> prompt{system_message(std::move(system))};
  for (const auto& m : history) {
    if (m.role != ChatRole::System) prompt.push_back(m);
  }
  prompt.push_back(user_message(std::string(prompts::kJudgeQuestion)));
  return prompt;
}

JudgeVerdict parse_verdict(const NavigationMap& map, const std::string& raw_response) {
  JudgeVerdict verdict{Unparseable{}, raw_response};
  const std::string& text = raw_response;

  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!keyword_at(text, i)) continue;
    std::size_t j = i + 4;
    while (j < text.size() && (std::isspace(static_cast<unsigned char>(text[j])) || text[j] == ':' || text[j] == '#'))
      ++j;
    std::size_t end = j;
    while (end < text.size() && is_id_char(text[end])) ++end;
    if (end == j) continue;
    std::string mentioned = text.substr(j, end - j);
    if (map.contains(mentioned)) {
      verdict.outcome = Identified{NodeId(mentioned)};
    } else {
      verdict.outcome = InvalidNode{std::move(mentioned)};
    }
    return verdict;
  }

  for (std::size_t i = 0; i < text.size();) {
    if (!is_id_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && is_id_char(text[end])) ++end;
    const std::string word = text.substr(i, end - i);
    if (map.contains(word)) {
      verdict.outcome = Identified{NodeId(word)};
      return verdict;
    }
    i = end;
  }
  return verdict;
}

JudgeVerdict judge_node(const NavigationMap& map, const std::vector<ChatMessage>& history,
                        const std::optional<NodeId>& last_node, const std::string& task, ChatProvider& chat) {
  const auto prompt = build_judge_prompt(map, history, last_node, task);
  std::string reply;
  try {
    reply = chat.chat(prompt);
  } catch (const ProviderError& e) {
    throw JudgeUnavailable(std::string("judge query failed: ") + e.what());
  }
  return parse_verdict(map, reply);
}

}  // namespace paf
