#pragma once

// LLM-as-judge node identification: anchored prompt, single query, verdict parsing.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "paf/graph.hpp"
#include "paf/providers.hpp"

namespace paf {

struct Identified {
  NodeId node;
};
struct Unparseable {};
struct InvalidNode {
  std::string mentioned;
};

struct JudgeVerdict {
  std::variant<Identified, Unparseable, InvalidNode> outcome;
  std::string raw_response;

  bool identified() const { return std::holds_alternative<Identified>(outcome); }
  const NodeId& node() const { return std::get<Identified>(outcome).node; }
};

/// The judge's chat call failed; the verdict is unknown.
class JudgeUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// System message with the anchor (or the start-of-task line when `last_node`
/// is absent), then `history`, then the fixed location question.
/// Throws UnknownNodeError when `last_node` is not in the map.
std::vector<ChatMessage> build_judge_prompt(const NavigationMap& map, const std::vector<ChatMessage>& history,
                                            const std::optional<NodeId>& last_node, const std::string& task);

/// Extracts the first "Node <id>" mention (keyword case-insensitive); if there
/// is none, the first bare word that is a node id of the map.
JudgeVerdict parse_verdict(const NavigationMap& map, const std::string& raw_response);

/// One chat call, no retries. Provider errors become JudgeUnavailable.
JudgeVerdict judge_node(const NavigationMap& map, const std::vector<ChatMessage>& history,
                        const std::optional<NodeId>& last_node, const std::string& task, ChatProvider& chat);

}  // namespace paf
