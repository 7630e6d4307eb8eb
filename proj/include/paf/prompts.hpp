#pragma once

// Fixed prompt fragments shared by the engine, the judge and the mocks.

#include <string_view>

namespace paf::prompts {

inline constexpr std::string_view kJudgeQuestion =
    "Based on your latest responses, where are you currently in the navigation map?";

inline constexpr std::string_view kAgentQueryPrefix =
    "Based on the navigation map and your current node, respond to the user question: ";

inline constexpr std::string_view kCurrentNodePrefix = "You are currently on Node ";

inline constexpr std::string_view kUserGoalPrefix = "Your goal for this turn: ";

inline constexpr std::string_view kAgentInstructionPrefix = "Follow this instruction: ";

}  // namespace paf::prompts
