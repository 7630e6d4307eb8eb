#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "paf/judge.hpp"
#include "paf/mock_providers.hpp"
#include "paf/prompts.hpp"
#include "support.hpp"

using namespace paf;

namespace {

MapPtr zero_start_map() {
  return validate_map({"triage",
                       {{"0", NodeKind::Start, "Ask what the problem is.", {}},
                        {"1", NodeKind::Generic, "Ask how long it has lasted.", {}},
                        {"2", NodeKind::End, "Refer to a nurse.", {}}},
                       {{"0", "1", "caller describes a symptom"}, {"1", "2", "symptom lasted over a week"}}});
}

std::size_t count_node_mentions(const std::string& text, const std::string& id) {
  const std::regex pattern("Node ([A-Za-z0-9_-]+)");
  std::size_t n = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
    n += (*it)[1].str() == id;
  }
  return n;
}

}  // namespace

TEST(JudgePromptTest, StartOfTaskLineWhenNoLastNode) {
  const auto prompt = build_judge_prompt(*zero_start_map(), {}, std::nullopt, "triage");
  ASSERT_EQ(prompt.size(), 2u);
  EXPECT_EQ(prompt[0].role, ChatRole::System);
  EXPECT_NE(prompt[0].content.find("This is the start of the task triage, proceed to Node 0."), std::string::npos);
  EXPECT_EQ(prompt[1].role, ChatRole::User);
  EXPECT_EQ(prompt[1].content, "Based on your latest responses, where are you currently in the navigation map?");
}

TEST(JudgePromptTest, StartOfTaskLineUsesTheMapStartId) {
  const auto map = paf::testing::load_example_map("healthcare_eligibility.json");
  const auto prompt = build_judge_prompt(*map, {}, std::nullopt, "eligibility");
  EXPECT_NE(prompt[0].content.find("This is the start of the task eligibility, proceed to Node greeting."),
            std::string::npos);
}

TEST(JudgePromptTest, AnchorListsExactlyTheChildren) {
  const auto map = zero_start_map();
  const auto prompt = build_judge_prompt(*map, {}, NodeId("0"), "triage");
  const auto& sys = prompt[0].content;
  EXPECT_NE(sys.find("You were previously on Node 0 with options to navigate to in the map 0 each with instructions "
                     "being:"),
            std::string::npos)
      << sys;
  EXPECT_NE(sys.find("Ask how long it has lasted."), std::string::npos);
  EXPECT_NE(sys.find("caller describes a symptom"), std::string::npos);
  EXPECT_EQ(sys.find("Refer to a nurse."), std::string::npos);
  EXPECT_EQ(sys.find("Ask what the problem is."), std::string::npos);
}

TEST(JudgePromptTest, PathRenderedFromStart) {
  const auto map = paf::testing::load_example_map("internet_troubleshooting.json");
  const auto prompt = build_judge_prompt(*map, {}, NodeId("check_lights"), "t");
  EXPECT_NE(prompt[0].content.find("in the map welcome -> check_outage -> restart_router -> check_lights each"),
            std::string::npos)
      << prompt[0].content;
}

TEST(JudgePromptTest, HistoryFollowsWithoutSystemMessagesAndIsDeterministic) {
  const auto map = zero_start_map();
  const std::vector<ChatMessage> history{system_message("ignored"), user_message("my head hurts"),
                                         assistant_message("How long has it lasted?")};
  const auto a = build_judge_prompt(*map, history, NodeId("1"), "triage");
  const auto b = build_judge_prompt(*map, history, NodeId("1"), "triage");
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[1], history[1]);
  EXPECT_EQ(a[2], history[2]);
  EXPECT_EQ(a[3].content, std::string(prompts::kJudgeQuestion));
  EXPECT_THROW(build_judge_prompt(*map, history, NodeId("9"), "triage"), UnknownNodeError);
}

TEST(JudgePromptTest, CurrentAndChildIdsAppearOncePerMention) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const auto map = validate_map(paf::testing::random_valid_draft(rng, 8));
    for (const auto& [id, node] : map->nodes()) {
      const auto sys = build_judge_prompt(*map, {}, id, "t")[0].content;
      const bool self_loop = map->has_edge(id, id);
      EXPECT_EQ(count_node_mentions(sys, id.str()), self_loop ? 2u : 1u);
      for (const auto& child : map->children_of(id)) {
        if (child.id != id) {
          EXPECT_EQ(count_node_mentions(sys, child.id.str()), 1u);
        }
      }
    }
  }
}

TEST(ParseVerdictTest, Examples) {
  const auto map = paf::testing::load_example_map("healthcare_eligibility.json");
  auto v = parse_verdict(*map, "I am currently on Node check_insurance.");
  ASSERT_TRUE(v.identified());
  EXPECT_EQ(v.node().str(), "check_insurance");
  EXPECT_EQ(v.raw_response, "I am currently on Node check_insurance.");

  v = parse_verdict(*map, "I am on Node zzz");
  ASSERT_TRUE(std::holds_alternative<InvalidNode>(v.outcome));
  EXPECT_EQ(std::get<InvalidNode>(v.outcome).mentioned, "zzz");

  EXPECT_TRUE(std::holds_alternative<Unparseable>(parse_verdict(*map, "I'm not sure where we are.").outcome));
}

TEST(ParseVerdictTest, KeywordCaseFirstMentionAndBareIds) {
  const auto map = paf::testing::load_example_map("healthcare_eligibility.json");
  EXPECT_EQ(parse_verdict(*map, "NODE: greeting").node().str(), "greeting");
  EXPECT_EQ(parse_verdict(*map, "node collect_provider, not Node greeting").node().str(), "collect_provider");
  EXPECT_EQ(parse_verdict(*map, "Probably no_insurance or greeting").node().str(), "no_insurance");
  // the keyword wins over an earlier bare id
  EXPECT_EQ(parse_verdict(*map, "greeting is over; now at Node check_insurance").node().str(), "check_insurance");
  // "nodes" is not the keyword
  EXPECT_FALSE(parse_verdict(*map, "several nodes apply").identified());
}

TEST(ParseVerdictTest, FuzzNeverIdentifiesUnknownIds) {
  const auto map = paf::testing::load_example_map("healthcare_eligibility.json");
  std::mt19937_64 rng(5);
  const std::vector<std::string> words{"Node", "node", " ", "greeting", "zzz", ":", "check_", "insurance", ".",
                                       "no_insurance", "\n", "NODE", "-", "collect_provider2", "é"};
  for (int i = 0; i < 5000; ++i) {
    std::string text;
    const int n = rng() % 10;
    for (int k = 0; k < n; ++k) text += words[rng() % words.size()];
    const auto v = parse_verdict(*map, text);
    if (v.identified()) {
      EXPECT_TRUE(map->contains(v.node())) << text;
    }
    EXPECT_EQ(parse_verdict(*map, text).outcome.index(), v.outcome.index());
  }
}

TEST(JudgeNodeTest, OneCallAndUnavailableOnProviderError) {
  const auto map = zero_start_map();
  MockChatProvider chat;
  chat.script(std::string(prompts::kJudgeQuestion), "Node 1");
  const auto v = judge_node(*map, {}, NodeId("0"), "triage", chat);
  EXPECT_EQ(v.node().str(), "1");
  EXPECT_EQ(chat.calls(), 1u);

  MockChatProvider unknown;
  unknown.script(std::string(prompts::kJudgeQuestion), "Node 7");
  EXPECT_TRUE(std::holds_alternative<InvalidNode>(judge_node(*map, {}, NodeId("0"), "triage", unknown).outcome));
  EXPECT_EQ(unknown.calls(), 1u);

  MockChatProvider broken;  // nothing scripted: every call is rejected
  EXPECT_THROW(judge_node(*map, {}, NodeId("0"), "triage", broken), JudgeUnavailable);
}

TEST(JudgeNodeTest, ScriptedWalkOverHealthcareFlow) {
  const auto map = paf::testing::load_example_map("healthcare_eligibility.json");
  const std::vector<std::string> walk{"check_insurance", "collect_provider", "collect_provider",
                                      "transfer_scheduling"};
  std::size_t step = 0;
  MockChatProvider judge([&](std::span<const ChatMessage>) { return "Node " + walk[step] + "."; });
  std::optional<NodeId> last = map->start();
  std::vector<ChatMessage> history;
  std::vector<std::string> verdicts;
  for (step = 0; step < walk.size(); ++step) {
    history.push_back(user_message("turn " + std::to_string(step)));
    history.push_back(assistant_message("reply " + std::to_string(step)));
    const auto v = judge_node(*map, history, last, map->name(), judge);
    ASSERT_TRUE(v.identified());
    verdicts.push_back(v.node().str());
    last = v.node();
  }
  EXPECT_EQ(verdicts, walk);
}
