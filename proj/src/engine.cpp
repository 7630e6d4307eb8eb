#include "paf/engine.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "paf/judge.hpp"
#include "paf/prompts.hpp"
#include "paf/workflow_format.hpp"

namespace paf {

namespace {

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::string render_history(const std::vector<ChatMessage>& history) {
  std::string out = "Conversation so far:\n";
  if (history.empty()) return out + "(no previous turns)\n";
  for (const auto& m : history) {
    if (m.role == ChatRole::System) continue;
    out += m.role == ChatRole::User ? "User: " : "Assistant: ";
    out += m.content;
    out += '\n';
  }
  return out;
}

// Working copy of the session plus the bookkeeping of one turn.
struct TurnRun {
  const Providers& providers;
  SessionState working;
  TurnResult result;
  std::string text;
  std::size_t last_point = 0;
  std::string last_scored;

  void identify_at(std::size_t end) {
    const std::string partial = trim(std::string_view(text).substr(0, end));
    last_point = end;
    if (partial.empty() || partial == last_scored) return;
    last_scored = partial;
    if (working.mode == Mode::Naive) return;

    const NodeId current = working.latest_node.value_or(working.map->start());
    if (working.mode == Mode::Optimized) {
      ++result.provider_calls.embed;
      auto decision = vector_node_search(*working.map, *working.store, current, partial, working.threshold,
                                         *providers.embedder);
      if (decision.selected()) {
        record(current, decision.selection().node, IdentificationSource::Vector, partial.size());
        return;
      }
    }

    auto history = working.history;
    history.push_back(user_message(result.user_text));
    history.push_back(assistant_message(partial));
    ++result.provider_calls.judge;
    try {
      auto verdict = judge_node(*working.map, history, working.latest_node, working.task, *providers.judge);
      if (verdict.identified()) record(current, verdict.node(), IdentificationSource::Judge, partial.size());
    } catch (const JudgeUnavailable&) {
      // Keep the previous node.
    }
  }

  void record(const NodeId& from, const NodeId& to, IdentificationSource source, std::size_t length) {
    const bool adjacent = from == to || working.map->has_edge(from, to);
    result.identifications.push_back({from, to, source, source == IdentificationSource::Judge && !adjacent, length});
    working.latest_node = to;
  }

  void on_text() {
    for (auto p : sentence_boundaries(text)) {
      if (p > last_point) identify_at(p);
    }
  }
};

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Naive: return "naive";
    case Mode::Basic: return "basic";
    case Mode::Optimized: return "optimized";
  }
  return "basic";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "naive") return Mode::Naive;
  if (text == "basic") return Mode::Basic;
  if (text == "optimized") return Mode::Optimized;
  return std::nullopt;
}

std::string_view to_string(IdentificationSource source) {
  switch (source) {
    case IdentificationSource::Vector: return "vector";
    case IdentificationSource::Judge: return "judge";
    case IdentificationSource::RetainedPrevious: return "retained_previous";
  }
  return "retained_previous";
}

SessionState new_session(MapPtr map, Mode mode, double threshold, std::string session_id) {
  SessionState state;
  state.session_id = std::move(session_id);
  state.latest_node = map->start();
  state.task = map->name();
  state.map = std::move(map);
  state.mode = mode;
  state.threshold = threshold;
  return state;
}

ProviderCalls& ProviderCalls::operator+=(const ProviderCalls& other) {
  chat += other.chat;
  embed += other.embed;
  judge += other.judge;
  return *this;
}

std::size_t TurnResult::jump_count() const {
  return std::count_if(identifications.begin(), identifications.end(),
                       [](const Identification& i) { return i.jump; });
}

void ActionSink::dispatch(const Node& node) const {
  for (const auto& action : node.actions) {
    if (auto it = handlers_.find(action.name); it != handlers_.end()) {
      it->second(action, node);
    } else if (fallback_) {
      fallback_(action, node);
    }
  }
}

std::vector<std::size_t> sentence_boundaries(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < text.size(); ++i) {
    const char prev = text[i - 1];
    if ((prev == '.' || prev == '!' || prev == '?') && std::isspace(static_cast<unsigned char>(text[i]))) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<ChatMessage> build_agent_prompt(const SessionState& state, const std::string& user_text) {
  const NavigationMap& map = *state.map;
  std::string system;
  if (state.mode == Mode::Naive) {
    system = "You are a voice agent carrying out the workflow below. Read the whole workflow and decide yourself "
             "which step applies.\n\nWorkflow definition:\n" +
             serialize_workflow(to_document(map)) + "\n" + render_history(state.history);
    return {system_message(std::move(system)), user_message(user_text)};
  }

  const NodeId current = state.latest_node.value_or(map.start());
  const PathAnchor anchor = map.path_anchor(current);
  system = "You are a voice agent carrying out the workflow \"" + map.name() +
           "\". Speak only as your current node instructs, and move to one of the listed options only when its "
           "condition is met.\n\n" +
           render_history(state.history) + "\n" + std::string(prompts::kCurrentNodePrefix) + current.str() +
           ".\nInstructions for this node: " + map.node(current).instruction + "\nPath from the start of the map: ";
  for (std::size_t i = 0; i < anchor.path.size(); ++i) {
    if (i) system += " -> ";
    system += anchor.path[i].str();
  }
  system += "\nOptions to navigate to:\n";
  if (anchor.children.empty()) system += "(none; this node ends the workflow)\n";
  for (const auto& child : anchor.children) {
    system += "- " + child.id.str() + " [condition: " + child.condition + "]: " + child.instruction + "\n";
  }
  return {system_message(std::move(system)),
          user_message(std::string(prompts::kAgentQueryPrefix) + user_text + ".")};
}

Engine::Engine(Providers providers, ActionSink sink, MapRewriteHook hook)
    : providers_(providers), sink_(std::move(sink)), hook_(std::move(hook)) {}

std::size_t Engine::ensure_store(SessionState& state) const {
  if (state.mode != Mode::Optimized) return 0;
  if (state.store && state.store->bound_to(*state.map)) return 0;
  if (!providers_.embedder) throw std::logic_error("optimized mode needs an embedding provider");
  state.store = std::make_shared<const VectorStore>(build_store(*state.map, *providers_.embedder));
  return 1;
}

TurnResult Engine::run_turn(SessionState& state, const std::string& user_text, const ChunkSink& on_chunk) const {
  return execute(state, user_text, nullptr, on_chunk);
}

TurnResult Engine::replay_turn(SessionState& state, const std::string& user_text,
                               const std::string& agent_text) const {
  return execute(state, user_text, &agent_text, {});
}

TurnResult Engine::execute(SessionState& state, const std::string& user_text, const std::string* scripted_reply,
                           const ChunkSink& on_chunk) const {
  if (!state.map) throw std::logic_error("session has no navigation map");
  if (!providers_.agent && !scripted_reply) throw std::logic_error("engine has no agent provider");
  if (state.mode != Mode::Naive && !providers_.judge) throw std::logic_error("engine has no judge provider");

  TurnRun run{providers_, state, {}, {}, 0, {}};
  run.result.turn = state.turn_counter + 1;
  run.result.user_text = user_text;
  run.result.provider_calls.embed += ensure_store(run.working);

  auto feed = [&](const ChatChunk& chunk) {
    run.text += chunk.delta;
    if (on_chunk) on_chunk(chunk);
    run.on_text();
  };
  if (scripted_reply) {
    for (const auto& piece : split_words(*scripted_reply)) feed({piece, false});
  } else {
    ++run.result.provider_calls.chat;
    providers_.agent->chat_stream(build_agent_prompt(state, user_text), feed);
  }
  if (trim(run.text).empty()) throw ProviderError(ProviderErrorKind::Rejected, "agent returned an empty reply");
  run.identify_at(run.text.size());

  // Commit: actions once per node, rewrite hooks, history.
  TurnResult& result = run.result;
  result.agent_text = trim(run.text);
  std::set<NodeId> fired;
  for (const auto& step : result.identifications) {
    const Node& node = run.working.map->node(step.to);
    if (fired.insert(step.to).second) {
      sink_.dispatch(node);
      result.actions_fired.insert(result.actions_fired.end(), node.actions.begin(), node.actions.end());
    }
    if (hook_) {
      if (MapPtr replacement = hook_(*run.working.map, step.to)) {
        if (!replacement->contains(*run.working.latest_node)) {
          throw std::logic_error("map rewrite hook dropped the current node");
        }
        run.working.map = std::move(replacement);
      }
    }
  }
  result.identified_node = run.working.latest_node.value_or(run.working.map->start());
  result.identification_source =
      result.identifications.empty() ? IdentificationSource::RetainedPrevious : result.identifications.back().source;

  run.working.history.push_back(user_message(user_text));
  run.working.history.push_back(assistant_message(result.agent_text));
  run.working.latest_node = result.identified_node;
  ++run.working.turn_counter;
  state = std::move(run.working);
  return result;
}

ConversationResult Engine::run_conversation(SessionState& state, const std::vector<std::string>& user_turns) const {
  ConversationResult out;
  for (std::size_t i = 0; i < user_turns.size(); ++i) {
    try {
      out.turns.push_back(run_turn(state, user_turns[i]));
    } catch (const std::exception& e) {
      out.failure = ConversationFailure{i, e.what()};
      break;
    }
    const auto kind = state.map->node(out.turns.back().identified_node).kind;
    if (kind == NodeKind::End || kind == NodeKind::Transfer) break;
  }
  return out;
}

std::string transcript_line(const std::string& session_id, const TurnResult& turn) {
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : turn.actions_fired) actions.push_back(a.name);
  nlohmann::json record = {
      {"session_id", session_id},
      {"turn", turn.turn},
      {"user", turn.user_text},
      {"agent", turn.agent_text},
      {"node", turn.identified_node.str()},
      {"source", std::string(to_string(turn.identification_source))},
      {"actions", std::move(actions)},
      {"calls",
       {{"chat", turn.provider_calls.chat}, {"embed", turn.provider_calls.embed}, {"judge", turn.provider_calls.judge}}},
  };
  return record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace paf
