#pragma once

// Per-turn traversal loop: prompt from the path anchor, stream the agent reply,
// identify the node in-stream, fire actions, commit the session.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paf/graph.hpp"
#include "paf/providers.hpp"
#include "paf/vector_router.hpp"

namespace paf {

enum class Mode { Naive, Basic, Optimized };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

enum class IdentificationSource { Vector, Judge, RetainedPrevious };

std::string_view to_string(IdentificationSource source);

struct SessionState {
  std::string session_id;
  MapPtr map;
  /// Alternating user / assistant messages.
  std::vector<ChatMessage> history;
  std::optional<NodeId> latest_node;
  Mode mode = Mode::Basic;
  double threshold = kDefaultThreshold;
  std::size_t turn_counter = 0;
  /// Task label used in the judge's start-of-task line.
  std::string task;
  /// Shared, read-only; built on demand in optimized mode.
  std::shared_ptr<const VectorStore> store;
};

/// Fresh session positioned on the map's start node.
SessionState new_session(MapPtr map, Mode mode, double threshold = kDefaultThreshold,
                         std::string session_id = "session-0");

struct ProviderCalls {
  std::size_t chat = 0;
  std::size_t embed = 0;
  std::size_t judge = 0;

  ProviderCalls& operator+=(const ProviderCalls& other);
  friend bool operator==(const ProviderCalls&, const ProviderCalls&) = default;
};

/// One identification point inside a turn.
struct Identification {
  NodeId from;
  NodeId to;
  IdentificationSource source = IdentificationSource::Judge;
  /// Judge moved to a node that is neither `from` nor one of its children.
  bool jump = false;
  /// Length of the agent text that was scored.
  std::size_t text_length = 0;
};

struct TurnResult {
  std::size_t turn = 0;
  std::string user_text;
  std::string agent_text;
  NodeId identified_node;
  IdentificationSource identification_source = IdentificationSource::RetainedPrevious;
  std::vector<ActionSpec> actions_fired;
  ProviderCalls provider_calls;
  std::vector<Identification> identifications;

  std::size_t jump_count() const;
};

/// Dispatches node actions by name, in the node's declared order.
class ActionSink {
 public:
  using Handler = std::function<void(const ActionSpec&, const Node&)>;

  void on(const std::string& name, Handler handler) { handlers_[name] = std::move(handler); }
  /// Called for actions without a registered handler. Unset means ignore.
  void otherwise(Handler handler) { fallback_ = std::move(handler); }

  void dispatch(const Node& node) const;

 private:
  std::map<std::string, Handler> handlers_;
  Handler fallback_;
};

/// Returns a replacement map after `node` is identified, or nullptr to keep
/// the current one. The replacement must still contain `node`.
using MapRewriteHook = std::function<MapPtr(const NavigationMap& map, const NodeId& node)>;

struct Providers {
  ChatProvider* agent = nullptr;
  ChatProvider* judge = nullptr;
  EmbeddingProvider* embedder = nullptr;
};

/// Agent prompt: one system message and one user message.
std::vector<ChatMessage> build_agent_prompt(const SessionState& state, const std::string& user_text);

/// End offsets of sentences in `text`: positions just past a run of '.', '!'
/// or '?' that is followed by whitespace.
std::vector<std::size_t> sentence_boundaries(std::string_view text);

struct ConversationFailure {
  /// Zero-based index of the turn that failed.
  std::size_t turn_index = 0;
  std::string message;
};

struct ConversationResult {
  std::vector<TurnResult> turns;
  std::optional<ConversationFailure> failure;
};

class Engine {
 public:
  explicit Engine(Providers providers, ActionSink sink = {}, MapRewriteHook hook = {});

  /// Builds the session's vector store if it is missing or stale (optimized
  /// mode only). Returns the number of embed calls issued.
  std::size_t ensure_store(SessionState& state) const;

  /// Streams the agent reply and identifies the node. On any provider failure
  /// of the agent stream the error propagates and `state` is left untouched.
  /// `on_chunk` sees the agent's text as it streams.
  TurnResult run_turn(SessionState& state, const std::string& user_text, const ChunkSink& on_chunk = {}) const;

  /// Like run_turn, but the agent's reply is given instead of generated.
  TurnResult replay_turn(SessionState& state, const std::string& user_text, const std::string& agent_text) const;

  /// Runs turns in order, stopping after an end or transfer node is identified
  /// or at the first failing turn.
  ConversationResult run_conversation(SessionState& state, const std::vector<std::string>& user_turns) const;

 private:
  TurnResult execute(SessionState& state, const std::string& user_text, const std::string* scripted_reply,
                     const ChunkSink& on_chunk) const;

  Providers providers_;
  ActionSink sink_;
  MapRewriteHook hook_;
};

/// One JSON-lines transcript record (no trailing newline):
/// {session_id, turn, user, agent, node, source, actions, calls:{chat,embed,judge}}
std::string transcript_line(const std::string& session_id, const TurnResult& turn);

}  // namespace paf
