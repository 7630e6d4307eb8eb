#pragma once

// Deterministic offline providers for tests, simulations and the CLI's mock mode.

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "paf/graph.hpp"
#include "paf/providers.hpp"

namespace paf {

/// Produces a full reply from the prompt. Must be a pure function of its input.
using Responder = std::function<std::string(std::span<const ChatMessage>)>;

/// Scripted chat model. Replies are looked up by (system prompt hash, last
/// user message); an entry without a hash matches any system prompt. Unmatched
/// requests go to the responder, or are rejected when there is none.
class MockChatProvider : public ChatProvider {
 public:
  MockChatProvider() = default;
  explicit MockChatProvider(Responder fallback) : fallback_(std::move(fallback)) {}

  void script(std::string last_user, std::string reply, std::optional<std::uint64_t> system_hash = std::nullopt);
  /// Scripts a reply delivered in exactly these chunks.
  void script_chunks(std::string last_user, std::vector<std::string> chunks,
                     std::optional<std::uint64_t> system_hash = std::nullopt);

  void chat_stream(std::span<const ChatMessage> messages, const ChunkSink& on_chunk) override;

  std::size_t calls() const { return calls_.load(); }

 private:
  using Key = std::pair<std::optional<std::uint64_t>, std::string>;

  mutable std::shared_mutex mutex_;
  std::map<Key, std::vector<std::string>> scripted_;
  Responder fallback_;
  std::atomic<std::size_t> calls_{0};
};

struct PlantedPair {
  std::string a;
  std::string b;
  double target = 0.0;
};

class PlantingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded token-hashing embedder. Each whitespace token seeds a pseudo-random
/// dense vector; a text embeds to the sum over its tokens. Vectors are left
/// unnormalized unless `normalize` is set.
///
/// Planted texts get explicit vectors constructed so that declared pairs have
/// the requested dot products (within 0.05).
class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  struct Options {
    std::size_t dimension = 16;
    std::uint64_t seed = 0;
    bool normalize = false;
  };

  MockEmbeddingProvider() : MockEmbeddingProvider(Options{}) {}
  explicit MockEmbeddingProvider(Options options);

  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string tag() const override;

  /// Realizes the pairs' dot products. Texts planted by earlier calls keep
  /// their vectors. Throws PlantingError if some pair misses by more than 0.05.
  void plant(const std::vector<PlantedPair>& pairs);

  /// The vector a text would get from hashing alone.
  Embedding hashed(const std::string& text) const;

  std::size_t dimension() const { return options_.dimension; }
  std::size_t calls() const { return calls_.load(); }

 private:
  Options options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::vector<double>> planted_;
  std::atomic<std::size_t> calls_{0};
};

/// Unit-normalizes another embedder's output.
class NormalizingEmbedder : public EmbeddingProvider {
 public:
  explicit NormalizingEmbedder(EmbeddingProvider& inner) : inner_(inner) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string tag() const override { return inner_.tag() + ":unit"; }

 private:
  EmbeddingProvider& inner_;
};

namespace mock {

/// Agent that reads its current node from the prompt, follows the child edge
/// whose condition shares the most words with the user's message (staying put
/// when nothing matches) and answers with that node's instruction.
Responder workflow_agent(MapPtr map);

/// Judge that names the node whose instruction equals the latest assistant
/// message, or says it is unsure.
Responder workflow_judge(MapPtr map);

/// Simulated caller: restates the goal line of its system prompt.
Responder simulated_user();

/// Simulated agent: speaks the instruction line of its system prompt verbatim.
Responder simulated_agent();

}  // namespace mock

}  // namespace paf
