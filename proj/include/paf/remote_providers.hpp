#pragma once

// OpenAI-compatible chat-completions (SSE streaming) and embeddings clients.

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "paf/providers.hpp"

namespace paf {

struct RemoteConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::string chat_model = "gpt-4o-mini";
  std::string embed_model = "text-embedding-3-small";
  /// Retries after the first attempt, for retryable failures only.
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{60};

  /// PAF_BASE_URL, PAF_API_KEY, PAF_CHAT_MODEL, PAF_EMBED_MODEL override the defaults.
  static RemoteConfig from_env();
};

/// Splits "https://host:port/v1" into ("https://host:port", "/v1").
/// Throws std::invalid_argument for anything that is not http(s).
std::pair<std::string, std::string> split_base_url(const std::string& base_url);

/// Incremental parser for "data: ..." server-sent events.
class SseParser {
 public:
  /// Feeds raw bytes; calls `on_data` with each complete data payload.
  void feed(std::string_view bytes, const std::function<void(std::string_view)>& on_data);

 private:
  std::string buffer_;
};

/// Runs `attempt` with exponential backoff on retryable ProviderErrors.
/// `sleep` is injectable for tests.
void with_retries(const std::function<void()>& attempt, int max_retries, std::chrono::milliseconds initial_backoff,
                  const std::function<void(std::chrono::milliseconds)>& sleep = {});

class RemoteChatProvider : public ChatProvider {
 public:
  explicit RemoteChatProvider(RemoteConfig config);
  void chat_stream(std::span<const ChatMessage> messages, const ChunkSink& on_chunk) override;

 private:
  RemoteConfig config_;
  std::string host_;
  std::string prefix_;
};

class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteConfig config);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string tag() const override { return "remote:" + config_.embed_model; }

 private:
  RemoteConfig config_;
  std::string host_;
  std::string prefix_;
};

}  // namespace paf
