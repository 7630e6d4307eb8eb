#pragma once

// Chat-completion and embedding contracts shared by the mock and remote backends.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace paf {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);
/// Throws std::invalid_argument on anything but "system", "user", "assistant".
ChatRole parse_chat_role(std::string_view text);

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline ChatMessage system_message(std::string content) { return {ChatRole::System, std::move(content)}; }
inline ChatMessage user_message(std::string content) { return {ChatRole::User, std::move(content)}; }
inline ChatMessage assistant_message(std::string content) { return {ChatRole::Assistant, std::move(content)}; }

struct ChatChunk {
  std::string delta;
  bool is_final = false;
};

/// Embedding of one text. Components are finite; no normalization is applied.
class Embedding {
 public:
  Embedding() = default;
  /// Throws std::invalid_argument on an empty or non-finite vector.
  explicit Embedding(std::vector<double> components);

  std::size_t dimension() const { return components_.size(); }
  std::span<const double> components() const { return components_; }
  double operator[](std::size_t i) const { return components_[i]; }
  double norm() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> components_;
};

enum class ProviderErrorKind {
  Unavailable,        // transport failure, 5xx, 429: retryable
  Rejected,           // request refused (4xx, malformed request or response)
  StreamInterrupted,  // stream broke after partial output
  DimensionMismatch,  // embedder returned vectors of differing dimension
};

std::string_view to_string(ProviderErrorKind kind);

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ProviderErrorKind kind, const std::string& message, int status = 0, std::string partial = {});

  ProviderErrorKind kind() const { return kind_; }
  bool retryable() const { return kind_ == ProviderErrorKind::Unavailable; }
  /// Upstream HTTP status when there was one, otherwise 0.
  int status() const { return status_; }
  /// Text received before a StreamInterrupted failure.
  const std::string& partial_text() const { return partial_; }

 private:
  ProviderErrorKind kind_;
  int status_;
  std::string partial_;
};

using ChunkSink = std::function<void(const ChatChunk&)>;

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  /// Streams the reply to `on_chunk` in order. Exactly one chunk is final and
  /// it is the last. Requires a non-empty list whose first message is the
  /// system message; violations surface as ProviderError(Rejected).
  virtual void chat_stream(std::span<const ChatMessage> messages, const ChunkSink& on_chunk) = 0;

  /// Convenience: the concatenated reply.
  std::string chat(std::span<const ChatMessage> messages);
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One vector per input in order. Each text must be non-empty.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;

  /// Identifies the embedder (model and configuration) for store binding.
  virtual std::string tag() const = 0;

  Embedding embed_one(const std::string& text);
};

/// Throws ProviderError(Rejected) unless `messages` satisfies the chat precondition.
void check_chat_request(std::span<const ChatMessage> messages);
/// Throws ProviderError(Rejected) if any text is empty.
void check_embed_request(std::span<const std::string> texts);

/// Splits text into word chunks, each keeping its trailing whitespace:
/// "Hello there. Bye" -> {"Hello ", "there. ", "Bye"}.
std::vector<std::string> split_words(std::string_view text);

/// 64-bit FNV-1a; used to key scripted replies by system prompt.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 14695981039346656037ull);

}  // namespace paf
