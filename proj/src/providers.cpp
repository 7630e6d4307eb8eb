#include "paf/providers.hpp"

#include <cctype>
#include <cmath>

namespace paf {

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "user";
}

ChatRole parse_chat_role(std::string_view text) {
  if (text == "system") return ChatRole::System;
  if (text == "user") return ChatRole::User;
  if (text == "assistant") return ChatRole::Assistant;
  throw std::invalid_argument("unknown chat role '" + std::string(text) + "'");
}

Embedding::Embedding(std::vector<double> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("embedding must have a positive dimension");
  for (double c : components_) {
    if (!std::isfinite(c)) throw std::invalid_argument("embedding component is not finite");
  }
}

double Embedding::norm() const {
  double sum = 0.0;
  for (double c : components_) sum += c * c;
  return std::sqrt(sum);
}

std::string_view to_string(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::Unavailable: return "ProviderUnavailable";
    case ProviderErrorKind::Rejected: return "ProviderRejected";
    case ProviderErrorKind::StreamInterrupted: return "StreamInterrupted";
    case ProviderErrorKind::DimensionMismatch: return "DimensionMismatch";
  }
  return "?";
}

ProviderError::ProviderError(ProviderErrorKind kind, const std::string& message, int status, std::string partial)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      status_(status),
      partial_(std::move(partial)) {}

std::string ChatProvider::chat(std::span<const ChatMessage> messages) {
  std::string text;
  chat_stream(messages, [&](const ChatChunk& chunk) { text += chunk.delta; });
  return text;
}

Embedding EmbeddingProvider::embed_one(const std::string& text) {
  auto out = embed(std::span<const std::string>(&text, 1));
  if (out.size() != 1) throw ProviderError(ProviderErrorKind::Rejected, "embedder returned wrong vector count");
  return std::move(out.front());
}

void check_chat_request(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw ProviderError(ProviderErrorKind::Rejected, "empty message list");
  if (messages.front().role != ChatRole::System) {
    throw ProviderError(ProviderErrorKind::Rejected, "first message must have role system");
  }
  for (const auto& m : messages) {
    if (m.role != ChatRole::System && m.content.empty()) {
      throw ProviderError(ProviderErrorKind::Rejected, "empty " + std::string(to_string(m.role)) + " message");
    }
  }
}

void check_embed_request(std::span<const std::string> texts) {
  for (const auto& t : texts) {
    if (t.empty()) throw ProviderError(ProviderErrorKind::Rejected, "cannot embed empty text");
  }
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis) {
  std::uint64_t hash = basis;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace paf
