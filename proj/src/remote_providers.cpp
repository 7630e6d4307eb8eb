#include "paf/remote_providers.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace paf {

using json = nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value && *value ? std::string(value) : fallback;
}

httplib::Headers auth_headers(const RemoteConfig& config, bool streaming) {
  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
  if (streaming) headers.emplace("Accept", "text/event-stream");
  return headers;
}

std::unique_ptr<httplib::Client> make_client(const std::string& host, const RemoteConfig& config) {
  auto client = std::make_unique<httplib::Client>(host);
  client->set_connection_timeout(std::chrono::seconds(10));
  client->set_read_timeout(config.timeout);
  client->set_write_timeout(config.timeout);
  return client;
}

// Maps a non-200 response onto the error taxonomy.
[[noreturn]] void throw_for_status(int status, const std::string& body) {
  std::string detail = body;
  try {
    auto j = json::parse(body);
    if (j.contains("error") && j["error"].is_object() && j["error"].contains("message")) {
      detail = j["error"]["message"].get<std::string>();
    }
  } catch (const std::exception&) {
  }
  const std::string message = "HTTP " + std::to_string(status) + (detail.empty() ? "" : ": " + detail);
  if (status == 429 || status >= 500) throw ProviderError(ProviderErrorKind::Unavailable, message, status);
  throw ProviderError(ProviderErrorKind::Rejected, message, status);
}

json messages_to_json(std::span<const ChatMessage> messages) {
  json out = json::array();
  for (const auto& m : messages) out.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return out;
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  config.base_url = env_or("PAF_BASE_URL", config.base_url);
  config.api_key = env_or("PAF_API_KEY", config.api_key);
  config.chat_model = env_or("PAF_CHAT_MODEL", config.chat_model);
  config.embed_model = env_or("PAF_EMBED_MODEL", config.embed_model);
  return config;
}

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("base URL needs a scheme: " + base_url);
  const std::string scheme = base_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw std::invalid_argument("unsupported scheme in " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  std::string host = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {host, prefix};
}

void SseParser::feed(std::string_view bytes, const std::function<void(std::string_view)>& on_data) {
  buffer_.append(bytes);
  std::size_t pos;
  while ((pos = buffer_.find('\n')) != std::string::npos) {
    std::string line = buffer_.substr(0, pos);
    buffer_.erase(0, pos + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("data:")) {
      std::string_view data(line);
      data.remove_prefix(5);
      if (!data.empty() && data.front() == ' ') data.remove_prefix(1);
      on_data(data);
    }
  }
}

void with_retries(const std::function<void()>& attempt, int max_retries, std::chrono::milliseconds initial_backoff,
                  const std::function<void(std::chrono::milliseconds)>& sleep) {
  auto backoff = initial_backoff;
  for (int tries = 0;; ++tries) {
    try {
      attempt();
      return;
    } catch (const ProviderError& e) {
      if (!e.retryable() || tries >= max_retries) throw;
    }
    if (sleep) {
      sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }
}

// --- chat ---

RemoteChatProvider::RemoteChatProvider(RemoteConfig config) : config_(std::move(config)) {
  std::tie(host_, prefix_) = split_base_url(config_.base_url);
}

void RemoteChatProvider::chat_stream(std::span<const ChatMessage> messages, const ChunkSink& on_chunk) {
  check_chat_request(messages);
  const std::string body = json{{"model", config_.chat_model},
                                {"stream", true},
                                {"messages", messages_to_json(messages)}}
                               .dump();
  bool delivered_any = false;

  auto attempt = [&] {
    auto client = make_client(host_, config_);
    httplib::Request req;
    req.method = "POST";
    req.path = prefix_ + "/chat/completions";
    req.headers = auth_headers(config_, true);
    req.set_header("Content-Type", "application/json");
    req.body = body;

    int status = 0;
    std::string error_body;
    std::string text;
    bool done = false;
    bool finished = false;
    std::optional<ProviderError> stream_error;
    SseParser parser;

    req.response_handler = [&](const httplib::Response& r) {
      status = r.status;
      return true;
    };
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      if (status != 200) {
        error_body.append(data, len);
        return true;
      }
      parser.feed(std::string_view(data, len), [&](std::string_view payload) {
        if (done || stream_error) return;
        if (payload == "[DONE]") {
          done = true;
          return;
        }
        json event;
        try {
          event = json::parse(payload);
        } catch (const json::exception&) {
          stream_error.emplace(ProviderErrorKind::StreamInterrupted, "malformed stream event", status, text);
          return;
        }
        if (event.contains("error")) {
          stream_error.emplace(ProviderErrorKind::Rejected, "upstream error event: " + event["error"].dump(), status);
          return;
        }
        if (!event.contains("choices") || !event["choices"].is_array() || event["choices"].empty()) return;
        const auto& choice = event["choices"][0];
        if (choice.contains("delta") && choice["delta"].contains("content") &&
            choice["delta"]["content"].is_string()) {
          auto delta = choice["delta"]["content"].get<std::string>();
          if (!delta.empty()) {
            text += delta;
            delivered_any = true;
            on_chunk({std::move(delta), false});
          }
        }
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) finished = true;
      });
      return !stream_error;
    };

    auto result = client->send(req);
    if (stream_error) throw *stream_error;
    if (!result) {
      if (delivered_any) {
        throw ProviderError(ProviderErrorKind::StreamInterrupted,
                            "connection lost mid-stream: " + httplib::to_string(result.error()), status, text);
      }
      throw ProviderError(ProviderErrorKind::Unavailable, httplib::to_string(result.error()));
    }
    if (status != 200) throw_for_status(status, error_body);
    if (!done && !finished) {
      throw ProviderError(ProviderErrorKind::StreamInterrupted, "stream ended without completion marker", status,
                          text);
    }
    on_chunk({"", true});
  };

  // A retry after partial delivery would duplicate text, so only clean
  // failures go back through the retry loop.
  with_retries(
      [&] {
        try {
          attempt();
        } catch (const ProviderError& e) {
          if (delivered_any && e.retryable()) {
            throw ProviderError(ProviderErrorKind::StreamInterrupted, e.what(), e.status());
          }
          throw;
        }
      },
      config_.max_retries, config_.initial_backoff);
}

// --- embeddings ---

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteConfig config) : config_(std::move(config)) {
  std::tie(host_, prefix_) = split_base_url(config_.base_url);
}

std::vector<Embedding> RemoteEmbeddingProvider::embed(std::span<const std::string> texts) {
  check_embed_request(texts);
  if (texts.empty()) return {};
  const std::string body =
      json{{"model", config_.embed_model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}}.dump();

  std::vector<Embedding> out;
  with_retries(
      [&] {
        auto client = make_client(host_, config_);
        auto result =
            client->Post(prefix_ + "/embeddings", auth_headers(config_, false), body, "application/json");
        if (!result) throw ProviderError(ProviderErrorKind::Unavailable, httplib::to_string(result.error()));
        if (result->status != 200) throw_for_status(result->status, result->body);

        json reply;
        try {
          reply = json::parse(result->body);
        } catch (const json::exception& e) {
          throw ProviderError(ProviderErrorKind::Rejected, std::string("malformed embeddings response: ") + e.what(),
                              200);
        }
        if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].size() != texts.size()) {
          throw ProviderError(ProviderErrorKind::Rejected, "embeddings response has the wrong number of vectors", 200);
        }
        std::vector<std::optional<Embedding>> slots(texts.size());
        std::size_t dimension = 0;
        for (std::size_t i = 0; i < reply["data"].size(); ++i) {
          const auto& item = reply["data"][i];
          const std::size_t index = item.value("index", i);
          std::vector<double> values;
          try {
            values = item.at("embedding").get<std::vector<double>>();
          } catch (const json::exception&) {
            throw ProviderError(ProviderErrorKind::Rejected, "embedding is not a numeric array", 200);
          }
          if (index >= slots.size() || slots[index]) {
            throw ProviderError(ProviderErrorKind::Rejected, "embedding index out of range or repeated", 200);
          }
          if (i == 0) dimension = values.size();
          if (values.size() != dimension || values.empty()) {
            throw ProviderError(ProviderErrorKind::DimensionMismatch,
                                "embedder returned dimensions " + std::to_string(dimension) + " and " +
                                    std::to_string(values.size()),
                                200);
          }
          try {
            slots[index].emplace(std::move(values));
          } catch (const std::invalid_argument& e) {
            throw ProviderError(ProviderErrorKind::Rejected, e.what(), 200);
          }
        }
        out.clear();
        for (auto& s : slots) out.push_back(std::move(*s));
      },
      config_.max_retries, config_.initial_backoff);
  return out;
}

}  // namespace paf
