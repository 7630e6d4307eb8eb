#include "paf/mock_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <set>

#include "paf/prompts.hpp"

namespace paf {

namespace {

// splitmix64: one 64-bit state, good enough spread for hashing-based vectors.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Uniform in [-1, 1).
  double symmetric() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }
};

std::vector<std::string_view> tokens_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

double dot_plain(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_of(const std::vector<double>& v) { return std::sqrt(dot_plain(v, v)); }

void normalize_in_place(std::vector<double>& v) {
  const double n = norm_of(v);
  if (n > 0.0) {
    for (auto& c : v) c /= n;
  }
}

// Solves (G + ridge*I) x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> g, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += g[i][i];
  const double ridge = 1e-12 * std::max(trace, 1.0);
  for (std::size_t i = 0; i < n; ++i) g[i][i] += ridge;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(g[r][col]) > std::abs(g[pivot][col])) pivot = r;
    }
    std::swap(g[col], g[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    if (g[col][col] == 0.0) continue;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = g[r][col] / g[col][col];
      for (std::size_t c = col; c < n; ++c) g[r][c] -= f * g[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= g[i][c] * x[c];
    x[i] = g[i][i] == 0.0 ? 0.0 : s / g[i][i];
  }
  return x;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> content_words(std::string_view text) {
  static const std::set<std::string> kStop = {"the", "and", "are", "was", "for", "with", "not", "has", "have",
                                              "their", "they", "that", "this", "there", "caller", "user",
                                              "you", "your", "his", "her", "its", "any", "but", "all"};
  std::set<std::string> out;
  std::string word;
  auto flush = [&] {
    if (word.size() >= 3 && !kStop.count(word)) out.insert(word);
    word.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

const ChatMessage* last_with_role(std::span<const ChatMessage> messages, ChatRole role) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == role) return &*it;
  }
  return nullptr;
}

// Rest of the line following `prefix`.
std::optional<std::string> find_after(std::string_view text, std::string_view prefix) {
  auto pos = text.find(prefix);
  if (pos == std::string_view::npos) return std::nullopt;
  pos += prefix.size();
  auto end = text.find('\n', pos);
  return std::string(text.substr(pos, end == std::string_view::npos ? end : end - pos));
}

}  // namespace

// --- MockChatProvider ---

void MockChatProvider::script(std::string last_user, std::string reply, std::optional<std::uint64_t> system_hash) {
  script_chunks(std::move(last_user), split_words(reply), system_hash);
}

void MockChatProvider::script_chunks(std::string last_user, std::vector<std::string> chunks,
                                     std::optional<std::uint64_t> system_hash) {
  std::unique_lock lock(mutex_);
  scripted_[{system_hash, std::move(last_user)}] = std::move(chunks);
}

void MockChatProvider::chat_stream(std::span<const ChatMessage> messages, const ChunkSink& on_chunk) {
  ++calls_;
  check_chat_request(messages);

  const ChatMessage* user = last_with_role(messages, ChatRole::User);
  const std::string last_user = user ? user->content : std::string();
  const std::uint64_t hash = fnv1a64(messages.front().content);

  std::vector<std::string> chunks;
  bool found = false;
  {
    std::shared_lock lock(mutex_);
    for (const Key& key : {Key{hash, last_user}, Key{std::nullopt, last_user}}) {
      if (auto it = scripted_.find(key); it != scripted_.end()) {
        chunks = it->second;
        found = true;
        break;
      }
    }
  }
  if (!found) {
    if (!fallback_) throw ProviderError(ProviderErrorKind::Rejected, "no scripted reply for '" + last_user + "'");
    chunks = split_words(fallback_(messages));
  }

  if (chunks.empty()) chunks.emplace_back();
  for (std::size_t i = 0; i < chunks.size(); ++i) on_chunk({chunks[i], i + 1 == chunks.size()});
}

// --- MockEmbeddingProvider ---

MockEmbeddingProvider::MockEmbeddingProvider(Options options) : options_(options) {
  if (options_.dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::string MockEmbeddingProvider::tag() const {
  return "mock-hash:d=" + std::to_string(options_.dimension) + ":seed=" + std::to_string(options_.seed) +
         (options_.normalize ? ":unit" : "");
}

Embedding MockEmbeddingProvider::hashed(const std::string& text) const {
  const std::size_t d = options_.dimension;
  const double scale = std::sqrt(3.0 / static_cast<double>(d));  // unit expected norm per token
  const std::uint64_t basis = fnv1a64(std::to_string(options_.seed));
  std::vector<double> v(d, 0.0);
  auto tokens = tokens_of(text);
  if (tokens.empty()) tokens.push_back(text);
  for (auto token : tokens) {
    SplitMix64 rng{fnv1a64(token, basis)};
    for (auto& c : v) c += scale * rng.symmetric();
  }
  if (options_.normalize) normalize_in_place(v);
  return Embedding(std::move(v));
}

std::vector<Embedding> MockEmbeddingProvider::embed(std::span<const std::string> texts) {
  ++calls_;
  check_embed_request(texts);
  std::vector<Embedding> out;
  out.reserve(texts.size());
  std::shared_lock lock(mutex_);
  for (const auto& t : texts) {
    if (auto it = planted_.find(t); it != planted_.end()) {
      out.emplace_back(it->second);
    } else {
      out.push_back(hashed(t));
    }
  }
  return out;
}

void MockEmbeddingProvider::plant(const std::vector<PlantedPair>& pairs) {
  std::unique_lock lock(mutex_);

  std::vector<std::string> order;
  std::set<std::string> listed;
  std::map<std::pair<std::string, std::string>, double> targets;
  for (const auto& p : pairs) {
    if (p.a.empty() || p.b.empty()) throw PlantingError("planted texts must be non-empty");
    if (p.a == p.b) throw PlantingError("cannot plant a text against itself: '" + p.a + "'");
    for (const auto* t : {&p.a, &p.b}) {
      if (listed.insert(*t).second) order.push_back(*t);
    }
    targets[{p.a, p.b}] = p.target;
    targets[{p.b, p.a}] = p.target;
  }

  const std::size_t d = options_.dimension;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string& text = order[i];
    if (planted_.count(text)) continue;

    std::vector<const std::vector<double>*> partners;
    std::vector<double> rhs;
    for (std::size_t j = 0; j < i; ++j) {
      auto t = targets.find({text, order[j]});
      if (t == targets.end()) continue;
      partners.push_back(&planted_.at(order[j]));
      rhs.push_back(t->second);
    }

    auto base = hashed(text);
    std::vector<double> fresh(base.components().begin(), base.components().end());
    if (partners.empty()) {
      if (options_.normalize) normalize_in_place(fresh);
      planted_.emplace(text, std::move(fresh));
      continue;
    }

    const std::size_t k = partners.size();
    std::vector<std::vector<double>> gram(k, std::vector<double>(k));
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) gram[r][c] = dot_plain(*partners[r], *partners[c]);
    }
    const auto alpha = solve(gram, rhs);
    std::vector<double> v(d, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < d; ++c) v[c] += alpha[r] * (*partners[r])[c];
    }

    // Component orthogonal to every partner keeps the new text distinct
    // without disturbing the solved dot products.
    std::vector<std::vector<double>> basis;
    for (const auto* p : partners) {
      auto q = *p;
      for (const auto& b : basis) {
        const double f = dot_plain(q, b);
        for (std::size_t c = 0; c < d; ++c) q[c] -= f * b[c];
      }
      if (norm_of(q) > 1e-12) {
        normalize_in_place(q);
        basis.push_back(std::move(q));
      }
    }
    for (const auto& b : basis) {
      const double f = dot_plain(fresh, b);
      for (std::size_t c = 0; c < d; ++c) fresh[c] -= f * b[c];
    }
    normalize_in_place(fresh);

    double beta = 1.0;
    if (options_.normalize) {
      const double solved = dot_plain(v, v);
      beta = solved < 1.0 ? std::sqrt(1.0 - solved) : 0.0;
    }
    for (std::size_t c = 0; c < d; ++c) v[c] += beta * fresh[c];
    planted_.emplace(text, std::move(v));
  }

  for (const auto& p : pairs) {
    const double got = dot_plain(planted_.at(p.a), planted_.at(p.b));
    if (std::abs(got - p.target) > 0.05) {
      throw PlantingError("cannot realize dot('" + p.a + "', '" + p.b + "') = " + std::to_string(p.target) +
                          " (got " + std::to_string(got) + ")");
    }
  }
}

std::vector<Embedding> NormalizingEmbedder::embed(std::span<const std::string> texts) {
  auto raw = inner_.embed(texts);
  std::vector<Embedding> out;
  out.reserve(raw.size());
  for (const auto& e : raw) {
    std::vector<double> v(e.components().begin(), e.components().end());
    normalize_in_place(v);
    out.emplace_back(std::move(v));
  }
  return out;
}

// --- workflow-aware responders ---

namespace mock {

Responder workflow_agent(MapPtr map) {
  return [map = std::move(map)](std::span<const ChatMessage> messages) -> std::string {
    NodeId current = map->start();
    if (auto declared = find_after(messages.front().content, prompts::kCurrentNodePrefix)) {
      std::string id = *declared;
      while (!id.empty() && !std::isalnum(static_cast<unsigned char>(id.back())) && id.back() != '_' &&
             id.back() != '-')
        id.pop_back();
      if (auto parsed = NodeId::parse(id); parsed && map->contains(*parsed)) current = *parsed;
    }

    std::string question;
    if (const ChatMessage* user = last_with_role(messages, ChatRole::User)) {
      question = user->content;
      if (question.starts_with(prompts::kAgentQueryPrefix)) question.erase(0, prompts::kAgentQueryPrefix.size());
    }
    const auto asked = content_words(question);

    NodeId chosen = current;
    std::size_t best = 0;
    for (const auto& child : map->children_of(current)) {
      std::size_t overlap = 0;
      for (const auto& w : content_words(child.condition)) overlap += asked.count(w);
      if (overlap > best) {
        best = overlap;
        chosen = child.id;
      }
    }
    const auto& instruction = map->node(chosen).instruction;
    return instruction.empty() ? "Thank you for calling. Goodbye." : instruction;
  };
}

Responder workflow_judge(MapPtr map) {
  return [map = std::move(map)](std::span<const ChatMessage> messages) -> std::string {
    const ChatMessage* said = last_with_role(messages, ChatRole::Assistant);
    if (said) {
      for (const auto& [id, node] : map->nodes()) {
        if (!node.instruction.empty() && said->content == node.instruction) return "Node " + id.str() + ".";
      }
      for (const auto& [id, node] : map->nodes()) {
        if (!node.instruction.empty() && node.instruction.starts_with(said->content)) {
          return "Node " + id.str() + ".";
        }
      }
    }
    return "I'm not sure where we are.";
  };
}

Responder simulated_user() {
  return [](std::span<const ChatMessage> messages) -> std::string {
    auto goal = find_after(messages.front().content, prompts::kUserGoalPrefix);
    if (!goal || goal->empty()) return "Could you repeat that?";
    std::string text = lower(*goal);
    if (text.back() != '.') text += '.';
    return "Well, " + text;
  };
}

Responder simulated_agent() {
  return [](std::span<const ChatMessage> messages) -> std::string {
    auto instruction = find_after(messages.front().content, prompts::kAgentInstructionPrefix);
    return instruction && !instruction->empty() ? *instruction : "Could you tell me more?";
  };
}

}  // namespace mock

}  // namespace paf
