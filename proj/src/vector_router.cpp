#include "paf/vector_router.hpp"

#include <algorithm>
#include <cmath>

namespace paf {

namespace {

std::uint64_t fingerprint(const NavigationMap& map) {
  std::uint64_t h = fnv1a64(map.name());
  for (const auto& [id, node] : map.nodes()) {
    h = fnv1a64(id.str(), h ^ 0x1f);
    h = fnv1a64(node.instruction, h ^ 0x2f);
  }
  return h;
}

}  // namespace

DimensionMismatchError::DimensionMismatchError(std::size_t a, std::size_t b)
    : std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatchError(a.size(), b.size());
  double sum = 0.0;
  double compensation = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double product = a[i] * b[i];
    const double product_error = std::fma(a[i], b[i], -product);
    const double t = sum + product;
    const double z = t - sum;
    const double sum_error = (sum - (t - z)) + (product - z);
    sum = t;
    compensation += sum_error + product_error;
  }
  return sum + compensation;
}

double dot(const Embedding& a, const Embedding& b) { return dot(a.components(), b.components()); }

const Embedding& VectorStore::at(const NodeId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw UnknownNodeError(id.str());
  return it->second;
}

bool VectorStore::bound_to(const NavigationMap& map) const {
  return fingerprint_ == fingerprint(map) && entries_.size() == map.nodes().size();
}

VectorStore build_store(const NavigationMap& map, EmbeddingProvider& embedder) {
  std::vector<NodeId> ids;
  std::vector<std::string> texts;
  for (const auto& [id, node] : map.nodes()) {
    if (node.instruction.empty()) continue;
    ids.push_back(id);
    texts.push_back(node.instruction);
  }

  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw ProviderError(ProviderErrorKind::Rejected, "embedder returned " + std::to_string(vectors.size()) +
                                                         " vectors for " + std::to_string(texts.size()) + " texts");
  }

  VectorStore store;
  store.provider_tag_ = embedder.tag();
  store.fingerprint_ = fingerprint(map);
  store.dimension_ = vectors.empty() ? 0 : vectors.front().dimension();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dimension() != store.dimension_) {
      throw ProviderError(ProviderErrorKind::DimensionMismatch, "store vectors have differing dimensions");
    }
    store.entries_.emplace(ids[i], std::move(vectors[i]));
  }
  for (const auto& [id, node] : map.nodes()) {
    if (node.instruction.empty()) store.entries_.emplace(id, Embedding(std::vector<double>(store.dimension_, 0.0)));
  }
  return store;
}

RouteDecision decide_route(const NavigationMap& map, const VectorStore& store, const NodeId& current,
                           const Embedding& response, double threshold) {
  RouteDecision decision;
  decision.threshold = threshold;

  std::vector<NodeId> candidates{current};
  for (const auto& child : map.children_of(current)) {
    if (child.id != current) candidates.push_back(child.id);
  }
  std::sort(candidates.begin(), candidates.end());

  const CandidateScore* best = nullptr;
  for (const auto& id : candidates) {
    decision.scores.push_back({id, dot(store.at(id), response)});
  }
  for (const auto& c : decision.scores) {
    // Ascending order plus strict '>' keeps the smallest id on ties.
    if (!best || c.score > best->score) best = &c;
  }
  if (best && best->score >= threshold) {
    decision.outcome = Selected{best->node, best->score};
  } else {
    decision.outcome = Fallback{};
  }
  return decision;
}

RouteDecision vector_node_search(const NavigationMap& map, const VectorStore& store, const NodeId& current,
                                 const std::string& latest_agent_response, double threshold,
                                 EmbeddingProvider& embedder) {
  if (!map.contains(current)) throw UnknownNodeError(current.str());
  Embedding response;
  try {
    response = embedder.embed_one(latest_agent_response);
  } catch (const ProviderError& e) {
    RouteDecision decision;
    decision.threshold = threshold;
    decision.outcome = Fallback{std::string(e.what())};
    return decision;
  }
  if (response.dimension() != store.dimension()) {
    RouteDecision decision;
    decision.threshold = threshold;
    decision.outcome = Fallback{DimensionMismatchError(response.dimension(), store.dimension()).what()};
    return decision;
  }
  return decide_route(map, store, current, response, threshold);
}

}  // namespace paf
