#pragma once

// Threshold-gated node search over precomputed instruction embeddings.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "paf/graph.hpp"
#include "paf/providers.hpp"

namespace paf {

class DimensionMismatchError : public std::invalid_argument {
 public:
  DimensionMismatchError(std::size_t a, std::size_t b);
};

/// Dot product of two embeddings. The sum is compensated (error-free products
/// and sums), so the result matches a twice-working-precision evaluation.
/// Throws DimensionMismatchError.
double dot(const Embedding& a, const Embedding& b);
double dot(std::span<const double> a, std::span<const double> b);

/// Default vector-search threshold when neither the workflow nor the run sets one.
inline constexpr double kDefaultThreshold = 0.5;

/// One embedding per node instruction, bound to the map it was built from.
class VectorStore {
 public:
  const std::map<NodeId, Embedding>& entries() const { return entries_; }
  const Embedding& at(const NodeId& id) const;
  std::size_t dimension() const { return dimension_; }
  const std::string& provider_tag() const { return provider_tag_; }

  /// True when the store was built from a map with the same nodes and instructions.
  bool bound_to(const NavigationMap& map) const;

 private:
  friend VectorStore build_store(const NavigationMap& map, EmbeddingProvider& embedder);

  std::map<NodeId, Embedding> entries_;
  std::size_t dimension_ = 0;
  std::string provider_tag_;
  std::uint64_t fingerprint_ = 0;
};

/// Embeds every non-empty instruction in a single call. Nodes without an
/// instruction (end or transfer) get a zero vector. Provider errors propagate;
/// a partial store is never returned.
VectorStore build_store(const NavigationMap& map, EmbeddingProvider& embedder);

struct Selected {
  NodeId node;
  double score = 0.0;
};

struct Fallback {
  /// Set when the embedder failed; the caller still falls back to the judge.
  std::optional<std::string> error;
};

struct CandidateScore {
  NodeId node;
  double score = 0.0;
};

struct RouteDecision {
  std::variant<Selected, Fallback> outcome;
  /// Current node and its children, ascending by id, each scored once.
  std::vector<CandidateScore> scores;
  double threshold = kDefaultThreshold;

  bool selected() const { return std::holds_alternative<Selected>(outcome); }
  const Selected& selection() const { return std::get<Selected>(outcome); }
};

/// Scores the response against `current` and its first-layer children and
/// selects the best candidate when its score is at least `threshold` (ties go
/// to the smallest id). Issues exactly one embed call.
RouteDecision vector_node_search(const NavigationMap& map, const VectorStore& store, const NodeId& current,
                                 const std::string& latest_agent_response, double threshold,
                                 EmbeddingProvider& embedder);

/// Same decision rule applied to an already-embedded response.
RouteDecision decide_route(const NavigationMap& map, const VectorStore& store, const NodeId& current,
                           const Embedding& response, double threshold);

}  // namespace paf
