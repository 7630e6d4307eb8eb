#pragma once

// Evaluation harness: simulated conversations with golden responses, per-method
// response generation, golden-similarity scoring, aggregation and the paired
// hypothesis tests between methods.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paf/engine.hpp"
#include "paf/graph.hpp"
#include "paf/providers.hpp"
#include "paf/stats.hpp"
#include "paf/vector_router.hpp"

namespace paf {

struct EvalRecord {
  std::string record_id;
  std::string system_prompt;
  /// user, assistant, ..., user: the last user message awaits the response.
  std::vector<ChatMessage> conversation_history;
  std::string golden_response;
  /// Node whose instruction the golden response was taken from, when known.
  std::optional<std::string> golden_node;
  std::map<std::string, std::string> generated;
  std::map<std::string, double> scores;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// One JSON object per line; keys sorted, no trailing newline.
std::string to_jsonl(const EvalRecord& record);
/// Throws std::invalid_argument on malformed input.
EvalRecord record_from_jsonl(std::string_view line);

void write_dataset(std::ostream& out, const std::vector<EvalRecord>& records);
/// Blank lines are skipped. Errors name the offending line number.
std::vector<EvalRecord> read_dataset(std::istream& in);

// --- metrics ---

inline constexpr double kHitThreshold = 0.97;
inline constexpr double kHighThreshold = 0.8;

struct MetricsSummary {
  std::string method;
  std::size_t total_hits = 0;       // scores > 0.97
  std::size_t count_above_0_8 = 0;  // scores > 0.8
  double mean = 0.0;
  double median = 0.0;
  std::size_t n = 0;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

/// Throws std::invalid_argument on an empty list. Permutation invariant: the
/// scores are sorted before summing.
MetricsSummary aggregate(std::span<const double> scores, std::string method = {});

/// Dot product of the two texts' embeddings, from one embed call.
double similarity(const std::string& generated, const std::string& golden, EmbeddingProvider& embedder);

// --- simulation ---

struct SimulationConfig {
  std::string persona = "a caller who answers the agent's questions briefly";
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::size_t turns_min = 6;
  std::size_t turns_max = 10;
  std::size_t workers = 1;
};

struct SimulationProviders {
  ChatProvider* user = nullptr;   // plays the caller
  ChatProvider* agent = nullptr;  // voices each designated node
};

struct SkippedRecord {
  std::size_t index = 0;
  std::string error;
};

struct SimulationManifest {
  std::size_t requested = 0;
  std::size_t produced = 0;
  std::vector<SkippedRecord> skipped;
  std::uint64_t seed = 0;
};

struct SimulationResult {
  std::vector<EvalRecord> records;
  SimulationManifest manifest;
};

/// Conversation length of record `index`, uniform on [turns_min, turns_max],
/// from the record's own RNG stream.
std::size_t simulated_turn_count(std::uint64_t seed, std::size_t index, std::size_t turns_min,
                                 std::size_t turns_max);

/// Node trace the record's conversation follows: one node per agent turn,
/// starting with a child of the start node.
std::vector<NodeId> simulated_trace(const NavigationMap& map, std::uint64_t seed, std::size_t index,
                                    std::size_t turns);

/// Throws std::invalid_argument when turns_min > turns_max or turns_min == 0.
SimulationResult simulate_dataset(const NavigationMap& map, const SimulationConfig& config,
                                  const SimulationProviders& providers);

// --- evaluation ---

struct EvalProviders {
  /// Response generator per method.
  std::map<Mode, ChatProvider*> generators;
  ChatProvider* judge = nullptr;
  /// Embedder for vector node search (optimized method).
  EmbeddingProvider* router_embedder = nullptr;
  /// Embedder for golden-response similarity.
  EmbeddingProvider* eval_embedder = nullptr;
};

struct EvalConfig {
  std::set<Mode> methods{Mode::Naive, Mode::Basic, Mode::Optimized};
  double threshold = kDefaultThreshold;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct NormStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct RecordFailure {
  std::string record_id;
  std::string method;
  std::string error;

  friend bool operator==(const RecordFailure&, const RecordFailure&) = default;
};

struct HypothesisTest {
  std::string hypothesis;  // "H1", "H2", "H3"
  TTestResult result;
};

struct EvalReport {
  std::vector<MetricsSummary> summaries;
  std::vector<HypothesisTest> tests;
  std::optional<NormStats> embedder_norm_stats;
  std::uint64_t seed = 0;
  /// Free-form run settings, stored as a JSON object string.
  std::string config_json = "{}";
  std::vector<RecordFailure> failures;
};

struct EvalOutcome {
  EvalReport report;
  /// Input records with `generated` and `scores` filled in.
  std::vector<EvalRecord> records;
};

/// The three comparisons, as (hypothesis, baseline method, challenger method).
struct Comparison {
  const char* hypothesis;
  Mode baseline;
  Mode challenger;
};
inline constexpr Comparison kComparisons[] = {
    {"H1", Mode::Naive, Mode::Basic},
    {"H2", Mode::Naive, Mode::Optimized},
    {"H3", Mode::Basic, Mode::Optimized},
};

/// Replays each record's history through the engine in every method, generates
/// the final response, scores it against the golden response, aggregates, and
/// runs H1-H3 on the records scored by both methods of each pair. Throws
/// std::invalid_argument on an empty dataset.
EvalOutcome run_eval(const std::vector<EvalRecord>& dataset, const MapPtr& map, const EvalProviders& providers,
                     const EvalConfig& config, std::shared_ptr<const VectorStore> store = nullptr);

}  // namespace paf
