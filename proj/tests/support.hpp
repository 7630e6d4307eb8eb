#pragma once

#include <map>
#include <memory>
#include <random>
#include <optional>
#include <string>
#include <vector>

#include "paf/engine.hpp"
#include "paf/eval.hpp"
#include "paf/graph.hpp"
#include "paf/mock_providers.hpp"

namespace paf::testing {

std::string source_path(const std::string& relative);
std::string read_text(const std::string& path);
MapPtr load_example_map(const std::string& file_name);

struct FixtureTurn {
  std::string user;
  std::string agent;
  std::map<std::string, double> scores;
  std::string judge;
  std::string node;
  std::string optimized_source;
  std::string basic_source;
  bool jump = false;
  std::vector<std::string> actions;
};

struct Fixture {
  std::string name;
  std::string workflow;
  std::vector<FixtureTurn> turns;
  std::vector<std::string> after_end;
};

Fixture load_fixture(const std::string& path);
std::vector<std::string> fixture_paths();

/// Mock providers realizing one fixture: the agent streams each turn's agent
/// text, the judge answers by the latest agent text, and the embedder is
/// planted with the turn's candidate scores.
struct FixtureWorld {
  explicit FixtureWorld(const Fixture& fixture);

  MapPtr map;
  MockChatProvider agent;
  MockChatProvider judge;
  MockEmbeddingProvider embedder{MockEmbeddingProvider::Options{64, 11, true}};
  std::vector<std::string> fired;

  Engine engine();
};

struct FixtureRun {
  std::vector<TurnResult> turns;
  ProviderCalls calls;
};

/// Runs every turn of the fixture in `mode`, store built up front.
FixtureRun run_fixture(const Fixture& fixture, Mode mode);

/// Random draft that always validates: a spanning tree from the start node
/// plus extra edges (self-loops and cycles included).
MapDraft random_valid_draft(std::mt19937_64& rng, std::size_t max_nodes);

/// Embedder backed by an explicit text -> vector table.
class TableEmbedder : public EmbeddingProvider {
 public:
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string tag() const override { return "table"; }

  std::map<std::string, std::vector<double>> table;
  std::size_t calls = 0;
};

/// Read-only text -> vector table, safe to share between workers.
class LookupEmbedder : public EmbeddingProvider {
 public:
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string tag() const override { return "lookup"; }

  std::map<std::string, std::vector<double>> table;
};

struct RouterInstance {
  MapPtr map;
  TableEmbedder embedder;
  NodeId current;
  std::string response;
  double threshold = 0.0;
};

/// Map of at most 8 nodes, vectors on a coarse grid (so ties and exact
/// threshold hits happen), threshold sometimes equal to a candidate score.
std::unique_ptr<RouterInstance> random_router_instance(std::mt19937_64& rng);

struct OracleDecision {
  std::optional<std::string> node;
  double score = 0.0;
  std::vector<std::pair<std::string, double>> scores;
};

/// Enumerates candidates straight from the edge list and applies the
/// max / threshold / smallest-id rules in quad precision.
OracleDecision oracle_route(const RouterInstance& instance);

/// Evaluation world with known per-record similarity scores. Record i asks
/// "question i"; method m answers "<m> reply i"; the eval embedder maps the
/// golden response to e1 and each reply to a unit vector whose first component
/// is the planted score.
struct PlantedEval {
  MapPtr map;
  std::vector<EvalRecord> dataset;
  std::map<Mode, std::vector<double>> planted;
  std::map<Mode, std::unique_ptr<MockChatProvider>> generators;
  MockChatProvider judge{[](std::span<const ChatMessage>) { return std::string("I cannot tell."); }};
  MockEmbeddingProvider router;
  LookupEmbedder eval;

  EvalProviders providers();
};

/// Scores for method m are means[m] + spread * U(-1, 1), clamped to [-1, 1].
std::unique_ptr<PlantedEval> planted_eval(std::size_t n, const std::map<Mode, double>& means, double spread,
                                          std::uint64_t seed);

/// P(T > t) for Student's t by composite Simpson integration of the density
/// after the substitution x = tan(u).
double oracle_upper_tail(double t, double df);

/// Sum of products accumulated in quad precision.
__float128 quad_dot(std::span<const double> a, std::span<const double> b);

}  // namespace paf::testing
