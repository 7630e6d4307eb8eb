#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "paf/workflow_format.hpp"

namespace paf::testing {

std::string source_path(const std::string& relative) { return std::string(PAF_SOURCE_DIR) + "/" + relative; }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MapPtr load_example_map(const std::string& file_name) {
  return load_workflow(source_path("workflows/" + file_name)).map;
}

Fixture load_fixture(const std::string& path) {
  const auto j = nlohmann::json::parse(read_text(path));
  Fixture f;
  f.name = j.at("name");
  f.workflow = j.at("workflow");
  for (const auto& t : j.at("turns")) {
    FixtureTurn turn;
    turn.user = t.at("user");
    turn.agent = t.at("agent");
    turn.scores = t.at("scores").get<std::map<std::string, double>>();
    turn.judge = t.at("judge");
    turn.node = t.at("node");
    turn.optimized_source = t.at("optimized_source");
    turn.basic_source = t.at("basic_source");
    turn.jump = t.value("jump", false);
    turn.actions = t.value("actions", std::vector<std::string>{});
    f.turns.push_back(std::move(turn));
  }
  f.after_end = j.value("after_end", std::vector<std::string>{});
  return f;
}

std::vector<std::string> fixture_paths() {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(source_path("tests/fixtures/replay"))) {
    if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

FixtureWorld::FixtureWorld(const Fixture& fixture)
    : map(load_example_map(fixture.workflow)),
      agent([turns = fixture.turns](std::span<const ChatMessage> messages) -> std::string {
        const std::string& last = messages.back().content;
        for (const auto& t : turns) {
          if (last.find(t.user) != std::string::npos) return t.agent;
        }
        throw std::runtime_error("no scripted agent reply for: " + last);
      }),
      judge([turns = fixture.turns](std::span<const ChatMessage> messages) -> std::string {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
          if (it->role != ChatRole::Assistant) continue;
          for (const auto& t : turns) {
            if (t.agent == it->content) return t.judge;
          }
          break;
        }
        return "I cannot tell.";
      }) {
  std::set<std::string> agents;
  std::vector<PlantedPair> pairs;
  NodeId current = map->start();
  for (const auto& t : fixture.turns) {
    if (!agents.insert(t.agent).second) throw std::invalid_argument(fixture.name + ": agent text repeats");
    if (!sentence_boundaries(t.agent).empty()) throw std::invalid_argument(fixture.name + ": multi-sentence agent text");
    std::set<std::string> candidates{current.str()};
    for (const auto& c : map->children_of(current)) candidates.insert(c.id.str());
    std::set<std::string> listed;
    for (const auto& [id, score] : t.scores) {
      listed.insert(id);
      pairs.push_back({t.agent, map->node(NodeId(id)).instruction, score});
    }
    if (listed != candidates) throw std::invalid_argument(fixture.name + ": scores must cover exactly the candidates");
    current = NodeId(t.node);
  }
  embedder.plant(pairs);
}

Engine FixtureWorld::engine() {
  ActionSink sink;
  sink.otherwise([this](const ActionSpec& a, const Node&) { fired.push_back(a.name); });
  return Engine(Providers{&agent, &judge, &embedder}, std::move(sink));
}

FixtureRun run_fixture(const Fixture& fixture, Mode mode) {
  FixtureWorld world(fixture);
  const Engine engine = world.engine();
  SessionState state = new_session(world.map, mode, kDefaultThreshold, fixture.name);
  FixtureRun run;
  run.calls.embed += engine.ensure_store(state);
  for (const auto& t : fixture.turns) {
    run.turns.push_back(engine.run_turn(state, t.user));
    run.calls += run.turns.back().provider_calls;
  }
  return run;
}

MapDraft random_valid_draft(std::mt19937_64& rng, std::size_t max_nodes) {
  const std::size_t n = 1 + rng() % max_nodes;
  MapDraft d{"random", {}, {}};
  std::vector<std::string> ids{"s"};
  for (std::size_t i = 1; i < n; ++i) ids.push_back("n" + std::to_string(rng() % 90) + "_" + std::to_string(i));
  std::set<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 1; i < n; ++i) edges.insert({ids[rng() % i], ids[i]});
  const std::size_t extra = rng() % (2 * n);
  for (std::size_t k = 0; k < extra; ++k) edges.insert({ids[rng() % n], ids[rng() % n]});
  std::set<std::string> has_out;
  for (const auto& [f, t] : edges) has_out.insert(f);
  for (std::size_t i = 0; i < n; ++i) {
    NodeKind kind = i == 0 ? NodeKind::Start : NodeKind::Generic;
    if (i && !has_out.count(ids[i]) && rng() % 2) kind = rng() % 2 ? NodeKind::End : NodeKind::Transfer;
    d.nodes.push_back({ids[i], kind, "instruction " + ids[i], {}});
  }
  for (const auto& [f, t] : edges) d.edges.push_back({f, t, "when " + f + " to " + t});
  std::shuffle(d.edges.begin(), d.edges.end(), rng);
  return d;
}

std::vector<Embedding> TableEmbedder::embed(std::span<const std::string> texts) {
  ++calls;
  std::vector<Embedding> out;
  for (const auto& t : texts) {
    auto it = table.find(t);
    if (it == table.end()) throw ProviderError(ProviderErrorKind::Rejected, "no vector for '" + t + "'");
    out.emplace_back(it->second);
  }
  return out;
}

std::vector<Embedding> LookupEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  for (const auto& t : texts) {
    auto it = table.find(t);
    if (it == table.end()) throw ProviderError(ProviderErrorKind::Rejected, "no vector for '" + t + "'");
    out.emplace_back(it->second);
  }
  return out;
}

std::unique_ptr<RouterInstance> random_router_instance(std::mt19937_64& rng) {
  auto inst = std::make_unique<RouterInstance>();
  inst->map = validate_map(random_valid_draft(rng, 8));
  const std::size_t dim = 1 + rng() % 6;
  const auto grid_vector = [&] {
    std::vector<double> v(dim);
    for (auto& x : v) x = static_cast<double>(static_cast<int>(rng() % 9) - 4) / 4.0;
    return v;
  };
  std::vector<std::vector<double>> used;
  for (const auto& [id, node] : inst->map->nodes()) {
    // Reusing an earlier vector creates exact score ties.
    auto v = !used.empty() && rng() % 4 == 0 ? used[rng() % used.size()] : grid_vector();
    used.push_back(v);
    inst->embedder.table[node.instruction] = v;
  }
  std::vector<NodeId> ids;
  for (const auto& [id, node] : inst->map->nodes()) ids.push_back(id);
  inst->current = ids[rng() % ids.size()];
  inst->response = "response text";
  inst->embedder.table[inst->response] = grid_vector();

  const auto& r = inst->embedder.table[inst->response];
  switch (rng() % 3) {
    case 0: {
      // exactly the score of some candidate
      std::vector<NodeId> cands{inst->current};
      for (const auto& e : inst->map->edges()) {
        if (e.from == inst->current) cands.push_back(e.to);
      }
      const auto& v = inst->embedder.table[inst->map->node(cands[rng() % cands.size()]).instruction];
      inst->threshold = static_cast<double>(quad_dot(v, r));
      break;
    }
    case 1: inst->threshold = static_cast<double>(static_cast<int>(rng() % 17) - 8) / 4.0; break;
    default: inst->threshold = 0.5; break;
  }
  return inst;
}

__float128 quad_dot(std::span<const double> a, std::span<const double> b) {
  __float128 s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<__float128>(a[i]) * static_cast<__float128>(b[i]);
  return s;
}

OracleDecision oracle_route(const RouterInstance& inst) {
  std::set<std::string> candidates{inst.current.str()};
  for (const auto& e : inst.map->edges()) {
    if (e.from == inst.current) candidates.insert(e.to.str());
  }
  const auto& response = inst.embedder.table.at(inst.response);
  OracleDecision d;
  std::optional<std::string> best;
  __float128 best_score = 0;
  for (const auto& id : candidates) {
    const auto& v = inst.embedder.table.at(inst.map->node(NodeId(id)).instruction);
    const __float128 s = quad_dot(v, response);
    d.scores.emplace_back(id, static_cast<double>(s));
    if (!best || s > best_score) {
      best = id;
      best_score = s;
    }
  }
  if (static_cast<double>(best_score) >= inst.threshold) {
    d.node = best;
    d.score = static_cast<double>(best_score);
  }
  return d;
}

double oracle_upper_tail(double t, double df) {
  const long double nu = df;
  const long double log_c = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5L * std::log(nu * M_PIl);
  auto integrand = [&](long double u) -> long double {
    // limit at the far end: nonzero only for one degree of freedom
    if (u >= M_PI_2l) return nu == 1 ? std::exp(log_c) : 0.0L;
    const long double x = std::tan(u);
    return std::exp(log_c - (nu + 1) / 2 * std::log1p(x * x / nu)) * (1.0L + x * x);
  };
  const long double a = std::atan(static_cast<long double>(t));
  const long double b = M_PI_2l;
  const int n = 20000;
  const long double h = (b - a) / n;
  long double sum = integrand(a) + integrand(b);
  for (int i = 1; i < n; ++i) sum += integrand(a + i * h) * (i % 2 ? 4 : 2);
  return static_cast<double>(sum * h / 3);
}

EvalProviders PlantedEval::providers() {
  EvalProviders p;
  for (auto& [mode, generator] : generators) p.generators[mode] = generator.get();
  p.judge = &judge;
  p.router_embedder = &router;
  p.eval_embedder = &eval;
  return p;
}

std::unique_ptr<PlantedEval> planted_eval(std::size_t n, const std::map<Mode, double>& means, double spread,
                                          std::uint64_t seed) {
  auto world = std::make_unique<PlantedEval>();
  world->map = load_example_map("healthcare_eligibility.json");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    EvalRecord r;
    r.record_id = "rec-" + std::to_string(i);
    r.conversation_history = {user_message("question " + std::to_string(i))};
    r.golden_response = "golden " + std::to_string(i);
    world->eval.table[r.golden_response] = {1.0, 0.0};
    world->dataset.push_back(std::move(r));
  }
  for (const auto& [mode, mean] : means) {
    const std::string name(to_string(mode));
    world->generators[mode] = std::make_unique<MockChatProvider>([name](std::span<const ChatMessage> messages) {
      const std::string& last = messages.back().content;
      const auto at = last.find("question ");
      if (at == std::string::npos) throw std::runtime_error("no question in: " + last);
      std::size_t end = at + 9;
      while (end < last.size() && std::isdigit(static_cast<unsigned char>(last[end]))) ++end;
      return name + " reply " + last.substr(at + 9, end - at - 9);
    });
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::clamp(mean + spread * u(rng), -1.0, 1.0);
      world->planted[mode].push_back(s);
      world->eval.table[name + " reply " + std::to_string(i)] = {s, std::sqrt(1.0 - s * s)};
    }
  }
  return world;
}

}  // namespace paf::testing
