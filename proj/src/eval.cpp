#include "paf/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "paf/prompts.hpp"
#include "paf/workflow_format.hpp"
#include "parallel.hpp"

namespace paf {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

enum class Stream : std::uint32_t { Length = 0, Walk = 1 };

// Independent generator per (seed, record index, purpose); record order and
// scheduling never affect a record's draws.
std::mt19937_64 record_rng(std::uint64_t seed, std::size_t index, Stream purpose) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Uniform on [0, n) by rejection, identical on every standard library.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % n;
}

std::string render_conversation(const std::vector<ChatMessage>& history) {
  std::string out = "Conversation so far:\n";
  if (history.empty()) return out + "(no previous turns)\n";
  for (const auto& m : history) {
    out += m.role == ChatRole::User ? "Caller: " : "Agent: ";
    out += m.content + "\n";
  }
  return out;
}

std::string record_id_for(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "rec-" + digits;
}

bool is_terminal(NodeKind kind) { return kind == NodeKind::End || kind == NodeKind::Transfer; }

}  // namespace

// --- records ---

std::string to_jsonl(const EvalRecord& record) {
  json history = json::array();
  for (const auto& m : record.conversation_history) {
    history.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  json j = {{"record_id", record.record_id},
            {"system_prompt", record.system_prompt},
            {"conversation_history", std::move(history)},
            {"golden_response", record.golden_response}};
  if (record.golden_node) j["golden_node"] = *record.golden_node;
  if (!record.generated.empty()) j["generated"] = record.generated;
  if (!record.scores.empty()) j["scores"] = record.scores;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

EvalRecord record_from_jsonl(std::string_view line) {
  try {
    const json j = json::parse(line.begin(), line.end());
    EvalRecord r;
    r.record_id = j.value("record_id", std::string());
    r.system_prompt = j.value("system_prompt", std::string());
    for (const auto& m : j.at("conversation_history")) {
      r.conversation_history.push_back(
          {parse_chat_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    r.golden_response = j.at("golden_response").get<std::string>();
    if (j.contains("golden_node")) r.golden_node = j["golden_node"].get<std::string>();
    if (j.contains("generated")) r.generated = j["generated"].get<std::map<std::string, std::string>>();
    if (j.contains("scores")) r.scores = j["scores"].get<std::map<std::string, double>>();
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed dataset record: ") + e.what());
  }
}

void write_dataset(std::ostream& out, const std::vector<EvalRecord>& records) {
  for (const auto& r : records) out << to_jsonl(r) << '\n';
}

std::vector<EvalRecord> read_dataset(std::istream& in) {
  std::vector<EvalRecord> records;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    try {
      records.push_back(record_from_jsonl(line));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return records;
}

// --- metrics ---

MetricsSummary aggregate(std::span<const double> scores, std::string method) {
  if (scores.empty()) throw std::invalid_argument("cannot aggregate an empty score list");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());

  MetricsSummary s;
  s.method = std::move(method);
  s.n = sorted.size();
  double sum = 0.0;
  for (double v : sorted) {
    sum += v;
    if (v > kHitThreshold) ++s.total_hits;
    if (v > kHighThreshold) ++s.count_above_0_8;
  }
  s.mean = sum / static_cast<double>(s.n);
  const std::size_t mid = s.n / 2;
  s.median = s.n % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
  return s;
}

double similarity(const std::string& generated, const std::string& golden, EmbeddingProvider& embedder) {
  const std::vector<std::string> texts{generated, golden};
  const auto vectors = embedder.embed(texts);
  if (vectors.size() != 2) throw ProviderError(ProviderErrorKind::Rejected, "embedder returned wrong vector count");
  return dot(vectors[0], vectors[1]);
}

// --- simulation ---

std::size_t simulated_turn_count(std::uint64_t seed, std::size_t index, std::size_t turns_min,
                                 std::size_t turns_max) {
  if (turns_min == 0 || turns_min > turns_max) throw std::invalid_argument("need 0 < turns_min <= turns_max");
  auto rng = record_rng(seed, index, Stream::Length);
  return turns_min + uniform_below(rng, turns_max - turns_min + 1);
}

std::vector<NodeId> simulated_trace(const NavigationMap& map, std::uint64_t seed, std::size_t index,
                                    std::size_t turns) {
  auto rng = record_rng(seed, index, Stream::Walk);
  std::vector<NodeId> trace;
  NodeId current = map.start();
  for (std::size_t k = 0; k < turns; ++k) {
    const bool last = k + 1 == turns;
    std::vector<NodeId> options;
    for (const auto& child : map.children_of(current)) {
      const Node& node = map.node(child.id);
      if (node.instruction.empty()) continue;
      if (!last && is_terminal(node.kind)) continue;
      options.push_back(child.id);
    }
    if (!options.empty()) current = options[uniform_below(rng, options.size())];
    trace.push_back(current);
  }
  return trace;
}

SimulationResult simulate_dataset(const NavigationMap& map, const SimulationConfig& config,
                                  const SimulationProviders& providers) {
  if (config.turns_min == 0 || config.turns_min > config.turns_max) {
    throw std::invalid_argument("need 0 < turns_min <= turns_max");
  }
  if (!providers.user || !providers.agent) throw std::logic_error("simulation needs user and agent providers");

  const std::string system_prompt = serialize_workflow(to_document(map));
  std::vector<std::optional<EvalRecord>> slots(config.count);
  std::vector<std::string> errors(config.count);

  detail::parallel_for(config.count, config.workers, [&](std::size_t index) {
    try {
      const std::size_t turns = simulated_turn_count(config.seed, index, config.turns_min, config.turns_max);
      const auto trace = simulated_trace(map, config.seed, index, turns);

      EvalRecord record;
      record.record_id = record_id_for(index);
      record.system_prompt = system_prompt;
      NodeId previous = map.start();
      for (std::size_t k = 0; k < turns; ++k) {
        const NodeId& target = trace[k];
        std::string goal = "ask the agent to repeat or clarify the last step";
        for (const auto& child : map.children_of(previous)) {
          if (child.id == target) goal = child.condition;
        }
        const std::vector<ChatMessage> user_prompt{
            system_message("You are " + config.persona + ", talking with a voice agent.\n" +
                           std::string(prompts::kUserGoalPrefix) + goal + "\n" +
                           render_conversation(record.conversation_history)),
            user_message("Say your next line to the agent.")};
        const std::string user_text = trim(providers.user->chat(user_prompt));
        if (user_text.empty()) throw ProviderError(ProviderErrorKind::Rejected, "simulated user said nothing");
        record.conversation_history.push_back(user_message(user_text));
        if (k + 1 == turns) break;

        const std::vector<ChatMessage> agent_prompt{
            system_message("You are the voice agent of the workflow \"" + map.name() + "\".\n" +
                           std::string(prompts::kAgentInstructionPrefix) + map.node(target).instruction + "\n" +
                           render_conversation(record.conversation_history)),
            user_message(user_text)};
        const std::string agent_text = trim(providers.agent->chat(agent_prompt));
        if (agent_text.empty()) throw ProviderError(ProviderErrorKind::Rejected, "simulated agent said nothing");
        record.conversation_history.push_back(assistant_message(agent_text));
        previous = target;
      }
      record.golden_node = trace.back().str();
      record.golden_response = map.node(trace.back()).instruction;
      slots[index] = std::move(record);
    } catch (const std::exception& e) {
      errors[index] = e.what();
    }
  });

  SimulationResult result;
  result.manifest.requested = config.count;
  result.manifest.seed = config.seed;
  for (std::size_t i = 0; i < config.count; ++i) {
    if (slots[i]) {
      result.records.push_back(std::move(*slots[i]));
    } else {
      result.manifest.skipped.push_back({i, errors[i]});
    }
  }
  result.manifest.produced = result.records.size();
  return result;
}

// --- evaluation ---

EvalOutcome run_eval(const std::vector<EvalRecord>& dataset, const MapPtr& map, const EvalProviders& providers,
                     const EvalConfig& config, std::shared_ptr<const VectorStore> store) {
  if (dataset.empty()) throw std::invalid_argument("evaluation dataset is empty");
  if (!providers.eval_embedder) throw std::logic_error("evaluation needs an eval embedder");
  for (Mode mode : config.methods) {
    if (!providers.generators.count(mode) || !providers.generators.at(mode)) {
      throw std::logic_error("no generator for method " + std::string(to_string(mode)));
    }
  }
  if (config.methods.count(Mode::Optimized) && !store) {
    if (!providers.router_embedder) throw std::logic_error("optimized method needs a router embedder");
    store = std::make_shared<const VectorStore>(build_store(*map, *providers.router_embedder));
  }

  struct MethodResult {
    std::optional<std::string> generated;
    std::optional<double> score;
    std::string error;
    std::vector<double> norms;
  };
  const std::vector<Mode> methods(config.methods.begin(), config.methods.end());
  std::vector<std::vector<MethodResult>> results(dataset.size(), std::vector<MethodResult>(methods.size()));

  detail::parallel_for(dataset.size(), config.workers, [&](std::size_t index) {
    const EvalRecord& record = dataset[index];
    for (std::size_t m = 0; m < methods.size(); ++m) {
      MethodResult& out = results[index][m];
      try {
        const auto& history = record.conversation_history;
        if (history.empty() || history.back().role != ChatRole::User) {
          throw std::invalid_argument("history must end with a user message");
        }
        const Engine engine(
            Providers{providers.generators.at(methods[m]), providers.judge, providers.router_embedder});
        SessionState state = new_session(map, methods[m], config.threshold, record.record_id);
        state.store = store;
        for (std::size_t i = 0; i + 1 < history.size(); i += 2) {
          if (history[i].role != ChatRole::User || history[i + 1].role != ChatRole::Assistant) {
            throw std::invalid_argument("history must alternate user and assistant messages");
          }
          engine.replay_turn(state, history[i].content, history[i + 1].content);
        }
        const auto turn = engine.run_turn(state, history.back().content);
        out.generated = turn.agent_text;

        const std::vector<std::string> texts{turn.agent_text, record.golden_response};
        const auto vectors = providers.eval_embedder->embed(texts);
        if (vectors.size() != 2) throw ProviderError(ProviderErrorKind::Rejected, "embedder returned wrong count");
        out.score = dot(vectors[0], vectors[1]);
        out.norms = {vectors[0].norm(), vectors[1].norm()};
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  });

  EvalOutcome outcome;
  EvalReport& report = outcome.report;
  report.seed = config.seed;
  outcome.records = dataset;

  std::map<Mode, std::vector<double>> per_method;
  std::vector<double> norms;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& r = results[i][m];
      const std::string name(to_string(methods[m]));
      if (r.generated) outcome.records[i].generated[name] = *r.generated;
      if (r.score) {
        outcome.records[i].scores[name] = *r.score;
        per_method[methods[m]].push_back(*r.score);
        norms.insert(norms.end(), r.norms.begin(), r.norms.end());
      } else {
        report.failures.push_back({dataset[i].record_id, name, r.error});
      }
    }
  }

  for (Mode mode : methods) {
    if (!per_method[mode].empty()) report.summaries.push_back(aggregate(per_method[mode], std::string(to_string(mode))));
  }

  for (const auto& cmp : kComparisons) {
    if (!config.methods.count(cmp.baseline) || !config.methods.count(cmp.challenger)) continue;
    const std::string a_name(to_string(cmp.baseline)), b_name(to_string(cmp.challenger));
    std::vector<double> a, b;
    for (const auto& r : outcome.records) {
      auto ia = r.scores.find(a_name), ib = r.scores.find(b_name);
      if (ia != r.scores.end() && ib != r.scores.end()) {
        a.push_back(ia->second);
        b.push_back(ib->second);
      }
    }
    HypothesisTest test{cmp.hypothesis, {}};
    try {
      test.result = paired_t_one_sided(a, b, config.alpha);
    } catch (const TTestError&) {
      test.result.status = TTestStatus::InsufficientSamples;
      test.result.t_statistic = std::numeric_limits<double>::quiet_NaN();
      test.result.p_value = std::numeric_limits<double>::quiet_NaN();
      test.result.degrees_of_freedom = a.empty() ? 0.0 : static_cast<double>(a.size() - 1);
      test.result.alpha = config.alpha;
      test.result.n = a.size();
    }
    test.result.comparison = {a_name, b_name};
    report.tests.push_back(std::move(test));
  }

  if (!norms.empty()) {
    NormStats stats;
    stats.count = norms.size();
    stats.min = *std::min_element(norms.begin(), norms.end());
    stats.max = *std::max_element(norms.begin(), norms.end());
    double sum = 0.0;
    for (double v : norms) sum += v;
    stats.mean = sum / static_cast<double>(norms.size());
    report.embedder_norm_stats = stats;
  }

  json methods_json = json::array();
  for (Mode mode : methods) methods_json.push_back(std::string(to_string(mode)));
  report.config_json = json{{"methods", methods_json},
                            {"threshold", config.threshold},
                            {"alpha", config.alpha},
                            {"records", dataset.size()},
                            {"eval_embedder", providers.eval_embedder->tag()}}
                           .dump();
  return outcome;
}

}  // namespace paf
