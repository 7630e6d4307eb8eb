#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <system_error>
#include <thread>

#include <CLI11.hpp>

#include "paf/engine.hpp"
#include "paf/eval.hpp"
#include "paf/judge.hpp"
#include "paf/mock_providers.hpp"
#include "paf/remote_providers.hpp"
#include "paf/report.hpp"
#include "paf/workflow_format.hpp"

namespace paf::cli {

namespace {

// Raised for unreadable inputs and unwritable outputs.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write " + path);
}

LoadedWorkflow load(const std::string& path) {
  try {
    return load_workflow(path);
  } catch (const std::system_error& e) {
    throw IoError(e.what());
  }
}

struct Backend {
  std::unique_ptr<ChatProvider> agent;
  std::unique_ptr<ChatProvider> judge;
  std::unique_ptr<ChatProvider> sim_user;
  std::unique_ptr<ChatProvider> sim_agent;
  std::unique_ptr<EmbeddingProvider> router;
  std::unique_ptr<EmbeddingProvider> eval;
};

Backend make_backend(const std::string& provider, const MapPtr& map) {
  Backend b;
  if (provider == "remote") {
    const auto config = RemoteConfig::from_env();
    b.agent = std::make_unique<RemoteChatProvider>(config);
    b.judge = std::make_unique<RemoteChatProvider>(config);
    b.sim_user = std::make_unique<RemoteChatProvider>(config);
    b.sim_agent = std::make_unique<RemoteChatProvider>(config);
    b.router = std::make_unique<RemoteEmbeddingProvider>(config);
    b.eval = std::make_unique<RemoteEmbeddingProvider>(config);
    return b;
  }
  if (map) {
    b.agent = std::make_unique<MockChatProvider>(mock::workflow_agent(map));
    b.judge = std::make_unique<MockChatProvider>(mock::workflow_judge(map));
  }
  b.sim_user = std::make_unique<MockChatProvider>(mock::simulated_user());
  b.sim_agent = std::make_unique<MockChatProvider>(mock::simulated_agent());
  b.router = std::make_unique<MockEmbeddingProvider>(MockEmbeddingProvider::Options{64, 0, true});
  b.eval = std::make_unique<MockEmbeddingProvider>(MockEmbeddingProvider::Options{256, 0, true});
  return b;
}

double effective_threshold(const CLI::Option* flag, double value, const LoadedWorkflow& wf, std::ostream& err) {
  const double t = flag->count() == 0 && wf.document.threshold ? *wf.document.threshold : value;
  if (t < 0.0 || t > 2.0) err << "warning: threshold " << t << " is outside [0, 2]\n";
  return t;
}

struct Common {
  std::string workflow;
  std::string provider = "mock";
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
};

// --- validate ---

int cmd_validate(const std::string& path, std::ostream& out) {
  const std::string text = read_file(path);
  const auto parsed = parse_workflow(text);
  std::size_t errors = parsed.error_count();
  std::size_t warnings = parsed.warning_count();
  for (const auto& d : parsed.diagnostics) out << format_diagnostic(d) << '\n';
  if (parsed.document) {
    for (const auto& issue : check_map(parsed.document->map)) {
      out << "error: " << issue.message << '\n';
      ++errors;
    }
  }
  out << errors << (errors == 1 ? " error" : " errors");
  if (warnings) out << ", " << warnings << (warnings == 1 ? " warning" : " warnings");
  out << '\n';
  return errors ? kExitDomain : kExitOk;
}

// --- chat ---

int cmd_chat(const Common& c, const CLI::Option* threshold_flag, const std::string& mode_name, std::istream& in,
             std::ostream& out, std::ostream& err) {
  const auto mode = parse_mode(mode_name);
  if (!mode) throw std::invalid_argument("unknown mode '" + mode_name + "'");
  const auto wf = load(c.workflow);
  const double threshold = effective_threshold(threshold_flag, c.threshold, wf, err);
  auto backend = make_backend(c.provider, wf.map);

  ActionSink sink;
  sink.otherwise([&err](const ActionSpec& action, const Node& node) {
    err << "[action] " << action.name << " on node " << node.id.str() << '\n';
  });
  const Engine engine(Providers{backend.agent.get(), backend.judge.get(), backend.router.get()}, std::move(sink));
  SessionState state = new_session(wf.map, *mode, threshold, "chat");
  if (*mode == Mode::Optimized) {
    try {
      engine.ensure_store(state);
    } catch (const std::exception& e) {
      err << "error: cannot build the vector store: " << e.what() << '\n';
      return kExitDomain;
    }
  }

  std::unique_ptr<std::ofstream> transcript;
  if (!c.out.empty()) {
    transcript = std::make_unique<std::ofstream>(c.out, std::ios::binary | std::ios::trunc);
    if (!*transcript) throw IoError("cannot write " + c.out);
  }

  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      const auto turn = engine.run_turn(state, line, [&out](const ChatChunk& chunk) {
        out << chunk.delta;
        out.flush();
      });
      out << '\n';
      out.flush();
      err << "[turn " << turn.turn << "] node " << turn.identified_node.str() << " ("
          << to_string(turn.identification_source) << ")";
      if (turn.jump_count()) err << ", " << turn.jump_count() << " judge jump(s)";
      err << '\n';
      if (transcript) *transcript << transcript_line(state.session_id, turn) << '\n';
      const auto kind = state.map->node(turn.identified_node).kind;
      if (kind == NodeKind::End || kind == NodeKind::Transfer) {
        err << "[session ended at " << to_string(kind) << " node " << turn.identified_node.str() << "]\n";
        break;
      }
    } catch (const ProviderError& e) {
      out << '\n';
      err << "error: " << e.what() << '\n';
    } catch (const JudgeUnavailable& e) {
      out << '\n';
      err << "error: " << e.what() << '\n';
    }
  }
  if (transcript) {
    transcript->flush();
    if (!*transcript) throw IoError("cannot write " + c.out);
  }
  return kExitOk;
}

// --- simulate ---

int cmd_simulate(const Common& c, SimulationConfig sim, std::ostream& out, std::ostream& err) {
  if (c.out.empty()) throw std::invalid_argument("simulate needs --out");
  const auto wf = load(c.workflow);
  auto backend = make_backend(c.provider, wf.map);
  sim.seed = c.seed;
  sim.workers = c.workers;
  const auto result = simulate_dataset(*wf.map, sim, SimulationProviders{backend.sim_user.get(), backend.sim_agent.get()});

  std::ostringstream dataset;
  write_dataset(dataset, result.records);
  write_file(c.out, dataset.str());

  const auto& m = result.manifest;
  err << "simulated " << m.produced << " of " << m.requested << " records (skipped " << m.skipped.size()
      << ", seed " << m.seed << ")\n";
  for (const auto& s : m.skipped) err << "  skipped record " << s.index << ": " << s.error << '\n';
  out << c.out << '\n';
  return m.requested > 0 && m.produced == 0 ? kExitDomain : kExitOk;
}

// --- eval ---

int cmd_eval(const Common& c, const CLI::Option* threshold_flag, const std::string& dataset_path,
             const std::vector<std::string>& method_names, const std::string& records_out, std::ostream& out,
             std::ostream& err) {
  if (c.out.empty()) throw std::invalid_argument("eval needs --out");
  const auto wf = load(c.workflow);
  EvalConfig config;
  config.threshold = effective_threshold(threshold_flag, c.threshold, wf, err);
  config.seed = c.seed;
  config.workers = c.workers;
  if (!method_names.empty()) {
    config.methods.clear();
    for (const auto& name : method_names) {
      const auto mode = parse_mode(name);
      if (!mode) throw std::invalid_argument("unknown method '" + name + "'");
      config.methods.insert(*mode);
    }
  }

  std::istringstream dataset_text(read_file(dataset_path));
  const auto dataset = read_dataset(dataset_text);
  if (dataset.empty()) {
    err << "error: dataset " << dataset_path << " is empty\n";
    return kExitDomain;
  }

  auto backend = make_backend(c.provider, wf.map);
  EvalProviders providers;
  for (Mode mode : config.methods) providers.generators[mode] = backend.agent.get();
  providers.judge = backend.judge.get();
  providers.router_embedder = backend.router.get();
  providers.eval_embedder = backend.eval.get();

  const auto outcome = run_eval(dataset, wf.map, providers, config);
  write_file(c.out, report_to_json(outcome.report));
  if (!records_out.empty()) {
    std::ostringstream scored;
    write_dataset(scored, outcome.records);
    write_file(records_out, scored.str());
  }
  for (const auto& f : outcome.report.failures) {
    err << "failed: " << f.record_id << " (" << f.method << "): " << f.error << '\n';
  }
  out << render_report(outcome.report);
  return kExitOk;
}

// --- report ---

int cmd_report(const std::string& path, std::ostream& out) {
  out << render_report(report_from_json(read_file(path)));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Workflow-following conversational agent: validation, chat, simulation and evaluation"};
  app.name("paf");
  app.require_subcommand(1);

  Common common;
  const auto add_workflow = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--workflow", common.workflow, "Workflow JSON file");
    if (required) opt->required();
  };
  const auto add_provider = [&](CLI::App* cmd) {
    cmd->add_option("--provider", common.provider, "mock or remote (PAF_BASE_URL, PAF_API_KEY, ...)")
        ->check(CLI::IsMember({"mock", "remote"}))
        ->capture_default_str();
  };

  auto* validate = app.add_subcommand("validate", "Check a workflow file and print every diagnostic");
  validate->add_option("path", common.workflow, "Workflow JSON file");
  add_workflow(validate, false);

  std::string mode = "optimized";
  auto* chat = app.add_subcommand("chat", "Talk to the agent over a workflow, one user line per turn");
  add_workflow(chat, true);
  chat->add_option("--mode", mode, "naive, basic or optimized")->capture_default_str();
  auto* chat_threshold = chat->add_option("--threshold", common.threshold, "Vector search threshold")->capture_default_str();
  add_provider(chat);
  chat->add_option("--out", common.out, "Transcript JSONL file");

  SimulationConfig sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate conversations and write a JSONL dataset");
  add_workflow(simulate, true);
  simulate->add_option("--count", sim.count, "Number of conversations")->capture_default_str();
  simulate->add_option("--turns-min", sim.turns_min, "Shortest conversation, in user turns")->capture_default_str();
  simulate->add_option("--turns-max", sim.turns_max, "Longest conversation, in user turns")->capture_default_str();
  simulate->add_option("--persona", sim.persona, "Description of the simulated caller");
  simulate->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  simulate->add_option("--workers", common.workers, "Worker threads");
  add_provider(simulate);
  simulate->add_option("--out", common.out, "Dataset file")->required();

  std::string dataset_path, records_out;
  std::vector<std::string> methods;
  auto* eval = app.add_subcommand("eval", "Score every method on a dataset and test the differences");
  add_workflow(eval, true);
  eval->add_option("--dataset", dataset_path, "JSONL dataset")->required();
  eval->add_option("--methods", methods, "Subset of naive,basic,optimized (default: all)")->delimiter(',');
  auto* eval_threshold = eval->add_option("--threshold", common.threshold, "Vector search threshold")->capture_default_str();
  eval->add_option("--seed", common.seed, "Seed recorded in the report")->capture_default_str();
  eval->add_option("--workers", common.workers, "Worker threads");
  add_provider(eval);
  eval->add_option("--out", common.out, "Report JSON file")->required();
  eval->add_option("--records-out", records_out, "Write the scored dataset here");

  std::string report_path;
  auto* report = app.add_subcommand("report", "Print the tables of a report JSON file");
  report->add_option("path", report_path, "Report JSON file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitDomain;
  }
  if (common.workers == 0) common.workers = 1;

  try {
    if (*validate) {
      if (common.workflow.empty()) throw std::invalid_argument("validate needs a workflow path");
      return cmd_validate(common.workflow, out);
    }
    if (*chat) return cmd_chat(common, chat_threshold, mode, in, out, err);
    if (*simulate) return cmd_simulate(common, sim, out, err);
    if (*eval) return cmd_eval(common, eval_threshold, dataset_path, methods, records_out, out, err);
    if (*report) return cmd_report(report_path, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitEnvironment;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitDomain;
}

}  // namespace paf::cli
