#include "paf/workflow_format.hpp"

#include <algorithm>
#include <cerrno>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <tuple>

#include <nlohmann/json.hpp>

namespace paf {

using json = nlohmann::json;

namespace {

struct Reader {
  std::vector<ParseDiagnostic> diagnostics;

  void error(DiagnosticCode code, std::string location, std::string message) {
    diagnostics.push_back({Severity::Error, code, std::move(location), std::move(message)});
  }
  void warn_unknown(const json& object, const std::string& path, std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : object.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        diagnostics.push_back({Severity::Warning, DiagnosticCode::UnknownField,
                               path.empty() ? key : path + "." + key, "unknown field '" + key + "' ignored"});
      }
    }
  }

  // Returns the member or nullptr, reporting MissingField / WrongType.
  const json* member(const json& object, const std::string& path, const char* key, json::value_t type,
                     bool required = true) {
    const std::string where = path.empty() ? std::string(key) : path + "." + key;
    auto it = object.find(key);
    if (it == object.end()) {
      if (required) error(DiagnosticCode::MissingField, where, "missing required field '" + std::string(key) + "'");
      return nullptr;
    }
    bool matches = it->type() == type;
    if (type == json::value_t::number_float) matches = it->is_number();
    if (!matches) {
      error(DiagnosticCode::WrongType, where, "field '" + std::string(key) + "' has the wrong type");
      return nullptr;
    }
    return &*it;
  }

  std::string text(const json& object, const std::string& path, const char* key, bool required = true) {
    const json* v = member(object, path, key, json::value_t::string, required);
    return v ? v->get<std::string>() : std::string();
  }

  ActionSpec action(const json& j, const std::string& path) {
    ActionSpec spec;
    if (!j.is_object()) {
      error(DiagnosticCode::WrongType, path, "action must be an object");
      return spec;
    }
    warn_unknown(j, path, {"name", "payload"});
    spec.name = text(j, path, "name");
    if (const json* payload = member(j, path, "payload", json::value_t::object, false)) {
      for (const auto& [key, value] : payload->items()) {
        if (!value.is_string()) {
          error(DiagnosticCode::WrongType, path + ".payload." + key, "payload values must be strings");
          continue;
        }
        spec.payload.emplace(key, value.get<std::string>());
      }
    }
    return spec;
  }

  NodeDraft node(const json& j, const std::string& path) {
    NodeDraft n;
    if (!j.is_object()) {
      error(DiagnosticCode::WrongType, path, "node must be an object");
      return n;
    }
    warn_unknown(j, path, {"id", "kind", "instruction", "actions"});
    n.id = text(j, path, "id");
    const std::string kind = text(j, path, "kind");
    if (j.contains("kind") && j["kind"].is_string()) {
      if (auto parsed = parse_node_kind(kind)) {
        n.kind = *parsed;
      } else {
        error(DiagnosticCode::BadNodeKind, path + ".kind", "unknown node kind '" + kind + "'");
      }
    }
    n.instruction = text(j, path, "instruction", false);
    if (const json* actions = member(j, path, "actions", json::value_t::array, false)) {
      for (std::size_t i = 0; i < actions->size(); ++i) {
        n.actions.push_back(action((*actions)[i], path + ".actions[" + std::to_string(i) + "]"));
      }
    }
    return n;
  }

  EdgeDraft edge(const json& j, const std::string& path) {
    EdgeDraft e;
    if (!j.is_object()) {
      error(DiagnosticCode::WrongType, path, "edge must be an object");
      return e;
    }
    warn_unknown(j, path, {"from", "to", "condition"});
    e.from = text(j, path, "from");
    e.to = text(j, path, "to");
    e.condition = text(j, path, "condition");
    return e;
  }
};

std::string line_column(std::string_view source, std::size_t byte) {
  // nlohmann reports a 1-based byte count of the last character read.
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, source.size());
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < end; ++i) {
    if (source[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return std::to_string(line) + ":" + std::to_string(column);
}

json to_json(const WorkflowDocument& doc) {
  const auto canonical = canonicalize(doc);
  json nodes = json::array();
  for (const auto& n : canonical.map.nodes) {
    json actions = json::array();
    for (const auto& a : n.actions) actions.push_back({{"name", a.name}, {"payload", a.payload}});
    nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"instruction", n.instruction},
                     {"actions", std::move(actions)}});
  }
  json edges = json::array();
  for (const auto& e : canonical.map.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"condition", e.condition}});
  json out = {{"version", canonical.format_version}, {"name", canonical.map.name}, {"nodes", std::move(nodes)},
              {"edges", std::move(edges)}};
  if (canonical.threshold) out["threshold"] = *canonical.threshold;
  return out;
}

}  // namespace

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::SyntaxError: return "SyntaxError";
    case DiagnosticCode::MissingField: return "MissingField";
    case DiagnosticCode::WrongType: return "WrongType";
    case DiagnosticCode::BadNodeKind: return "BadNodeKind";
    case DiagnosticCode::VersionUnsupported: return "VersionUnsupported";
    case DiagnosticCode::UnknownField: return "UnknownField";
  }
  return "?";
}

std::string format_diagnostic(const ParseDiagnostic& d) {
  std::string out = d.severity == Severity::Error ? "error: " : "warning: ";
  if (!d.location.empty()) out += d.location + ": ";
  return out + d.message;
}

std::size_t ParseResult::error_count() const {
  return std::count_if(diagnostics.begin(), diagnostics.end(),
                       [](const ParseDiagnostic& d) { return d.severity == Severity::Error; });
}

std::size_t ParseResult::warning_count() const { return diagnostics.size() - error_count(); }

ParseResult parse_workflow(std::string_view source) {
  ParseResult result;
  json root;
  try {
    root = json::parse(source.begin(), source.end());
  } catch (const json::parse_error& e) {
    result.diagnostics.push_back(
        {Severity::Error, DiagnosticCode::SyntaxError, line_column(source, e.byte), e.what()});
    return result;
  }

  Reader reader;
  if (!root.is_object()) {
    reader.error(DiagnosticCode::WrongType, "", "workflow must be a JSON object");
    result.diagnostics = std::move(reader.diagnostics);
    return result;
  }

  WorkflowDocument doc;
  reader.warn_unknown(root, "", {"version", "name", "threshold", "nodes", "edges"});
  doc.format_version = reader.text(root, "", "version");
  if (root.contains("version") && root["version"].is_string() && doc.format_version != kWorkflowFormatVersion) {
    reader.error(DiagnosticCode::VersionUnsupported, "version",
                 "unsupported format version '" + doc.format_version + "' (expected \"1\")");
  }
  doc.map.name = reader.text(root, "", "name");
  if (const json* t = reader.member(root, "", "threshold", json::value_t::number_float, false)) {
    doc.threshold = t->get<double>();
  }
  if (const json* nodes = reader.member(root, "", "nodes", json::value_t::array)) {
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      doc.map.nodes.push_back(reader.node((*nodes)[i], "nodes[" + std::to_string(i) + "]"));
    }
  }
  if (const json* edges = reader.member(root, "", "edges", json::value_t::array)) {
    for (std::size_t i = 0; i < edges->size(); ++i) {
      doc.map.edges.push_back(reader.edge((*edges)[i], "edges[" + std::to_string(i) + "]"));
    }
  }

  result.diagnostics = std::move(reader.diagnostics);
  if (result.error_count() == 0) result.document = std::move(doc);
  return result;
}

WorkflowDocument canonicalize(WorkflowDocument doc) {
  std::stable_sort(doc.map.nodes.begin(), doc.map.nodes.end(),
                   [](const NodeDraft& a, const NodeDraft& b) { return a.id < b.id; });
  std::stable_sort(doc.map.edges.begin(), doc.map.edges.end(), [](const EdgeDraft& a, const EdgeDraft& b) {
    return std::tie(a.from, a.to, a.condition) < std::tie(b.from, b.to, b.condition);
  });
  return doc;
}

bool structurally_equal(const WorkflowDocument& a, const WorkflowDocument& b) {
  return canonicalize(a) == canonicalize(b);
}

std::string serialize_workflow(const WorkflowDocument& doc) {
  return to_json(doc).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

WorkflowDocument to_document(const NavigationMap& map, std::optional<double> threshold) {
  WorkflowDocument doc;
  doc.map = map.to_draft();
  doc.threshold = threshold;
  return doc;
}

ParseResult load_workflow_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno ? errno : ENOENT, std::generic_category(), "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_workflow(buffer.str());
}

LoadedWorkflow load_workflow(const std::string& path) {
  auto parsed = load_workflow_file(path);
  if (!parsed.ok()) {
    std::string message = path + ": workflow has errors";
    for (const auto& d : parsed.diagnostics) message += "\n  " + format_diagnostic(d);
    throw std::runtime_error(message);
  }
  auto map = validate_map(parsed.document->map);
  return {std::move(*parsed.document), std::move(map)};
}

}  // namespace paf
