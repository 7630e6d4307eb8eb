#pragma once

// JSON workflow files:
//
//   { "version": "1", "name": "...", "threshold": 0.5 (optional),
//     "nodes": [ { "id", "kind", "instruction", "actions": [ { "name", "payload" } ] } ],
//     "edges": [ { "from", "to", "condition" } ] }

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paf/graph.hpp"

namespace paf {

inline constexpr std::string_view kWorkflowFormatVersion = "1";

struct WorkflowDocument {
  std::string format_version{kWorkflowFormatVersion};
  MapDraft map;
  /// Vector-search threshold carried by the workflow; runs may override it.
  std::optional<double> threshold;

  friend bool operator==(const WorkflowDocument&, const WorkflowDocument&) = default;
};

enum class Severity { Error, Warning };

enum class DiagnosticCode { SyntaxError, MissingField, WrongType, BadNodeKind, VersionUnsupported, UnknownField };

std::string_view to_string(DiagnosticCode code);

struct ParseDiagnostic {
  Severity severity = Severity::Error;
  DiagnosticCode code = DiagnosticCode::SyntaxError;
  /// "line:column" for syntax errors, a field path such as "nodes[2].kind" otherwise.
  std::string location;
  std::string message;
};

/// "error: nodes[1].kind: unknown node kind 'midway'"
std::string format_diagnostic(const ParseDiagnostic& d);

struct ParseResult {
  std::optional<WorkflowDocument> document;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return document.has_value(); }
  std::size_t error_count() const;
  std::size_t warning_count() const;
};

/// Never throws; any input yields a document or diagnostics.
ParseResult parse_workflow(std::string_view source);

/// Canonical text: sorted keys, nodes sorted by id, edges by (from, to, condition),
/// two-space indentation and a trailing newline.
std::string serialize_workflow(const WorkflowDocument& doc);

/// The document with nodes and edges in canonical order.
WorkflowDocument canonicalize(WorkflowDocument doc);

/// Equality up to node and edge ordering.
bool structurally_equal(const WorkflowDocument& a, const WorkflowDocument& b);

WorkflowDocument to_document(const NavigationMap& map, std::optional<double> threshold = std::nullopt);

/// Reads and parses a file. Throws std::system_error when it cannot be read.
ParseResult load_workflow_file(const std::string& path);

/// Parses, validates and returns the map; throws std::runtime_error (with all
/// diagnostics in the message) or MapValidationError.
struct LoadedWorkflow {
  WorkflowDocument document;
  MapPtr map;
};
LoadedWorkflow load_workflow(const std::string& path);

}  // namespace paf
