#pragma once

// Navigation map: instruction-bearing nodes joined by condition-labelled edges.

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace paf {

/// Identifier of a node. Non-empty, restricted to [A-Za-z0-9_-].
class NodeId {
 public:
  NodeId() = default;
  /// Throws std::invalid_argument when `value` is not a legal id.
  explicit NodeId(std::string value);

  static bool is_valid(std::string_view value);
  static std::optional<NodeId> parse(std::string_view value);

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;

 private:
  std::string value_;
};

enum class NodeKind { Start, Generic, End, Transfer };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);

struct ActionSpec {
  std::string name;
  std::map<std::string, std::string> payload;

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Generic;
  std::string instruction;
  std::vector<ActionSpec> actions;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId from;
  NodeId to;
  std::string condition;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Unvalidated records as they come out of a file or a builder. Ids are plain
// strings here; validation decides whether they are legal.
struct NodeDraft {
  std::string id;
  NodeKind kind = NodeKind::Generic;
  std::string instruction;
  std::vector<ActionSpec> actions;

  friend bool operator==(const NodeDraft&, const NodeDraft&) = default;
};

struct EdgeDraft {
  std::string from;
  std::string to;
  std::string condition;

  friend bool operator==(const EdgeDraft&, const EdgeDraft&) = default;
};

struct MapDraft {
  std::string name;
  std::vector<NodeDraft> nodes;
  std::vector<EdgeDraft> edges;

  friend bool operator==(const MapDraft&, const MapDraft&) = default;
};

enum class MapIssueKind {
  InvalidNodeId,
  DuplicateNodeId,
  DanglingEdge,
  NoStartNode,
  MultipleStartNodes,
  UnreachableNode,
  EdgeOutOfEndNode,
  DuplicateEdge,
  EmptyInstruction,
  EmptyCondition,
  EmptyActionName,
};

std::string_view to_string(MapIssueKind kind);

struct MapIssue {
  MapIssueKind kind;
  /// Ids the issue is about (the offending node, the dangling endpoint, the
  /// full list of unreachable nodes, ...).
  std::vector<std::string> ids;
  std::string message;
};

class MapValidationError : public std::runtime_error {
 public:
  explicit MapValidationError(std::vector<MapIssue> issues);
  const std::vector<MapIssue>& issues() const { return issues_; }
  /// True when at least one issue has the given kind.
  bool has(MapIssueKind kind) const;

 private:
  std::vector<MapIssue> issues_;
};

/// Lookup error for queries against a validated map.
class UnknownNodeError : public std::out_of_range {
 public:
  explicit UnknownNodeError(const std::string& id);
};

class UnreachableTargetError : public std::runtime_error {
 public:
  explicit UnreachableTargetError(const std::string& id);
};

struct ChildLink {
  NodeId id;
  std::string instruction;
  std::string condition;

  friend bool operator==(const ChildLink&, const ChildLink&) = default;
};

/// Path from the start node to a target plus the target's first-layer children.
struct PathAnchor {
  std::vector<NodeId> path;
  std::vector<ChildLink> children;
};

class NavigationMap;
using MapPtr = std::shared_ptr<const NavigationMap>;

/// Validated, immutable navigation map. Build one with validate_map().
class NavigationMap {
 public:
  const std::string& name() const { return name_; }
  const NodeId& start() const { return start_; }

  /// Nodes in ascending id order.
  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  /// Edges in ascending (from, to) order.
  const std::vector<Edge>& edges() const { return edges_; }

  bool contains(const NodeId& id) const { return nodes_.count(id) != 0; }
  bool contains(std::string_view id) const;
  const Node& node(const NodeId& id) const;

  /// Out-neighbours of `id` in ascending id order. Throws UnknownNodeError.
  std::vector<ChildLink> children_of(const NodeId& id) const;
  /// True when an edge from -> to exists.
  bool has_edge(const NodeId& from, const NodeId& to) const;

  /// Breadth-first shortest path from start to `target`, expanding children in
  /// ascending id order, plus the target's children.
  PathAnchor path_anchor(const NodeId& target) const;

  /// Back to the unvalidated form (nodes and edges in canonical order).
  MapDraft to_draft() const;

  friend bool operator==(const NavigationMap&, const NavigationMap&);

 private:
  friend MapPtr validate_map(const MapDraft& draft);
  NavigationMap() = default;

  std::string name_;
  NodeId start_;
  std::map<NodeId, Node> nodes_;
  std::vector<Edge> edges_;
  std::map<NodeId, std::vector<std::size_t>> out_edges_;
};

/// Every structural problem in `draft`; empty when the draft is a legal map.
std::vector<MapIssue> check_map(const MapDraft& draft);

/// Validates and freezes a draft. Throws MapValidationError listing every issue.
MapPtr validate_map(const MapDraft& draft);

/// Ids reachable from `start` by directed edges (including start itself).
std::vector<std::string> reachable_from(const MapDraft& draft, const std::string& start);

}  // namespace paf
