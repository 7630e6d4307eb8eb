#include "paf/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace paf {

namespace {

bool is_id_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '-';
}

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

std::string summarize(const std::vector<MapIssue>& issues) {
  std::ostringstream os;
  os << "invalid navigation map (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s")
     << ")";
  for (const auto& issue : issues) os << "\n  " << to_string(issue.kind) << ": " << issue.message;
  return os.str();
}

}  // namespace

NodeId::NodeId(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) throw std::invalid_argument("invalid node id '" + value_ + "'");
}

bool NodeId::is_valid(std::string_view value) {
  return !value.empty() && std::all_of(value.begin(), value.end(), is_id_char);
}

std::optional<NodeId> NodeId::parse(std::string_view value) {
  if (!is_valid(value)) return std::nullopt;
  return NodeId(std::string(value));
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Start: return "start";
    case NodeKind::Generic: return "generic";
    case NodeKind::End: return "end";
    case NodeKind::Transfer: return "transfer";
  }
  return "generic";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  if (text == "start") return NodeKind::Start;
  if (text == "generic") return NodeKind::Generic;
  if (text == "end") return NodeKind::End;
  if (text == "transfer") return NodeKind::Transfer;
  return std::nullopt;
}

std::string_view to_string(MapIssueKind kind) {
  switch (kind) {
    case MapIssueKind::InvalidNodeId: return "InvalidNodeId";
    case MapIssueKind::DuplicateNodeId: return "DuplicateNodeId";
    case MapIssueKind::DanglingEdge: return "DanglingEdge";
    case MapIssueKind::NoStartNode: return "NoStartNode";
    case MapIssueKind::MultipleStartNodes: return "MultipleStartNodes";
    case MapIssueKind::UnreachableNode: return "UnreachableNode";
    case MapIssueKind::EdgeOutOfEndNode: return "EdgeOutOfEndNode";
    case MapIssueKind::DuplicateEdge: return "DuplicateEdge";
    case MapIssueKind::EmptyInstruction: return "EmptyInstruction";
    case MapIssueKind::EmptyCondition: return "EmptyCondition";
    case MapIssueKind::EmptyActionName: return "EmptyActionName";
  }
  return "?";
}

MapValidationError::MapValidationError(std::vector<MapIssue> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

bool MapValidationError::has(MapIssueKind kind) const {
  return std::any_of(issues_.begin(), issues_.end(),
                     [kind](const MapIssue& i) { return i.kind == kind; });
}

UnknownNodeError::UnknownNodeError(const std::string& id)
    : std::out_of_range("unknown node '" + id + "'") {}

UnreachableTargetError::UnreachableTargetError(const std::string& id)
    : std::runtime_error("node '" + id + "' is not reachable from the start node") {}

std::vector<std::string> reachable_from(const MapDraft& draft, const std::string& start) {
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& e : draft.edges) adjacency[e.from].push_back(e.to);
  std::set<std::string> seen{start};
  std::deque<std::string> queue{start};
  while (!queue.empty()) {
    auto id = std::move(queue.front());
    queue.pop_front();
    for (const auto& next : adjacency[id]) {
      if (seen.insert(next).second) queue.push_back(next);
    }
  }
  return {seen.begin(), seen.end()};
}

std::vector<MapIssue> check_map(const MapDraft& draft) {
  std::vector<MapIssue> issues;
  auto report = [&](MapIssueKind kind, std::vector<std::string> ids, std::string message) {
    issues.push_back({kind, std::move(ids), std::move(message)});
  };

  std::map<std::string, const NodeDraft*> by_id;
  std::vector<std::string> starts;
  for (const auto& n : draft.nodes) {
    if (!NodeId::is_valid(n.id)) {
      report(MapIssueKind::InvalidNodeId, {n.id},
             "node id '" + n.id + "' must be non-empty and use only letters, digits, '_' or '-'");
    }
    if (!by_id.emplace(n.id, &n).second) {
      report(MapIssueKind::DuplicateNodeId, {n.id}, "node id '" + n.id + "' is declared twice");
      continue;
    }
    if (n.kind == NodeKind::Start) starts.push_back(n.id);
    if ((n.kind == NodeKind::Start || n.kind == NodeKind::Generic) && n.instruction.empty()) {
      report(MapIssueKind::EmptyInstruction, {n.id},
             std::string(to_string(n.kind)) + " node '" + n.id + "' has an empty instruction");
    }
    for (const auto& a : n.actions) {
      if (a.name.empty()) {
        report(MapIssueKind::EmptyActionName, {n.id}, "node '" + n.id + "' has an unnamed action");
      }
    }
  }

  if (starts.empty()) {
    report(MapIssueKind::NoStartNode, {}, "no node has kind 'start'");
  } else if (starts.size() > 1) {
    report(MapIssueKind::MultipleStartNodes, starts,
           "more than one start node: " + join(starts));
  }

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : draft.edges) {
    const std::string label = "edge " + e.from + " -> " + e.to;
    bool dangling = false;
    for (const auto* end : {&e.from, &e.to}) {
      if (!by_id.count(*end)) {
        report(MapIssueKind::DanglingEdge, {*end}, label + " references unknown node '" + *end + "'");
        dangling = true;
      }
    }
    if (e.condition.empty()) report(MapIssueKind::EmptyCondition, {e.from, e.to}, label + " has an empty condition");
    if (!pairs.emplace(e.from, e.to).second) {
      report(MapIssueKind::DuplicateEdge, {e.from, e.to}, label + " is declared twice");
    }
    if (!dangling && by_id.at(e.from)->kind == NodeKind::End) {
      report(MapIssueKind::EdgeOutOfEndNode, {e.from, e.to}, label + " leaves end node '" + e.from + "'");
    }
  }

  if (!starts.empty()) {
    std::set<std::string> reached;
    for (const auto& s : starts) {
      const auto from_s = reachable_from(draft, s);
      reached.insert(from_s.begin(), from_s.end());
    }
    std::vector<std::string> unreachable;
    for (const auto& [id, _] : by_id) {
      if (!reached.count(id)) unreachable.push_back(id);
    }
    if (!unreachable.empty()) {
      report(MapIssueKind::UnreachableNode, unreachable,
             "not reachable from '" + join(starts) + "': " + join(unreachable));
    }
  }
  return issues;
}

MapPtr validate_map(const MapDraft& draft) {
  auto issues = check_map(draft);
  if (!issues.empty()) throw MapValidationError(std::move(issues));

  std::shared_ptr<NavigationMap> map(new NavigationMap());
  map->name_ = draft.name;
  for (const auto& n : draft.nodes) {
    Node node{NodeId(n.id), n.kind, n.instruction, n.actions};
    if (n.kind == NodeKind::Start) map->start_ = node.id;
    map->nodes_.emplace(node.id, std::move(node));
  }
  for (const auto& e : draft.edges) map->edges_.push_back({NodeId(e.from), NodeId(e.to), e.condition});
  std::sort(map->edges_.begin(), map->edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  for (std::size_t i = 0; i < map->edges_.size(); ++i) {
    map->out_edges_[map->edges_[i].from].push_back(i);
  }
  return map;
}

bool NavigationMap::contains(std::string_view id) const {
  auto parsed = NodeId::parse(id);
  return parsed && contains(*parsed);
}

const Node& NavigationMap::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw UnknownNodeError(id.str());
  return it->second;
}

std::vector<ChildLink> NavigationMap::children_of(const NodeId& id) const {
  if (!contains(id)) throw UnknownNodeError(id.str());
  std::vector<ChildLink> out;
  auto it = out_edges_.find(id);
  if (it == out_edges_.end()) return out;
  // edges_ is sorted by (from, to), so this is already ascending by child id.
  for (auto index : it->second) {
    const auto& e = edges_[index];
    out.push_back({e.to, nodes_.at(e.to).instruction, e.condition});
  }
  return out;
}

bool NavigationMap::has_edge(const NodeId& from, const NodeId& to) const {
  auto it = out_edges_.find(from);
  if (it == out_edges_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](std::size_t i) { return edges_[i].to == to; });
}

PathAnchor NavigationMap::path_anchor(const NodeId& target) const {
  if (!contains(target)) throw UnknownNodeError(target.str());

  std::map<NodeId, NodeId> parent;
  std::set<NodeId> seen{start_};
  std::deque<NodeId> queue{start_};
  bool found = target == start_;
  while (!queue.empty() && !found) {
    auto id = queue.front();
    queue.pop_front();
    auto it = out_edges_.find(id);
    if (it == out_edges_.end()) continue;
    for (auto index : it->second) {
      const auto& next = edges_[index].to;
      if (!seen.insert(next).second) continue;
      parent.emplace(next, id);
      if (next == target) {
        found = true;
        break;
      }
      queue.push_back(next);
    }
  }
  if (!found) throw UnreachableTargetError(target.str());

  PathAnchor anchor;
  for (NodeId at = target;; at = parent.at(at)) {
    anchor.path.push_back(at);
    if (at == start_) break;
  }
  std::reverse(anchor.path.begin(), anchor.path.end());
  anchor.children = children_of(target);
  return anchor;
}

MapDraft NavigationMap::to_draft() const {
  MapDraft draft;
  draft.name = name_;
  for (const auto& [id, n] : nodes_) draft.nodes.push_back({id.str(), n.kind, n.instruction, n.actions});
  for (const auto& e : edges_) draft.edges.push_back({e.from.str(), e.to.str(), e.condition});
  return draft;
}

bool operator==(const NavigationMap& a, const NavigationMap& b) {
  return a.name_ == b.name_ && a.start_ == b.start_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
}

}  // namespace paf
