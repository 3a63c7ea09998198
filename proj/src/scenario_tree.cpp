#include "utilmax/scenario_tree.hpp"

#include "utilmax/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace utilmax {

namespace {

constexpr double kProbTol = 1e-12;

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    raise(ErrorCode::MalformedInput, "cannot parse number '" + text + "'");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size()) raise(ErrorCode::MalformedInput, "trailing characters in '" + text + "'");
  return v;
}

}  // namespace

double parse_probability(const std::string& text) {
  const auto slash = text.find('/');
  double p = 0.0;
  if (slash == std::string::npos) {
    p = parse_number(text);
  } else {
    const double num = parse_number(text.substr(0, slash));
    const double den = parse_number(text.substr(slash + 1));
    if (den == 0.0) raise(ErrorCode::MalformedInput, "zero denominator in '" + text + "'");
    p = num / den;
  }
  if (!std::isfinite(p)) raise(ErrorCode::MalformedInput, "non-finite probability '" + text + "'");
  return p;
}

ScenarioTree::ScenarioTree(int d, int T, std::vector<NodeSpec> specs, const TreeLimits& limits)
    : d_(d), T_(T) {
  if (d < 1) raise(ErrorCode::MalformedInput, "d must be >= 1");
  if (T < 1) raise(ErrorCode::MalformedInput, "T must be >= 1");
  if (specs.empty()) raise(ErrorCode::MalformedInput, "tree has no nodes");
  if (specs.size() > limits.max_nodes) {
    raise(ErrorCode::MalformedInput, "tree has " + std::to_string(specs.size()) + " nodes, limit is " +
                                         std::to_string(limits.max_nodes));
  }

  std::unordered_map<NodeId, std::size_t> by_id;
  by_id.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (!by_id.emplace(s.id, i).second) {
      raise(ErrorCode::MalformedInput, "duplicate node id " + std::to_string(s.id));
    }
    if (s.prices.size() != d) {
      raise(ErrorCode::MalformedInput, "node " + std::to_string(s.id) + " has " +
                                           std::to_string(s.prices.size()) + " prices, expected " +
                                           std::to_string(d));
    }
    if (!s.prices.allFinite()) raise(ErrorCode::MalformedInput, "non-finite price at node " + std::to_string(s.id));
    if (!std::isfinite(s.prob)) raise(ErrorCode::MalformedInput, "non-finite probability at node " + std::to_string(s.id));
  }

  std::optional<std::size_t> root;
  std::vector<std::vector<std::size_t>> kids(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (!s.parent) {
      if (root) raise(ErrorCode::BrokenFiliation, "more than one root");
      root = i;
      continue;
    }
    auto it = by_id.find(*s.parent);
    if (it == by_id.end()) {
      raise(ErrorCode::BrokenFiliation, "node " + std::to_string(s.id) + " has unknown parent " +
                                            std::to_string(*s.parent));
    }
    kids[it->second].push_back(i);
  }
  if (!root) raise(ErrorCode::BrokenFiliation, "no root node");
  if (std::abs(specs[*root].prob - 1.0) > kProbTol) {
    raise(ErrorCode::InvalidProbabilities, "root probability must be 1");
  }

  // Breadth-first relabelling; BFS from the root visits slices in order.
  std::vector<std::size_t> new_index(specs.size(), static_cast<std::size_t>(-1));
  std::deque<std::size_t> queue{*root};
  nodes_.reserve(specs.size());
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    Node n;
    n.id = specs[s].id;
    n.prices = specs[s].prices;
    n.branch_prob = specs[s].prob;
    if (specs[s].parent) {
      const NodeIndex p = new_index[by_id.at(*specs[s].parent)];
      n.parent = p;
      n.time = nodes_[p].time + 1;
      n.path_prob = nodes_[p].path_prob * n.branch_prob;
      if (n.time > T) {
        raise(ErrorCode::BrokenFiliation, "node " + std::to_string(n.id) + " lies beyond horizon T=" +
                                              std::to_string(T));
      }
    } else {
      n.branch_prob = 1.0;
    }
    new_index[s] = nodes_.size();
    if (n.parent) nodes_[*n.parent].children.push_back(nodes_.size());
    nodes_.push_back(std::move(n));
    for (std::size_t k : kids[s]) queue.push_back(k);
  }
  if (nodes_.size() != specs.size()) {
    raise(ErrorCode::BrokenFiliation, "nodes unreachable from the root (cycle in parent links)");
  }

  for (const auto& n : nodes_) {
    if (n.is_leaf()) {
      if (n.time != T) {
        raise(ErrorCode::BrokenFiliation, "leaf " + std::to_string(n.id) + " at time " + std::to_string(n.time) +
                                              ", expected T=" + std::to_string(T));
      }
      continue;
    }
    double sum = 0.0;
    for (NodeIndex c : n.children) {
      const double p = nodes_[c].branch_prob;
      if (!(p > 0.0) || p > 1.0 + kProbTol) {
        raise(ErrorCode::InvalidProbabilities, "branch probability of node " + std::to_string(nodes_[c].id) +
                                                   " outside (0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol) {
      std::ostringstream os;
      os.precision(17);
      os << "children of node " << n.id << " have probabilities summing to " << sum;
      raise(ErrorCode::InvalidProbabilities, os.str());
    }
  }

  slice_begin_.assign(T + 2, nodes_.size());
  for (std::size_t i = nodes_.size(); i-- > 0;) slice_begin_[nodes_[i].time] = i;
  order_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    order_[i] = i;
    by_id_.emplace(nodes_[i].id, i);
  }

  // Leaves occupy the last slice; BFS keeps each subtree's leaves contiguous.
  leaf_range_.assign(nodes_.size(), {0, 0});
  const std::size_t first_leaf = slice_begin_[T];
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      leaf_range_[i] = {i - first_leaf, i - first_leaf + 1};
    } else {
      leaf_range_[i] = {leaf_range_[n.children.front()].first, leaf_range_[n.children.back()].second};
    }
  }

  double total = 0.0;
  for (NodeIndex l : leaves()) total += nodes_[l].path_prob;
  if (std::abs(total - 1.0) > 1e-12 * std::max<double>(1.0, static_cast<double>(leaves().size()) / 1e3)) {
    raise(ErrorCode::InvalidProbabilities, "leaf path probabilities do not sum to 1");
  }
}

std::span<const NodeIndex> ScenarioTree::slice(int t) const {
  if (t < 0 || t > T_) return {};
  return std::span<const NodeIndex>(order_).subspan(slice_begin_[t], slice_begin_[t + 1] - slice_begin_[t]);
}

std::vector<NodeIndex> ScenarioTree::interior_nodes() const {
  return std::vector<NodeIndex>(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(slice_begin_[T_]));
}

NodeIndex ScenarioTree::index_of(NodeId id) const {
  auto i = find(id);
  if (!i) raise(ErrorCode::MalformedInput, "unknown node id " + std::to_string(id));
  return *i;
}

std::optional<NodeIndex> ScenarioTree::find(NodeId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd ScenarioTree::increment(NodeIndex child) const {
  const auto& n = nodes_[child];
  if (!n.parent) return Eigen::VectorXd::Zero(d_);
  return n.prices - nodes_[*n.parent].prices;
}

NodeIndex ScenarioTree::child_towards(NodeIndex ancestor, NodeIndex descendant) const {
  NodeIndex cur = descendant;
  while (nodes_[cur].parent && *nodes_[cur].parent != ancestor) cur = *nodes_[cur].parent;
  return cur;
}

Eigen::MatrixXd ConditionalDist::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(increments.size()), dim());
  for (std::size_t i = 0; i < increments.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = increments[i].transpose();
  return m;
}

ConditionalDist conditional_dist(const ScenarioTree& tree, NodeIndex node, bool merge) {
  const auto& n = tree.node(node);
  if (n.is_leaf()) raise(ErrorCode::LeafNode, "node " + std::to_string(n.id) + " is a leaf");
  ConditionalDist dist;
  dist.node = node;
  for (NodeIndex c : n.children) {
    Eigen::VectorXd y = tree.increment(c);
    const double p = tree.node(c).branch_prob;
    if (merge) {
      auto it = std::find_if(dist.increments.begin(), dist.increments.end(),
                             [&](const Eigen::VectorXd& z) { return z == y; });
      if (it != dist.increments.end()) {
        dist.probs[static_cast<std::size_t>(it - dist.increments.begin())] += p;
        continue;
      }
    }
    dist.increments.push_back(std::move(y));
    dist.probs.push_back(p);
  }
  return dist;
}

namespace {

using nlohmann::json;

int require_int(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    raise(ErrorCode::MalformedInput, std::string("missing or non-integer field '") + key + "'");
  }
  return j[key].get<int>();
}

ScenarioTree tree_from_json(const json& j, const TreeLimits& limits) {
  if (!j.is_object()) raise(ErrorCode::MalformedInput, "tree must be a JSON object");
  const int d = require_int(j, "d");
  const int T = require_int(j, "T");
  if (!j.contains("nodes") || !j["nodes"].is_array()) raise(ErrorCode::MalformedInput, "missing 'nodes' array");
  if (j["nodes"].size() > limits.max_nodes) raise(ErrorCode::MalformedInput, "tree exceeds node limit");
  if (d < 1) raise(ErrorCode::MalformedInput, "d must be >= 1");
  if (T < 1) raise(ErrorCode::MalformedInput, "T must be >= 1");

  std::vector<NodeSpec> specs;
  specs.reserve(j["nodes"].size());
  for (const auto& jn : j["nodes"]) {
    if (!jn.is_object()) raise(ErrorCode::MalformedInput, "node entries must be objects");
    NodeSpec s;
    if (!jn.contains("id") || !jn["id"].is_number_integer()) raise(ErrorCode::MalformedInput, "node without integer id");
    s.id = jn["id"].get<NodeId>();
    if (jn.contains("parent") && !jn["parent"].is_null()) {
      if (!jn["parent"].is_number_integer()) raise(ErrorCode::MalformedInput, "parent must be an integer or null");
      s.parent = jn["parent"].get<NodeId>();
    }
    if (jn.contains("prob")) {
      const auto& p = jn["prob"];
      if (p.is_number()) {
        s.prob = p.get<double>();
      } else if (p.is_string()) {
        s.prob = parse_probability(p.get<std::string>());
      } else {
        raise(ErrorCode::MalformedInput, "prob must be a number or a string");
      }
    } else if (s.parent) {
      raise(ErrorCode::MalformedInput, "non-root node " + std::to_string(s.id) + " without prob");
    }
    if (!jn.contains("prices") || !jn["prices"].is_array()) {
      raise(ErrorCode::MalformedInput, "node " + std::to_string(s.id) + " without prices array");
    }
    const auto& pr = jn["prices"];
    s.prices.resize(static_cast<Eigen::Index>(pr.size()));
    for (std::size_t k = 0; k < pr.size(); ++k) {
      if (!pr[k].is_number()) raise(ErrorCode::MalformedInput, "prices must be numbers");
      s.prices[static_cast<Eigen::Index>(k)] = pr[k].get<double>();
    }
    specs.push_back(std::move(s));
  }
  return ScenarioTree(d, T, std::move(specs), limits);
}

}  // namespace

ScenarioTree tree_from_json_text(const std::string& text, const TreeLimits& limits) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::MalformedInput, std::string("invalid JSON: ") + e.what());
  }
  return tree_from_json(j, limits);
}

ScenarioTree load_tree(std::istream& in, const TreeLimits& limits) {
  std::stringstream buf;
  buf << in.rdbuf();
  return tree_from_json_text(buf.str(), limits);
}

ScenarioTree load_tree(const std::filesystem::path& path, const TreeLimits& limits) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::MalformedInput, "cannot open " + path.string());
  return load_tree(in, limits);
}

std::string tree_to_json_text(const ScenarioTree& tree) {
  nlohmann::ordered_json j;
  j["d"] = tree.dim();
  j["T"] = tree.horizon();
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::ordered_json jn;
    jn["id"] = n.id;
    jn["parent"] = n.parent ? nlohmann::ordered_json(tree.node(*n.parent).id) : nlohmann::ordered_json(nullptr);
    jn["prob"] = n.branch_prob;
    jn["prices"] = std::vector<double>(n.prices.data(), n.prices.data() + n.prices.size());
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  return j.dump(2);
}

void save_tree(std::ostream& out, const ScenarioTree& tree) { out << tree_to_json_text(tree) << '\n'; }

}  // namespace utilmax
