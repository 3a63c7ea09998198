#pragma once

// Finite scenario-tree market models: a rooted tree whose nodes are the
// atoms of the filtration, carrying branch probabilities and asset prices.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace utilmax {

using NodeId = std::int64_t;
using NodeIndex = std::size_t;

struct Node {
  NodeId id = 0;
  int time = 0;
  std::optional<NodeIndex> parent;
  double branch_prob = 1.0;
  double path_prob = 1.0;
  Eigen::VectorXd prices;
  std::vector<NodeIndex> children;

  bool is_leaf() const { return children.empty(); }
};

/// Raw node record as it appears in the input file, before validation.
struct NodeSpec {
  NodeId id = 0;
  std::optional<NodeId> parent;
  double prob = 1.0;
  Eigen::VectorXd prices;
};

struct TreeLimits {
  std::size_t max_nodes = 1'000'000;
};

/// Immutable, validated tree. Nodes are stored in breadth-first order so
/// that every time slice is a contiguous index range and parents precede
/// their children.
class ScenarioTree {
 public:
  ScenarioTree(int d, int T, std::vector<NodeSpec> specs, const TreeLimits& limits = {});

  int dim() const { return d_; }
  int horizon() const { return T_; }
  std::size_t size() const { return nodes_.size(); }
  NodeIndex root() const { return 0; }

  const Node& node(NodeIndex i) const { return nodes_[i]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::span<const NodeIndex> children(NodeIndex i) const { return nodes_[i].children; }
  std::span<const NodeIndex> slice(int t) const;
  std::span<const NodeIndex> leaves() const { return slice(T_); }
  std::vector<NodeIndex> interior_nodes() const;

  NodeIndex index_of(NodeId id) const;
  std::optional<NodeIndex> find(NodeId id) const;

  /// Price increment S_child - S_parent.
  Eigen::VectorXd increment(NodeIndex child) const;

  /// Leaves of the subtree rooted at `i`, as a contiguous index range into
  /// leaves() (BFS order keeps subtree leaves contiguous).
  std::pair<std::size_t, std::size_t> leaf_range(NodeIndex i) const { return leaf_range_[i]; }

  /// Leaf descendant -> the child of `ancestor` on the path to it.
  NodeIndex child_towards(NodeIndex ancestor, NodeIndex descendant) const;

 private:
  int d_;
  int T_;
  std::vector<Node> nodes_;
  std::vector<NodeIndex> order_;              // BFS order, grouped by time
  std::vector<std::size_t> slice_begin_;      // size T+2
  std::vector<std::pair<std::size_t, std::size_t>> leaf_range_;
  std::unordered_map<NodeId, NodeIndex> by_id_;
};

/// Conditional distribution of the price increment at a non-leaf node.
struct ConditionalDist {
  NodeIndex node = 0;
  std::vector<Eigen::VectorXd> increments;
  std::vector<double> probs;

  std::size_t size() const { return increments.size(); }
  int dim() const { return increments.empty() ? 0 : static_cast<int>(increments.front().size()); }
  /// Increments stacked as rows.
  Eigen::MatrixXd matrix() const;
};

/// Increments of the children of `node`. Identical increment vectors are
/// merged (probabilities added) unless `merge` is false, in which case the
/// outcomes are returned one per child in child order.
ConditionalDist conditional_dist(const ScenarioTree& tree, NodeIndex node, bool merge = true);

double parse_probability(const std::string& text);

ScenarioTree load_tree(std::istream& in, const TreeLimits& limits = {});
ScenarioTree load_tree(const std::filesystem::path& path, const TreeLimits& limits = {});
ScenarioTree tree_from_json_text(const std::string& text, const TreeLimits& limits = {});
void save_tree(std::ostream& out, const ScenarioTree& tree);
std::string tree_to_json_text(const ScenarioTree& tree);

}  // namespace utilmax
