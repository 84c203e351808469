#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ramified/errors.hpp"

namespace ramified {

/// Combinatorial tree on terminals {0..N-1} (all leaves) and Steiner nodes
/// {N..}, each of degree 3. Built by insertion: start from the edge 0-1, then
/// attach terminal k to edge e through a new Steiner node. The sequence of
/// chosen edge indices is the canonical encoding.
class Topology {
 public:
  using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

  /// Two-terminal topology (edge 0-1); terminals beyond 1 are attached later.
  explicit Topology(std::size_t terminal_count) : terminals_(terminal_count) {
    if (terminal_count < 2) throw DomainError("a topology needs at least two terminals");
    edges_.push_back({0, 1});
    inserted_ = 2;
  }

  static Topology from_encoding(std::size_t terminal_count, const std::vector<std::size_t>& encoding) {
    Topology t(terminal_count);
    for (auto e : encoding) t.insert_next(e);
    return t;
  }

  std::size_t terminal_count() const noexcept { return terminals_; }
  std::size_t inserted() const noexcept { return inserted_; }
  bool complete() const noexcept { return inserted_ == terminals_; }
  std::size_t steiner_count() const noexcept { return steiner_; }
  std::size_t node_count() const noexcept { return terminals_ + steiner_; }
  const EdgeList& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& encoding() const noexcept { return encoding_; }
  bool is_terminal(std::size_t v) const noexcept { return v < terminals_; }

  /// Attaches the next terminal to edge e through a new Steiner node.
  void insert_next(std::size_t e) {
    if (complete()) throw DomainError("all terminals already inserted");
    insert_terminal(inserted_, e);
    encoding_.push_back(e);
    ++inserted_;
  }

  /// Attaches terminal `term` (currently absent from the tree) to edge e.
  void insert_terminal(std::size_t term, std::size_t e) {
    if (e >= edges_.size()) throw DomainError("edge index out of range");
    const std::size_t s = terminals_ + steiner_++;
    const auto [u, v] = edges_[e];
    edges_[e] = {u, s};
    edges_.push_back({s, v});
    edges_.push_back({s, term});
  }

  /// Detaches terminal `term` and its Steiner node, joining the node's other
  /// two neighbours. The last Steiner node is renumbered into the freed slot.
  void remove_terminal(std::size_t term) {
    std::size_t leaf_edge = edges_.size();
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].first == term || edges_[e].second == term) leaf_edge = e;
    if (leaf_edge == edges_.size()) throw DomainError("terminal not present");
    const std::size_t s = edges_[leaf_edge].first == term ? edges_[leaf_edge].second : edges_[leaf_edge].first;
    if (is_terminal(s)) throw DomainError("cannot remove a terminal from a two-terminal tree");
    std::vector<std::size_t> others;
    EdgeList rest;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (e == leaf_edge) continue;
      const auto [a, b] = edges_[e];
      if (a == s)
        others.push_back(b);
      else if (b == s)
        others.push_back(a);
      else
        rest.push_back(edges_[e]);
    }
    rest.push_back({others.at(0), others.at(1)});
    const std::size_t last = terminals_ + steiner_ - 1;
    for (auto& [a, b] : rest) {
      if (a == last) a = s;
      if (b == last) b = s;
    }
    edges_ = std::move(rest);
    --steiner_;
    encoding_.clear();  // no longer an insertion sequence
  }

 private:
  std::size_t terminals_;
  std::size_t inserted_ = 0;
  std::size_t steiner_ = 0;
  EdgeList edges_;
  std::vector<std::size_t> encoding_;
};

}  // namespace ramified
