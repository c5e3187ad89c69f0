#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latis {

struct Edge {
  std::size_t i;
  std::size_t j;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected simple graph over nodes 0..n-1. Edge ids are list positions.
class GraphTopology {
public:
  struct Incidence {
    std::size_t neighbor;
    std::size_t edge;
  };

  GraphTopology() = default;

  GraphTopology(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)), adj_(n) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [i, j] = edges_[e];
      if (i >= n_ || j >= n_) throw std::invalid_argument("edge endpoint out of range");
      if (i == j) throw std::invalid_argument("self-loop at node " + std::to_string(i));
      if (!seen.emplace(std::min(i, j), std::max(i, j)).second)
        throw std::invalid_argument("duplicate edge " + std::to_string(i) + "-" + std::to_string(j));
      adj_[i].push_back({j, e});
      adj_[j].push_back({i, e});
    }
  }

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<Incidence>& neighbors(std::size_t i) const { return adj_.at(i); }
  std::size_t degree(std::size_t i) const { return adj_.at(i).size(); }

  /// Connected and |E| = |V| - 1.
  bool is_tree() const {
    if (n_ == 0) return true;
    if (edges_.size() + 1 != n_) return false;
    std::vector<bool> seen(n_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (const auto& inc : adj_[v])
        if (!seen[inc.neighbor]) {
          seen[inc.neighbor] = true;
          ++count;
          stack.push_back(inc.neighbor);
        }
    }
    return count == n_;
  }

private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adj_;
};

namespace topology {

inline GraphTopology pair() { return GraphTopology(2, {{0, 1}}); }

inline GraphTopology chain(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return GraphTopology(n, std::move(e));
}

inline GraphTopology cycle(std::size_t n) {
  if (n < 3) throw std::invalid_argument("cycle needs at least 3 nodes");
  auto e = chain(n).edges();
  e.push_back({n - 1, 0});
  return GraphTopology(n, std::move(e));
}

inline GraphTopology star(std::size_t spokes) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i <= spokes; ++i) e.push_back({0, i});
  return GraphTopology(spokes + 1, std::move(e));
}

/// Breadth-first tree where every interior node has `connectivity` neighbors
/// (the root has `connectivity` children, others `connectivity - 1`), cut at n nodes.
inline GraphTopology regular_tree(std::size_t connectivity, std::size_t n) {
  if (connectivity < 2) throw std::invalid_argument("tree connectivity must be at least 2");
  if (n == 0) throw std::invalid_argument("tree needs at least one node");
  std::vector<Edge> e;
  std::size_t next = 1;
  for (std::size_t parent = 0; next < n; ++parent) {
    const std::size_t children = parent == 0 ? connectivity : connectivity - 1;
    for (std::size_t c = 0; c < children && next < n; ++c) e.push_back({parent, next++});
  }
  return GraphTopology(n, std::move(e));
}

/// Road-link layout of the synthetic city: which variables are ring links.
struct CityLayout {
  GraphTopology topology;
  std::vector<std::size_t> ring_links;
};

/// Line graph of a city road network: a `side` x `side` grid of blocks
/// ((side+1)^2 intersections) with two-way streets, plus a ring road of four
/// two-way links joining the corners. Every directed link is a variable; two
/// variables depend on each other iff their links share an intersection.
///
/// side = 7 gives 224 street links plus 8 ring links.
inline CityLayout grid_city(std::size_t side = 7) {
  if (side < 1) throw std::invalid_argument("city grid needs at least one block");
  const std::size_t w = side + 1;
  auto node = [w](std::size_t x, std::size_t y) { return y * w + x; };
  std::vector<std::pair<std::size_t, std::size_t>> links;  // directed road links
  auto two_way = [&links](std::size_t a, std::size_t b) {
    links.emplace_back(a, b);
    links.emplace_back(b, a);
  };
  for (std::size_t y = 0; y < w; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (x + 1 < w) two_way(node(x, y), node(x + 1, y));
      if (y + 1 < w) two_way(node(x, y), node(x, y + 1));
    }
  const std::size_t first_ring = links.size();
  two_way(node(0, 0), node(0, side));
  two_way(node(0, 0), node(side, 0));
  two_way(node(side, 0), node(side, side));
  two_way(node(0, side), node(side, side));

  std::vector<std::vector<std::size_t>> at(w * w);
  for (std::size_t l = 0; l < links.size(); ++l) {
    at[links[l].first].push_back(l);
    at[links[l].second].push_back(l);
  }
  std::set<std::pair<std::size_t, std::size_t>> adjacent;
  for (const auto& incident : at)
    for (std::size_t a = 0; a < incident.size(); ++a)
      for (std::size_t b = a + 1; b < incident.size(); ++b)
        adjacent.emplace(std::min(incident[a], incident[b]), std::max(incident[a], incident[b]));

  std::vector<Edge> e;
  e.reserve(adjacent.size());
  for (const auto& [a, b] : adjacent) e.push_back({a, b});
  CityLayout city{GraphTopology(links.size(), std::move(e)), {}};
  for (std::size_t l = first_ring; l < links.size(); ++l) city.ring_links.push_back(l);
  return city;
}

}  // namespace topology
}  // namespace latis
