// Copyright 2026 The privdgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Interaction graphs, the public weight matrix W, per-round private mixing
// matrices B^k and the spectral constants eta = |W - 11'/m|, r = |W - I|.

#ifndef PRIVDGD_TOPOLOGY_HPP_
#define PRIVDGD_TOPOLOGY_HPP_

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "privdgd/common.hpp"
#include "privdgd/random.hpp"

namespace privdgd {

// Undirected simple graph on agents 0..m-1. Self-loops are implicit.
class Graph {
 public:
  Graph() = default;

  // Validates indices, duplicates and connectivity. Edges are 0-based.
  static Graph FromEdges(int m, std::vector<std::pair<int, int>> edges) {
    if (m < 1) throw TopologyError("graph needs at least one agent");
    std::set<std::pair<int, int>> seen;
    for (auto& [a, b] : edges) {
      if (a < 0 || b < 0 || a >= m || b >= m) {
        throw TopologyError("edge (" + std::to_string(a + 1) + "," +
                            std::to_string(b + 1) + ") out of range 1.." +
                            std::to_string(m));
      }
      if (a == b) {
        throw TopologyError("explicit self-loop at agent " +
                            std::to_string(a + 1));
      }
      if (a > b) std::swap(a, b);
      if (!seen.insert({a, b}).second) {
        throw TopologyError("duplicate edge (" + std::to_string(a + 1) + "," +
                            std::to_string(b + 1) + ")");
      }
    }
    Graph g;
    g.m_ = m;
    g.edges_.assign(seen.begin(), seen.end());
    g.nbrs_.assign(m, {});
    for (auto [a, b] : g.edges_) {
      g.nbrs_[a].push_back(b);
      g.nbrs_[b].push_back(a);
    }
    for (auto& n : g.nbrs_) std::sort(n.begin(), n.end());
    if (!g.Connected()) throw TopologyError("graph is disconnected");
    return g;
  }

  int m() const { return m_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  // Neighbors without i itself, ascending.
  const std::vector<int>& neighbors(int i) const { return nbrs_[i]; }
  int degree(int i) const { return static_cast<int>(nbrs_[i].size()); }

  // N_i including i, ascending.
  std::vector<int> closed_neighborhood(int i) const {
    std::vector<int> out = nbrs_[i];
    out.insert(std::lower_bound(out.begin(), out.end(), i), i);
    return out;
  }

  bool adjacent(int i, int j) const {
    return std::binary_search(nbrs_[i].begin(), nbrs_[i].end(), j);
  }

  // Directed non-self edge count.
  int directed_edges() const { return 2 * static_cast<int>(edges_.size()); }

  Graph Permuted(const std::vector<int>& perm) const {
    std::vector<std::pair<int, int>> e;
    for (auto [a, b] : edges_) e.push_back({perm[a], perm[b]});
    return FromEdges(m_, e);
  }

 private:
  bool Connected() const {
    std::vector<char> seen(m_, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : nbrs_[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == m_;
  }

  int m_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> nbrs_;
};

inline Graph PathGraph(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < m; ++i) e.push_back({i, i + 1});
  return Graph::FromEdges(m, e);
}

inline Graph RingGraph(int m) {
  if (m < 3) return PathGraph(m);
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < m; ++i) e.push_back({i, (i + 1) % m});
  return Graph::FromEdges(m, e);
}

inline Graph StarGraph(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < m; ++i) e.push_back({0, i});
  return Graph::FromEdges(m, e);
}

inline Graph CompleteGraph(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) e.push_back({i, j});
  return Graph::FromEdges(m, e);
}

// Stand-in five-agent network used by the bundled scenarios: a ring with two
// chords. Mirrors assets/topologies/chorded5.edges.
inline constexpr const char* kChorded5EdgeList =
    "1 2\n2 3\n3 4\n4 5\n5 1\n1 3\n2 4\n";

// "i j" per line, 1-based. '#' starts a comment. m defaults to the largest
// index seen.
inline Graph ParseEdgeList(const std::string& text, int m = 0) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<int, int>> e;
  int max_index = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
    std::istringstream ls(line);
    int a, b;
    if (!(ls >> a)) continue;
    std::string rest;
    if (!(ls >> b) || (ls >> rest)) {
      throw TopologyError("edge list line " + std::to_string(line_no) +
                          ": expected two indices");
    }
    if (a < 1 || b < 1) {
      throw TopologyError("edge list line " + std::to_string(line_no) +
                          ": indices are 1-based");
    }
    max_index = std::max({max_index, a, b});
    e.push_back({a - 1, b - 1});
  }
  if (m == 0) m = max_index;
  if (m == 0) throw TopologyError("empty edge list");
  return Graph::FromEdges(m, e);
}

inline Graph LoadEdgeList(const std::string& path, int m = 0) {
  std::ifstream f(path);
  if (!f) throw TopologyError("cannot open edge list " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ParseEdgeList(ss.str(), m);
}

inline Graph PresetGraph(const std::string& name, int m) {
  if (name == "path") return PathGraph(m);
  if (name == "ring") return RingGraph(m);
  if (name == "star") return StarGraph(m);
  if (name == "complete") return CompleteGraph(m);
  if (name == "chorded5") {
    if (m != 5) throw TopologyError("preset chorded5 has exactly 5 agents");
    return ParseEdgeList(kChorded5EdgeList, 5);
  }
  throw TopologyError("unknown topology preset '" + name + "'");
}

inline Mat MetropolisWeights(const Graph& g) {
  const int m = g.m();
  Mat w = Mat::Zero(m, m);
  for (auto [a, b] : g.edges()) {
    double v = 1.0 / (1.0 + std::max(g.degree(a), g.degree(b)));
    w(a, b) = v;
    w(b, a) = v;
  }
  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j : g.neighbors(i)) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return w;
}

inline constexpr double kStochasticTol = 1e-12;

// Checks every weight-matrix invariant except eta < 1 (see SpectralOf).
inline void ValidateWeightMatrix(const Mat& w, const Graph& g) {
  const int m = g.m();
  if (w.rows() != m || w.cols() != m) {
    throw TopologyError("weight matrix must be " + std::to_string(m) + "x" +
                        std::to_string(m));
  }
  if (!w.allFinite()) throw TopologyError("weight matrix has non-finite entry");
  for (int i = 0; i < m; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > kStochasticTol)
      throw AssumptionError("row " + std::to_string(i + 1) + " does not sum to 1");
    if (std::abs(w.col(i).sum() - 1.0) > kStochasticTol)
      throw AssumptionError("column " + std::to_string(i + 1) +
                            " does not sum to 1");
    for (int j = 0; j < m; ++j) {
      if (w(i, j) < 0.0) throw AssumptionError("negative weight");
      const bool want = (i == j) || g.adjacent(i, j);
      if (want != (w(i, j) > 0.0)) {
        throw TopologyError("weight support differs from graph at (" +
                            std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ")");
      }
    }
  }
}

// Graph induced by the off-diagonal support (nonzero entries) of a custom W.
inline Graph GraphFromSupport(const Mat& w) {
  const int m = static_cast<int>(w.rows());
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const bool a = w(i, j) != 0.0, b = w(j, i) != 0.0;
      if (a != b) throw TopologyError("weight support must be symmetric");
      if (a) e.push_back({i, j});
    }
  }
  return Graph::FromEdges(m, e);
}

inline Mat ParseMatrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw InputError("matrix text: unparsable entry");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("matrix text: empty");
  Mat out(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw InputError("matrix text: ragged rows");
    for (size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

struct SpectralData {
  double eta = 0.0;
  double r = 0.0;
};

inline double SpectralNorm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-15) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

inline SpectralData SpectralOf(const Mat& w) {
  const int m = static_cast<int>(w.rows());
  SpectralData s;
  s.eta = SpectralNorm(w - Mat::Constant(m, m, 1.0 / m));
  s.r = SpectralNorm(w - Mat::Identity(m, m));
  if (s.eta >= 1.0 - 1e-12) {
    throw AssumptionError("eta = " + std::to_string(s.eta) +
                          " is not below 1; W does not mix");
  }
  return s;
}

// Graph + W + cached spectral data; the public part of a network.
struct Topology {
  Graph graph;
  Mat w;
  SpectralData spectral;

  static Topology Metropolis(const Graph& g) {
    Mat w = MetropolisWeights(g);
    return {g, w, SpectralOf(w)};
  }

  static Topology Custom(const Mat& w) {
    Graph g = GraphFromSupport(w);
    ValidateWeightMatrix(w, g);
    return {g, w, SpectralOf(w)};
  }
};

enum class MixingMode { kFlat, kIdentity };

// One private key per agent; column j of B^k is drawn from agent j's key only.
inline std::vector<uint64_t> AgentKeys(uint64_t seed, std::string_view purpose,
                                       int m) {
  std::vector<uint64_t> keys(m);
  for (int j = 0; j < m; ++j) keys[j] = DeriveSeed(seed, purpose, j);
  return keys;
}

// Flat simplex point over the closed neighborhood: exponential draws floored
// at 1e-9, normalized.
inline void FillSimplex(const std::vector<int>& support, uint64_t key,
                        uint64_t round, std::vector<double>* out) {
  Stream s(DeriveSeed(key, "simplex", round));
  out->resize(support.size());
  double total = 0.0;
  for (double& v : *out) {
    v = std::max(s.Exponential(), 1e-9);
    total += v;
  }
  for (double& v : *out) v /= total;
}

inline Mat SampleMixingMatrix(const Graph& g, const std::vector<uint64_t>& keys,
                              uint64_t round,
                              MixingMode mode = MixingMode::kFlat) {
  const int m = g.m();
  if (mode == MixingMode::kIdentity) return Mat::Identity(m, m);
  Mat b = Mat::Zero(m, m);
  std::vector<double> col;
  for (int j = 0; j < m; ++j) {
    const std::vector<int> support = g.closed_neighborhood(j);
    FillSimplex(support, keys[j], round, &col);
    for (size_t t = 0; t < support.size(); ++t) b(support[t], j) = col[t];
  }
  return b;
}

// Row i drawn from agent i's key: row-stochastic with graph support.
inline Mat SampleRowStochastic(const Graph& g,
                               const std::vector<uint64_t>& keys,
                               uint64_t round) {
  const int m = g.m();
  Mat r = Mat::Zero(m, m);
  std::vector<double> row;
  for (int i = 0; i < m; ++i) {
    const std::vector<int> support = g.closed_neighborhood(i);
    FillSimplex(support, keys[i], round, &row);
    for (size_t t = 0; t < support.size(); ++t) r(i, support[t]) = row[t];
  }
  return r;
}

}  // namespace privdgd

#endif  // PRIVDGD_TOPOLOGY_HPP_
