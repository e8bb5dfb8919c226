// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_TESTS_WORKED_EXAMPLE_HPP
#define BNPTVP_TESTS_WORKED_EXAMPLE_HPP

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bnptvp/bnptvp.hpp"

namespace bnptvp::testing {

// The worked 4-variable example: coefficient matrices at three consecutive
// times with nonzero values drawn from {0.2, 0.8, -0.4}.
struct Entry {
  int row;  // 1-based equation
  int col;  // 1-based lagged variable
  double value;
};

inline const std::vector<std::vector<Entry>>& worked_entries() {
  static const std::vector<std::vector<Entry>> e = {
      {{1, 4, 0.8}, {2, 3, 0.8}, {2, 4, 0.2}, {3, 1, 0.8}, {3, 2, 0.2}, {4, 2, -0.4}},
      {{1, 4, 0.8}, {2, 1, 0.2}, {2, 3, 0.8}, {2, 4, -0.4}, {3, 1, 0.2}, {3, 4, 0.8}, {4, 2, -0.4}},
      {{2, 1, 0.2}, {2, 3, 0.8}, {2, 4, -0.4}, {3, 1, 0.8}, {3, 4, 0.8}, {4, 1, 0.2}, {4, 2, 0.2}},
  };
  return e;
}

// e1..e9 as (row, col)
inline const std::map<std::string, std::pair<int, int>>& worked_edge_names() {
  static const std::map<std::string, std::pair<int, int>> m = {
      {"e1", {1, 4}}, {"e2", {2, 3}}, {"e3", {2, 4}}, {"e4", {3, 1}}, {"e5", {3, 2}},
      {"e6", {4, 2}}, {"e7", {2, 1}}, {"e8", {3, 4}}, {"e9", {4, 1}},
  };
  return m;
}

inline std::vector<std::set<std::string>> worked_expected_edges() {
  return {{"e1", "e2", "e3", "e4", "e5", "e6"},
          {"e1", "e2", "e3", "e4", "e6", "e7", "e8"},
          {"e2", "e3", "e4", "e6", "e7", "e8", "e9"}};
}

inline int worked_label(double value) {
  if (value == 0.2) return 1;
  if (value == 0.8) return 2;
  return 3;
}

/// Point-mass posterior: `copies` identical draws of the example.
inline PosteriorDraws worked_draws(int copies = 1) {
  PosteriorDraws pd;
  pd.spec = default_spec(4, 4, SpikeVariant::dirac);
  pd.info.names = {"v1", "v2", "v3", "v4"};
  DrawRecord d;
  d.beta = Matrix::Zero(16, 3);
  d.gamma = IntMatrix::Zero(16, 3);
  d.d_alloc = IntMatrix::Zero(16, 3);
  d.sigma = Matrix::Identity(4, 4);
  d.pi = Vector::Constant(3, 0.5);
  d.atoms = {Atom{0.2, 1.0}, Atom{0.8, 1.0}, Atom{-0.4, 1.0}};
  d.k_star = 3;
  const auto& entries = worked_entries();
  for (std::size_t s = 0; s < entries.size(); ++s)
    for (const auto& e : entries[s]) {
      const int j = (e.col - 1) * 4 + (e.row - 1);
      d.beta(j, static_cast<Eigen::Index>(s)) = e.value;
      d.gamma(j, static_cast<Eigen::Index>(s)) = 1;
      d.d_alloc(j, static_cast<Eigen::Index>(s)) = worked_label(e.value);
    }
  for (int c = 0; c < copies; ++c) {
    d.iteration = c + 1;
    pd.draws.push_back(d);
  }
  return pd;
}

/// Named edge set of a graph.
inline std::set<std::string> edge_names(const TemporalGraph& g) {
  std::set<std::string> out;
  for (const auto& e : g.edges) {
    std::string name = "?";
    for (const auto& [k, rc] : worked_edge_names())
      if (rc.first == e.target + 1 && rc.second == e.source + 1) name = k;
    out.insert(name);
  }
  return out;
}

}  // namespace bnptvp::testing

#endif  // BNPTVP_TESTS_WORKED_EXAMPLE_HPP
