// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_GRAPHS_HPP
#define BNPTVP_GRAPHS_HPP

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bnptvp/error.hpp"
#include "bnptvp/model.hpp"

namespace bnptvp {

struct Edge {
  int source = 0;  // lagged variable j
  int target = 0;  // equation i
  double inclusion = 0.0;
  int cluster = 0;  // 1-based intensity level, 0 when undetermined
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct TemporalGraph {
  int t = 0;  // 1-based time of the coefficient matrix
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  Matrix inclusion;     // inclusion(i, j) for the edge j -> i
  IntMatrix cluster;    // canonical label per (i, j), 0 if never in the slab
  std::vector<double> intensity;  // intensity[k - 1] for label k
};

/// inclusion[s](i, j): share of draws with gamma = 1 for B_{t}(i, j), t = s + 2.
inline std::vector<Matrix> inclusion_probabilities(const PosteriorDraws& draws) {
  if (draws.empty()) throw InvalidParameters("inclusion probabilities need at least one draw");
  const int n = draws.spec.n;
  const Eigen::Index S = draws.draws.front().gamma.cols();
  std::vector<Matrix> out(static_cast<std::size_t>(S), Matrix::Zero(n, n));
  for (const auto& d : draws.draws)
    for (Eigen::Index s = 0; s < S; ++s)
      for (int j = 0; j < n * n; ++j)
        out[static_cast<std::size_t>(s)](j % n, j / n) += d.gamma(j, s);
  for (auto& m : out) m /= static_cast<double>(draws.size());
  return out;
}

struct GraphMode {
  bool weighted = false;
  double threshold = 0.5;
};

inline std::vector<TemporalGraph> extract_graphs(const PosteriorDraws& draws, GraphMode mode = {}) {
  if (!mode.weighted && !(mode.threshold > 0.0 && mode.threshold <= 1.0))
    throw InvalidParameters("graph threshold must lie in (0, 1]");
  const auto incl = inclusion_probabilities(draws);
  const int n = draws.spec.n;
  const auto S = static_cast<Eigen::Index>(incl.size());

  // Posterior mode of the slab label per coefficient; ties go to the smaller label.
  std::vector<IntMatrix> raw(static_cast<std::size_t>(S), IntMatrix::Zero(n, n));
  for (Eigen::Index s = 0; s < S; ++s)
    for (int j = 0; j < n * n; ++j) {
      std::map<int, int> tally;
      for (const auto& d : draws.draws)
        if (d.d_alloc(j, s) > 0) ++tally[d.d_alloc(j, s)];
      int best = 0;
      int best_count = 0;
      for (const auto& [label, count] : tally)
        if (count > best_count) {
          best = label;
          best_count = count;
        }
      raw[static_cast<std::size_t>(s)](j % n, j / n) = best;
    }

  // Mean atom location over the draws that use the label.
  std::map<int, std::pair<double, int>> mu_acc;
  for (const auto& d : draws.draws) {
    std::vector<bool> used(d.atoms.size() + 1, false);
    for (Eigen::Index k = 0; k < d.d_alloc.size(); ++k) {
      const int label = d.d_alloc.data()[k];
      if (label > 0 && static_cast<std::size_t>(label) <= d.atoms.size()) used[static_cast<std::size_t>(label)] = true;
    }
    for (std::size_t label = 1; label < used.size(); ++label)
      if (used[label]) {
        auto& acc = mu_acc[static_cast<int>(label)];
        acc.first += d.atoms[label - 1].mu;
        ++acc.second;
      }
  }

  std::vector<TemporalGraph> graphs(static_cast<std::size_t>(S));
  for (Eigen::Index s = 0; s < S; ++s) {
    TemporalGraph& g = graphs[static_cast<std::size_t>(s)];
    g.t = static_cast<int>(s) + 2;
    g.nodes = draws.info.names;
    if (g.nodes.size() != static_cast<std::size_t>(n)) {
      g.nodes.clear();
      for (int i = 0; i < n; ++i) g.nodes.push_back("y" + std::to_string(i + 1));
    }
    g.inclusion = incl[static_cast<std::size_t>(s)];
  }

  // Canonical labels by first appearance over edges in (t, row, column) order.
  std::map<int, int> canonical;
  std::vector<double> intensity;
  for (Eigen::Index s = 0; s < S; ++s) {
    TemporalGraph& g = graphs[static_cast<std::size_t>(s)];
    g.cluster = IntMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double p = g.inclusion(i, j);
        const bool present = mode.weighted ? p > 0.0 : p >= mode.threshold;
        if (!present) continue;
        const int label = raw[static_cast<std::size_t>(s)](i, j);
        int c = 0;
        if (label > 0) {
          auto it = canonical.find(label);
          if (it == canonical.end()) {
            it = canonical.emplace(label, static_cast<int>(canonical.size()) + 1).first;
            const auto acc = mu_acc[label];
            intensity.push_back(acc.second > 0 ? acc.first / acc.second : 0.0);
          }
          c = it->second;
        }
        g.cluster(i, j) = c;
        g.edges.push_back({j, i, p, c});
      }
  }
  for (auto& g : graphs) g.intensity = intensity;
  return graphs;
}

enum class GraphFormat { dot, graphml, json };

inline GraphFormat parse_graph_format(const std::string& s) {
  if (s == "dot") return GraphFormat::dot;
  if (s == "graphml") return GraphFormat::graphml;
  if (s == "json" || s == "edge-list-json") return GraphFormat::json;
  throw InvalidParameters("unknown graph format '" + s + "' (expected dot, graphml or json)");
}

inline std::string graph_file_extension(GraphFormat f) {
  switch (f) {
    case GraphFormat::dot:
      return "dot";
    case GraphFormat::graphml:
      return "graphml";
    case GraphFormat::json:
      return "jsonl";
  }
  return "txt";
}

namespace detail {

inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* cluster_color(int label) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  if (label <= 0) return "#000000";
  return palette[(label - 1) % 10];
}

}  // namespace detail

inline std::string export_graph(const TemporalGraph& g, GraphFormat format) {
  std::ostringstream os;
  auto intensity_of = [&](int c) {
    return c > 0 && static_cast<std::size_t>(c) <= g.intensity.size() ? g.intensity[static_cast<std::size_t>(c - 1)] : 0.0;
  };
  switch (format) {
    case GraphFormat::dot:
      os << "digraph G_t" << g.t << " {\n";
      for (std::size_t i = 0; i < g.nodes.size(); ++i)
        os << "  n" << i << " [label=\"" << g.nodes[i] << "\"];\n";
      for (const auto& e : g.edges)
        os << "  n" << e.source << " -> n" << e.target << " [color=\"" << detail::cluster_color(e.cluster)
           << "\", cluster=" << e.cluster << ", inclusion=" << detail::fmt_double(e.inclusion)
           << ", intensity=" << detail::fmt_double(intensity_of(e.cluster)) << "];\n";
      os << "}\n";
      break;
    case GraphFormat::graphml:
      os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
         << "  <key id=\"inclusion\" for=\"edge\" attr.name=\"inclusion\" attr.type=\"double\"/>\n"
         << "  <key id=\"cluster\" for=\"edge\" attr.name=\"cluster\" attr.type=\"int\"/>\n"
         << "  <key id=\"intensity\" for=\"edge\" attr.name=\"intensity\" attr.type=\"double\"/>\n"
         << "  <graph id=\"t" << g.t << "\" edgedefault=\"directed\">\n";
      for (std::size_t i = 0; i < g.nodes.size(); ++i)
        os << "    <node id=\"n" << i << "\"><!-- " << detail::xml_escape(g.nodes[i]) << " --></node>\n";
      for (const auto& e : g.edges)
        os << "    <edge source=\"n" << e.source << "\" target=\"n" << e.target << "\">"
           << "<data key=\"inclusion\">" << detail::fmt_double(e.inclusion) << "</data>"
           << "<data key=\"cluster\">" << e.cluster << "</data>"
           << "<data key=\"intensity\">" << detail::fmt_double(intensity_of(e.cluster)) << "</data></edge>\n";
      os << "  </graph>\n</graphml>\n";
      break;
    case GraphFormat::json: {
      nlohmann::ordered_json head;
      head["t"] = g.t;
      head["nodes"] = g.nodes;
      head["intensity"] = g.intensity;
      os << head.dump() << "\n";
      for (const auto& e : g.edges) {
        nlohmann::ordered_json line;
        line["t"] = g.t;
        line["source"] = e.source;
        line["target"] = e.target;
        line["inclusion"] = e.inclusion;
        line["cluster"] = e.cluster;
        line["intensity"] = intensity_of(e.cluster);
        os << line.dump() << "\n";
      }
      break;
    }
  }
  return os.str();
}

/// Inverse of the edge-list JSON export. Non-edge inclusion entries are 0.
inline TemporalGraph import_graph_json(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  TemporalGraph g;
  bool have_head = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("graph json: ") + e.what(), line_no, 0);
    }
    if (!have_head) {
      g.t = j.at("t").get<int>();
      g.nodes = j.at("nodes").get<std::vector<std::string>>();
      g.intensity = j.at("intensity").get<std::vector<double>>();
      const auto n = static_cast<Eigen::Index>(g.nodes.size());
      g.inclusion = Matrix::Zero(n, n);
      g.cluster = IntMatrix::Zero(n, n);
      have_head = true;
      continue;
    }
    Edge e{j.at("source").get<int>(), j.at("target").get<int>(), j.at("inclusion").get<double>(),
           j.at("cluster").get<int>()};
    if (e.source < 0 || e.target < 0 || e.source >= g.inclusion.cols() || e.target >= g.inclusion.rows())
      throw ParseError("graph json: edge endpoint out of range", line_no, 0);
    g.inclusion(e.target, e.source) = e.inclusion;
    g.cluster(e.target, e.source) = e.cluster;
    g.edges.push_back(e);
  }
  if (!have_head) throw ParseError("graph json: missing header line", 1, 0);
  return g;
}

}  // namespace bnptvp

#endif  // BNPTVP_GRAPHS_HPP
