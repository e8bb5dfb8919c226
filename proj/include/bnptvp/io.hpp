// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_IO_HPP
#define BNPTVP_IO_HPP

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bnptvp/error.hpp"
#include "bnptvp/model.hpp"
#include "bnptvp/var_core.hpp"

namespace bnptvp {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Panel CSV

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Header row of series names, then one row per time point. Row numbers in
/// errors count the header as row 1.
inline Panel parse_panel(std::istream& in, bool demean, bool standardize) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++row;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw ParseError("panel: missing header row", row == 0 ? 1 : row, 0);
  names = detail::split_csv_line(line);
  const std::size_t n = names.size();
  for (std::size_t c = 0; c < n; ++c)
    if (names[c].empty()) throw ParseError("panel: empty series name", row, c + 1);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != n)
      throw ParseError("panel: expected " + std::to_string(n) + " cells, found " + std::to_string(cells.size()),
                       row, std::min(cells.size(), n) + 1);
    std::vector<double> values(n);
    for (std::size_t c = 0; c < n; ++c) {
      if (cells[c].empty()) throw ParseError("panel: missing value", row, c + 1);
      const auto v = detail::parse_double(cells[c]);
      if (!v) throw ParseError("panel: non-numeric cell '" + cells[c] + "'", row, c + 1);
      values[c] = *v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.size() < 2) throw ParseError("panel: need at least two observations", row, 0);

  Panel p;
  p.names = names;
  p.y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < n; ++c) p.y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c];
  p.means.assign(n, 0.0);
  p.scales.assign(n, 1.0);
  const double T = static_cast<double>(rows.size());
  for (Eigen::Index c = 0; c < p.y.cols(); ++c) {
    const double mean = p.y.col(c).mean();
    if (demean || standardize) {
      p.y.col(c).array() -= mean;
      p.means[static_cast<std::size_t>(c)] = mean;
    }
    if (standardize) {
      const double sd = std::sqrt(p.y.col(c).squaredNorm() / (T - 1.0));
      if (sd > 0.0) {
        p.y.col(c) /= sd;
        p.scales[static_cast<std::size_t>(c)] = sd;
      }
    }
  }
  return p;
}

inline Panel read_panel(const fs::path& path, bool demean, bool standardize) {
  std::ifstream in(path);
  if (!in) throw ParseError("panel: cannot open '" + path.string() + "'", 0, 0);
  return parse_panel(in, demean, standardize);
}

inline void write_panel(const Panel& p, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  for (Eigen::Index c = 0; c < p.y.cols(); ++c) {
    if (c) out << ',';
    out << (static_cast<std::size_t>(c) < p.names.size() ? p.names[static_cast<std::size_t>(c)]
                                                         : "y" + std::to_string(c + 1));
  }
  out << '\n';
  char buf[32];
  for (Eigen::Index t = 0; t < p.y.rows(); ++t) {
    for (Eigen::Index c = 0; c < p.y.cols(); ++c) {
      if (c) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", p.y(t, c));
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binary draw storage

inline constexpr int kDrawFormatVersion = 1;

namespace detail {

inline void write_f64(const fs::path& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  std::vector<unsigned char> bytes(data.size() * 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

inline std::vector<double> read_f64(const fs::path& path, std::size_t expected) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw FormatError("missing array file '" + path.string() + "'");
  if (size != expected * 8)
    throw FormatError("array '" + path.filename().string() + "' holds " + std::to_string(size) +
                      " bytes, manifest implies " + std::to_string(expected * 8));
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError("cannot read '" + path.string() + "'");
  std::vector<double> data(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    data[i] = std::bit_cast<double>(bits);
  }
  return data;
}

inline nlohmann::ordered_json spec_to_json(const ModelSpec& spec) {
  nlohmann::ordered_json j;
  j["n"] = spec.n;
  j["T"] = spec.T;
  j["variant"] = to_string(spec.variant);
  const Hyper& h = spec.hyper;
  nlohmann::ordered_json hj;
  hj["c"] = h.c;
  hj["d"] = h.d;
  hj["a1"] = h.a1;
  hj["b1"] = h.b1;
  hj["a0"] = h.a0;
  hj["b0"] = h.b0;
  hj["alpha"] = h.alpha;
  hj["eta"] = h.eta;
  hj["m"] = h.m;
  hj["nu"] = h.nu;
  std::vector<std::vector<double>> psi;
  for (Eigen::Index i = 0; i < h.psi.rows(); ++i) {
    std::vector<double> row;
    for (Eigen::Index k = 0; k < h.psi.cols(); ++k) row.push_back(h.psi(i, k));
    psi.push_back(row);
  }
  hj["psi"] = psi;
  j["hyper"] = hj;
  return j;
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.n = j.at("n").get<int>();
  spec.T = j.at("T").get<int>();
  spec.variant = parse_variant(j.at("variant").get<std::string>());
  const auto& hj = j.at("hyper");
  Hyper& h = spec.hyper;
  h.c = hj.at("c").get<double>();
  h.d = hj.at("d").get<double>();
  h.a1 = hj.at("a1").get<double>();
  h.b1 = hj.at("b1").get<double>();
  h.a0 = hj.at("a0").get<double>();
  h.b0 = hj.at("b0").get<double>();
  h.alpha = hj.at("alpha").get<double>();
  h.eta = hj.at("eta").get<double>();
  h.m = hj.at("m").get<int>();
  h.nu = hj.at("nu").get<double>();
  const auto psi = hj.at("psi").get<std::vector<std::vector<double>>>();
  h.psi.resize(static_cast<Eigen::Index>(psi.size()), static_cast<Eigen::Index>(psi.size()));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi[i].size() != psi.size()) throw FormatError("manifest: psi is not square");
    for (std::size_t k = 0; k < psi.size(); ++k)
      h.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = psi[i][k];
  }
  return spec;
}

}  // namespace detail

/// manifest.json plus one little-endian float64 file per array, row-major.
inline void write_draws(const PosteriorDraws& pd, const fs::path& dir) {
  fs::create_directories(dir);
  const int n = pd.spec.n;
  const int nn = n * n;
  const int S = pd.spec.slices();
  const std::size_t count = pd.draws.size();

  std::vector<double> iteration, beta, sigma, pi, gamma, d_alloc, tau0, k_star, atom_count, atom_mu, atom_tau;
  for (const auto& d : pd.draws) {
    if (d.beta.rows() != nn || d.beta.cols() != S || d.gamma.rows() != nn || d.gamma.cols() != S ||
        d.d_alloc.rows() != nn || d.d_alloc.cols() != S || d.sigma.rows() != n || d.sigma.cols() != n ||
        d.pi.size() != S)
      throw FormatError("draw record dimensions disagree with the model specification");
    iteration.push_back(static_cast<double>(d.iteration));
    for (int s = 0; s < S; ++s)
      for (int j = 0; j < nn; ++j) {
        beta.push_back(d.beta(j, s));
        gamma.push_back(d.gamma(j, s));
        d_alloc.push_back(d.d_alloc(j, s));
      }
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) sigma.push_back(d.sigma(i, k));
    for (int s = 0; s < S; ++s) pi.push_back(d.pi[s]);
    tau0.push_back(d.tau0);
    k_star.push_back(d.k_star);
    atom_count.push_back(static_cast<double>(d.atoms.size()));
    for (const auto& a : d.atoms) {
      atom_mu.push_back(a.mu);
      atom_tau.push_back(a.tau);
    }
  }

  nlohmann::ordered_json m;
  m["format"] = "bnptvp-draws";
  m["version"] = kDrawFormatVersion;
  m["spec"] = detail::spec_to_json(pd.spec);
  nlohmann::ordered_json run;
  run["seed"] = pd.info.seed;
  run["iters"] = pd.info.iters;
  run["burn_in"] = pd.info.burn_in;
  run["thin"] = pd.info.thin;
  run["input"] = pd.info.input;
  run["names"] = pd.info.names;
  run["means"] = pd.info.means;
  run["scales"] = pd.info.scales;
  m["run"] = run;
  m["draws"] = count;

  nlohmann::ordered_json arrays;
  auto put = [&](const std::string& name, const std::vector<double>& data, std::vector<std::size_t> shape) {
    const std::string file = name + ".f64";
    detail::write_f64(dir / file, data);
    arrays[name] = {{"file", file}, {"shape", shape}};
  };
  const auto un = static_cast<std::size_t>(n);
  const auto us = static_cast<std::size_t>(S);
  const auto unn = static_cast<std::size_t>(nn);
  put("iteration", iteration, {count});
  put("beta", beta, {count, us, unn});
  put("sigma", sigma, {count, un, un});
  put("pi", pi, {count, us});
  put("gamma", gamma, {count, us, unn});
  put("d_alloc", d_alloc, {count, us, unn});
  put("tau0", tau0, {count});
  put("k_star", k_star, {count});
  put("atom_count", atom_count, {count});
  put("atom_mu", atom_mu, {atom_mu.size()});
  put("atom_tau", atom_tau, {atom_tau.size()});
  m["arrays"] = arrays;

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest in '" + dir.string() + "'");
  out << m.dump(2) << "\n";
}

inline PosteriorDraws read_draws(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("no manifest.json in '" + dir.string() + "'");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }

  try {
    if (m.value("format", std::string()) != "bnptvp-draws") throw FormatError("manifest: unknown format tag");
    if (m.at("version").get<int>() != kDrawFormatVersion)
      throw FormatError("manifest: unsupported version " + std::to_string(m.at("version").get<int>()));

    PosteriorDraws pd;
    pd.spec = detail::spec_from_json(m.at("spec"));
    const auto& run = m.at("run");
    pd.info.seed = run.at("seed").get<std::uint64_t>();
    pd.info.iters = run.at("iters").get<std::int64_t>();
    pd.info.burn_in = run.at("burn_in").get<std::int64_t>();
    pd.info.thin = run.at("thin").get<std::int64_t>();
    pd.info.input = run.at("input").get<std::string>();
    pd.info.names = run.at("names").get<std::vector<std::string>>();
    pd.info.means = run.at("means").get<std::vector<double>>();
    pd.info.scales = run.at("scales").get<std::vector<double>>();

    const auto count = m.at("draws").get<std::size_t>();
    const int n = pd.spec.n;
    const int nn = n * n;
    const int S = pd.spec.slices();
    const auto& arrays = m.at("arrays");

    auto load = [&](const std::string& name, std::vector<std::size_t> shape) {
      const auto& a = arrays.at(name);
      const auto declared = a.at("shape").get<std::vector<std::size_t>>();
      if (declared != shape) throw FormatError("manifest: array '" + name + "' has an unexpected shape");
      std::size_t total = 1;
      for (auto d : shape) total *= d;
      return detail::read_f64(dir / a.at("file").get<std::string>(), total);
    };
    const auto un = static_cast<std::size_t>(n);
    const auto us = static_cast<std::size_t>(S);
    const auto unn = static_cast<std::size_t>(nn);
    const auto iteration = load("iteration", {count});
    const auto beta = load("beta", {count, us, unn});
    const auto sigma = load("sigma", {count, un, un});
    const auto pi = load("pi", {count, us});
    const auto gamma = load("gamma", {count, us, unn});
    const auto d_alloc = load("d_alloc", {count, us, unn});
    const auto tau0 = load("tau0", {count});
    const auto k_star = load("k_star", {count});
    const auto atom_count = load("atom_count", {count});
    std::size_t total_atoms = 0;
    for (double c : atom_count) {
      if (!(c >= 0.0) || c != std::floor(c)) throw FormatError("manifest: invalid atom count");
      total_atoms += static_cast<std::size_t>(c);
    }
    const auto atom_mu = load("atom_mu", {total_atoms});
    const auto atom_tau = load("atom_tau", {total_atoms});

    std::size_t atom_pos = 0;
    pd.draws.resize(count);
    for (std::size_t c = 0; c < count; ++c) {
      DrawRecord& d = pd.draws[c];
      d.iteration = static_cast<std::int64_t>(iteration[c]);
      d.beta.resize(nn, S);
      d.gamma.resize(nn, S);
      d.d_alloc.resize(nn, S);
      for (int s = 0; s < S; ++s)
        for (int j = 0; j < nn; ++j) {
          const std::size_t at = (c * us + static_cast<std::size_t>(s)) * unn + static_cast<std::size_t>(j);
          d.beta(j, s) = beta[at];
          d.gamma(j, s) = static_cast<int>(gamma[at]);
          d.d_alloc(j, s) = static_cast<int>(d_alloc[at]);
        }
      d.sigma.resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) d.sigma(i, k) = sigma[(c * un + static_cast<std::size_t>(i)) * un + static_cast<std::size_t>(k)];
      d.pi.resize(S);
      for (int s = 0; s < S; ++s) d.pi[s] = pi[c * us + static_cast<std::size_t>(s)];
      d.tau0 = tau0[c];
      d.k_star = static_cast<int>(k_star[c]);
      const auto na = static_cast<std::size_t>(atom_count[c]);
      d.atoms.resize(na);
      for (std::size_t a = 0; a < na; ++a) d.atoms[a] = {atom_mu[atom_pos + a], atom_tau[atom_pos + a]};
      atom_pos += na;
    }
    return pd;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run configuration: flat key=value text, later assignments win.

struct RunConfig {
  std::string variant = "dirac";
  std::int64_t iters = 20000;
  std::int64_t burn_in = 5000;
  std::int64_t thin = 1;
  std::uint64_t seed = 1;
  int chains = 1;
  std::string input;
  std::string out;
  bool demean = true;
  bool standardize = false;
  std::int64_t progress_every = 0;
  std::map<std::string, double> hyper;  // overrides of the prior defaults

  static const std::vector<std::string>& hyper_keys() {
    static const std::vector<std::string> keys = {"c", "d", "a1", "b1", "a0", "b0", "alpha", "eta", "m", "nu", "psi"};
    return keys;
  }

  void set(const std::string& key, const std::string& value) {
    auto as_int = [&]() -> std::int64_t {
      std::int64_t v = 0;
      const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size())
        throw InvalidParameters("config: " + key + " must be an integer, got '" + value + "'");
      return v;
    };
    auto as_bool = [&]() {
      if (value == "true" || value == "1" || value == "yes") return true;
      if (value == "false" || value == "0" || value == "no") return false;
      throw InvalidParameters("config: " + key + " must be true or false, got '" + value + "'");
    };
    if (key == "variant") {
      parse_variant(value);
      variant = value;
    } else if (key == "iters") {
      iters = as_int();
    } else if (key == "burn_in") {
      burn_in = as_int();
    } else if (key == "thin") {
      thin = as_int();
    } else if (key == "seed") {
      const auto v = as_int();
      if (v < 0) throw InvalidParameters("config: seed must be nonnegative");
      seed = static_cast<std::uint64_t>(v);
    } else if (key == "chains") {
      chains = static_cast<int>(as_int());
    } else if (key == "input") {
      input = value;
    } else if (key == "out") {
      out = value;
    } else if (key == "demean") {
      demean = as_bool();
    } else if (key == "standardize") {
      standardize = as_bool();
    } else if (key == "progress_every") {
      progress_every = as_int();
    } else if (std::find(hyper_keys().begin(), hyper_keys().end(), key) != hyper_keys().end()) {
      const auto v = detail::parse_double(value);
      if (!v) throw InvalidParameters("config: " + key + " must be a number, got '" + value + "'");
      hyper[key] = *v;
    } else {
      throw InvalidParameters("config: unknown key '" + key + "'");
    }
  }

  void validate() const {
    if (iters <= burn_in) throw InvalidParameters("config: iters must exceed burn_in");
    if (burn_in < 0) throw InvalidParameters("config: burn_in must be nonnegative");
    if (thin < 1) throw InvalidParameters("config: thin must be at least 1");
    if (chains < 1) throw InvalidParameters("config: chains must be at least 1");
    if (input.empty()) throw InvalidParameters("config: input path is empty");
    if (out.empty()) throw InvalidParameters("config: out path is empty");
    if (progress_every < 0) throw InvalidParameters("config: progress_every must be nonnegative");
    if (auto it = hyper.find("m"); it != hyper.end() && (it->second < 0.0 || it->second != std::floor(it->second)))
      throw InvalidParameters("config: m must be a nonnegative integer");
  }

  ModelSpec to_spec(int n, int T) const {
    ModelSpec spec = default_spec(n, T, parse_variant(variant));
    Hyper& h = spec.hyper;
    for (const auto& [k, v] : hyper) {
      if (k == "c") h.c = v;
      else if (k == "d") h.d = v;
      else if (k == "a1") h.a1 = v;
      else if (k == "b1") h.b1 = v;
      else if (k == "a0") h.a0 = v;
      else if (k == "b0") h.b0 = v;
      else if (k == "alpha") h.alpha = v;
      else if (k == "eta") h.eta = v;
      else if (k == "m") h.m = static_cast<int>(v);
      else if (k == "nu") h.nu = v;
      else if (k == "psi") h.psi = Matrix::Identity(n, n) * v;
    }
    spec.validate();
    return spec;
  }

  /// Every setting as key=value, space separated.
  std::string effective_line() const {
    std::ostringstream os;
    os << "variant=" << variant << " iters=" << iters << " burn_in=" << burn_in << " thin=" << thin
       << " seed=" << seed << " chains=" << chains << " input=" << input << " out=" << out
       << " demean=" << (demean ? "true" : "false") << " standardize=" << (standardize ? "true" : "false");
    for (const auto& [k, v] : hyper) os << " " << k << "=" << v;
    return os.str();
  }
};

/// Applies key=value lines; '#' starts a comment.
inline void parse_config(std::istream& in, RunConfig& cfg) {
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key=value", row, 1);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const InvalidParameters& e) {
      throw ParseError(e.what(), row, eq + 2);
    }
  }
}

inline void load_config(const fs::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path.string() + "'", 0, 0);
  parse_config(in, cfg);
}

}  // namespace bnptvp

#endif  // BNPTVP_IO_HPP
