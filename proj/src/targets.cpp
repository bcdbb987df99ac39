#include "lsf/targets.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lsf {

namespace {

// Portable uniform double in [0, 1) from the raw 64-bit engine output.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_ion(int n_ions, int i) {
  if (i < 0 || i >= n_ions) throw ConfigError("target: ion index " + std::to_string(i) + " out of range");
}

std::vector<int> grid_mapping(int n_ions, int sites, const std::vector<int>& mapping) {
  if (sites > n_ions) throw ConfigError("target: grid has more sites than ions");
  if (mapping.empty()) {
    std::vector<int> id(static_cast<std::size_t>(sites));
    for (int s = 0; s < sites; ++s) id[static_cast<std::size_t>(s)] = s;
    return id;
  }
  if (static_cast<int>(mapping.size()) != sites) throw ConfigError("target: mapping must list one ion per site");
  std::vector<bool> seen(static_cast<std::size_t>(n_ions), false);
  for (int ion : mapping) {
    check_ion(n_ions, ion);
    if (seen[static_cast<std::size_t>(ion)]) throw ConfigError("target: mapping repeats an ion");
    seen[static_cast<std::size_t>(ion)] = true;
  }
  return mapping;
}

void set_pair(Mat& phases, int n, int m, double phi) {
  phases(n, m) = phi;
  phases(m, n) = phi;
}

int parse_int(const std::string& s, const std::string& spec) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) throw ConfigError("target spec '" + spec + "': bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& spec) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) throw ConfigError("target spec '" + spec + "': bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void TargetMatrix::finalize() {
  const Eigen::Index n = phases.rows();
  if (phases.cols() != n) throw ConfigError("target: phase matrix must be square");
  if (!phases.allFinite()) throw ConfigError("target: non-finite phase");
  if ((phases - phases.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ConfigError("target: phases must be symmetric");
  if (n > 0 && phases.diagonal().cwiseAbs().maxCoeff() > 0.0) throw ConfigError("target: diagonal must be zero");
  coupled_set.clear();
  for (Eigen::Index i = 0; i < n; ++i)
    if (phases.row(i).cwiseAbs().maxCoeff() > 0.0) coupled_set.push_back(static_cast<int>(i));
}

TargetMatrix target_from_matrix(const Mat& phases, std::string label) {
  TargetMatrix t;
  t.phases = phases;
  t.label = std::move(label);
  t.finalize();
  return t;
}

TargetMatrix target_pairwise(int n_ions, const std::vector<PairPhase>& pairs) {
  if (n_ions < 2) throw ConfigError("target: need at least two ions");
  Mat phases = Mat::Zero(n_ions, n_ions);
  std::ostringstream label;
  label << "pairs";
  for (const auto& p : pairs) {
    check_ion(n_ions, p.n);
    check_ion(n_ions, p.m);
    if (p.n == p.m) throw ConfigError("target: a pair needs two distinct ions");
    set_pair(phases, p.n, p.m, p.phi);
    label << (&p == &pairs.front() ? ":" : ",") << p.n << "-" << p.m;
  }
  return target_from_matrix(phases, label.str());
}

TargetMatrix target_all_to_all(int n_ions, const std::vector<int>& subset, double phi) {
  if (n_ions < 2) throw ConfigError("target: need at least two ions");
  Mat phases = Mat::Zero(n_ions, n_ions);
  for (int a : subset) check_ion(n_ions, a);
  for (std::size_t i = 0; i < subset.size(); ++i)
    for (std::size_t k = i + 1; k < subset.size(); ++k) {
      if (subset[i] == subset[k]) throw ConfigError("target: subset repeats an ion");
      set_pair(phases, subset[i], subset[k], phi);
    }
  return target_from_matrix(phases, "all:" + std::to_string(subset.size()));
}

TargetMatrix target_random(int n_ions, double density, double amplitude, std::uint64_t seed) {
  if (n_ions < 2) throw ConfigError("target: need at least two ions");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("target: density must lie in (0, 1]");
  if (!(amplitude > 0.0)) throw ConfigError("target: amplitude must be positive");
  std::mt19937_64 rng(seed);
  Mat phases = Mat::Zero(n_ions, n_ions);
  for (int n = 0; n < n_ions; ++n)
    for (int m = n + 1; m < n_ions; ++m) {
      const double keep = unit_uniform(rng);
      const double u = unit_uniform(rng);
      if (keep < density) {
        double phi = amplitude * (2.0 * u - 1.0);
        if (phi == 0.0) phi = amplitude * 0x1.0p-53;
        set_pair(phases, n, m, phi);
      }
    }
  std::ostringstream label;
  label << "random:" << density << ":" << seed;
  return target_from_matrix(phases, label.str());
}

TargetMatrix target_cluster_grid(int n_ions, int rows, int cols, double phi, const std::vector<int>& mapping) {
  if (rows < 1 || cols < 1) throw ConfigError("target: grid dimensions must be positive");
  const auto ion = grid_mapping(n_ions, rows * cols, mapping);
  Mat phases = Mat::Zero(n_ions, n_ions);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int s = r * cols + c;
      if (c + 1 < cols) set_pair(phases, ion[s], ion[s + 1], phi);
      if (r + 1 < rows) set_pair(phases, ion[s], ion[s + cols], phi);
    }
  return target_from_matrix(phases, "cluster:" + std::to_string(rows) + "x" + std::to_string(cols));
}

TargetMatrix target_surface_code_cross(int n_ions, int side, double phi, const std::vector<int>& mapping) {
  if (side < 3 || side % 2 == 0) throw ConfigError("target: cross map needs an odd grid side >= 3");
  const auto ion = grid_mapping(n_ions, side * side, mapping);
  Mat phases = Mat::Zero(n_ions, n_ions);
  for (int r = 1; r < side; r += 2)
    for (int c = 1; c < side; c += 2) {
      const int a = ion[r * side + c];
      set_pair(phases, a, ion[(r - 1) * side + c], phi);
      set_pair(phases, a, ion[(r + 1) * side + c], phi);
      set_pair(phases, a, ion[r * side + c - 1], phi);
      set_pair(phases, a, ion[r * side + c + 1], phi);
    }
  return target_from_matrix(phases, "cross:" + std::to_string(side));
}

TargetMatrix parse_target_spec(const std::string& spec, int n_ions) {
  std::string body = spec;
  double phi = kDefaultPhase;
  if (const auto at = spec.find('@'); at != std::string::npos) {
    body = spec.substr(0, at);
    phi = parse_double(spec.substr(at + 1), spec);
  }
  const auto colon = body.find(':');
  const std::string kind = body.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : body.substr(colon + 1);

  if (kind == "pairs") {
    std::vector<PairPhase> pairs;
    for (const auto& item : split(args, ',')) {
      const auto parts = split(item, '-');
      if (parts.size() != 2) throw ConfigError("target spec '" + spec + "': pairs are written n-m");
      pairs.push_back({parse_int(parts[0], spec), parse_int(parts[1], spec), phi});
    }
    if (pairs.empty()) throw ConfigError("target spec '" + spec + "': no pairs");
    return target_pairwise(n_ions, pairs);
  }
  if (kind == "all") {
    std::vector<int> subset;
    if (args.empty()) {
      for (int i = 0; i < n_ions; ++i) subset.push_back(i);
    } else if (args.find('-') != std::string::npos) {
      const auto parts = split(args, '-');
      if (parts.size() != 2) throw ConfigError("target spec '" + spec + "': ranges are written lo-hi");
      for (int i = parse_int(parts[0], spec); i <= parse_int(parts[1], spec); ++i) subset.push_back(i);
    } else {
      for (const auto& item : split(args, ',')) subset.push_back(parse_int(item, spec));
    }
    return target_all_to_all(n_ions, subset, phi);
  }
  if (kind == "random") {
    const auto parts = split(args, ':');
    if (parts.size() != 2) throw ConfigError("target spec '" + spec + "': expected random:DENSITY:SEED");
    const int seed = parse_int(parts[1], spec);
    if (seed < 0) throw ConfigError("target spec '" + spec + "': seed must be non-negative");
    return target_random(n_ions, parse_double(parts[0], spec), phi, static_cast<std::uint64_t>(seed));
  }
  if (kind == "cluster") {
    const auto parts = split(args, 'x');
    if (parts.size() != 2) throw ConfigError("target spec '" + spec + "': expected cluster:RxC");
    return target_cluster_grid(n_ions, parse_int(parts[0], spec), parse_int(parts[1], spec), phi);
  }
  if (kind == "cross") return target_surface_code_cross(n_ions, parse_int(args, spec), phi);
  throw ConfigError("target spec '" + spec + "': unknown kind '" + kind + "'");
}

}  // namespace lsf
