#include "lsf/io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "lsf/coupling.hpp"
#include "lsf/targets.hpp"

namespace lsf {

static_assert(std::endian::native == std::endian::little, "packed arrays assume a little-endian host");

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string base64_encode(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ConfigError("base64: length is not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw ConfigError("base64: invalid input");
  // EVP_DecodeBlock keeps the padding bytes as zeros.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

Json pack_matrix(const Mat& m) {
  std::string bytes(static_cast<std::size_t>(m.size()) * sizeof(double), '\0');
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      std::memcpy(bytes.data() + at, &v, sizeof v);
      at += sizeof v;
    }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"dtype", "f64le"}, {"data", base64_encode(bytes)}};
}

Mat unpack_matrix(const Json& j) {
  try {
    if (j.at("dtype").get<std::string>() != "f64le") throw ConfigError("packed array: unsupported dtype");
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const std::string bytes = base64_decode(j.at("data").get<std::string>());
    if (rows < 0 || cols < 0 || bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(double))
      throw ConfigError("packed array: size does not match its shape");
    Mat m(rows, cols);
    std::size_t at = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index k = 0; k < cols; ++k) {
        std::memcpy(&m(i, k), bytes.data() + at, sizeof(double));
        at += sizeof(double);
      }
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("packed array: ") + e.what());
  }
}

Json pack_vector(const Vec& v) { return pack_matrix(v.transpose()); }

Vec unpack_vector(const Json& j) {
  const Mat m = unpack_matrix(j);
  if (m.rows() != 1 && m.size() != 0) throw ConfigError("packed array: expected a single row");
  return m.size() == 0 ? Vec() : Vec(m.row(0).transpose());
}

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Json crystal_to_json(const IonCrystal& crystal) {
  const CrystalConfig& c = crystal.config;
  Json cfg{{"n_ions", c.n_ions},
           {"spacing_m", c.spacing},
           {"mode_freq_low_hz", c.mode_freq_low},
           {"mode_freq_high_hz", c.mode_freq_high},
           {"ion_mass_amu", c.ion_mass_amu},
           {"drive_wavenumber_per_m", c.drive_wavenumber},
           {"base_rabi_rad_per_s", c.base_rabi},
           {"coulomb_coupling", coulomb_coupling(c)}};
  std::vector<double> part;
  for (int n = 0; n < crystal.size(); ++n)
    for (int j = 0; j < crystal.size(); ++j) part.push_back(crystal.participation(n, j));
  return Json{{"config", cfg},
              {"mode_freqs_rad_per_s", to_std(crystal.mode_freqs)},
              {"participation_row_major", part},
              {"lamb_dicke", to_std(crystal.lamb_dicke)}};
}

Json grid_to_json(const ToneGrid& grid) {
  return Json{{"gate_time_s", grid.gate_time},
              {"harmonics", grid.harmonics},
              {"tone_freqs_rad_per_s", to_std(grid.tone_freqs)},
              {"margin_rad_per_s", grid.margin}};
}

std::string crystal_hash(const IonCrystal& crystal) { return sha256_hex(crystal_to_json(crystal).dump()); }
std::string grid_hash(const ToneGrid& grid) { return sha256_hex(grid_to_json(grid).dump()); }

double GateTimeSpec::resolve(const IonCrystal& crystal) const {
  if (seconds) return *seconds;
  return t_min_multiple * min_gate_time(crystal);
}

// ---------------------------------------------------------------- run config

namespace {

/// Typed field access with strict key checking.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }
  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<long long>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  template <class T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    std::vector<T> out;
    for (const Json& e : v) {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!e.is_string()) throw ConfigError(where(key) + ": expected strings");
      } else if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw ConfigError(where(key) + ": expected integers");
      } else {
        if (!e.is_number()) throw ConfigError(where(key) + ": expected numbers");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }
  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), where(key));
  }
  /// Rejects keys that were never asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int to_int(long long v, const char* what) {
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(std::string(what) + ": out of range");
  return static_cast<int>(v);
}

}  // namespace

RunConfig parse_run_config(const Json& j) {
  RunConfig rc;
  rc.raw = j;
  Section top(j, "");
  if (auto c = top.child("crystal")) {
    CrystalConfig& cc = rc.crystal;
    cc.n_ions = to_int(c->integer("n_ions", cc.n_ions), "crystal.n_ions");
    cc.spacing = c->number("spacing_um", cc.spacing * 1e6) * 1e-6;
    cc.mode_freq_low = c->number("mode_freq_low_mhz", cc.mode_freq_low * 1e-6) * 1e6;
    cc.mode_freq_high = c->number("mode_freq_high_mhz", cc.mode_freq_high * 1e-6) * 1e6;
    cc.ion_mass_amu = c->number("ion_mass_amu", cc.ion_mass_amu);
    cc.drive_wavenumber = c->number("drive_wavenumber_per_m", cc.drive_wavenumber);
    cc.base_rabi = c->number("base_rabi_rad_per_s", cc.base_rabi);
    if (c->has("coulomb_coupling")) cc.coulomb_coupling = c->number("coulomb_coupling", 0.0);
    if (c->has("lamb_dicke")) rc.lamb_dicke = c->number("lamb_dicke", 0.0);
    c->finish();
  }
  if (auto g = top.child("gate_time")) {
    const bool abs = g->has("seconds");
    const bool rel = g->has("t_min_multiple");
    if (abs && rel) throw ConfigError("gate_time: give either seconds or t_min_multiple, not both");
    if (abs) rc.gate_time.seconds = g->number("seconds", 0.0);
    rc.gate_time.t_min_multiple = g->number("t_min_multiple", rc.gate_time.t_min_multiple);
    g->finish();
  }
  if (auto t = top.child("tones")) {
    rc.tones.margin = t->number("margin_2pi_over_t", rc.tones.margin);
    rc.tones.window = t->number("window_2pi_over_t", rc.tones.window);
    rc.tones.kernel_tolerance = t->number("kernel_tolerance", rc.tones.kernel_tolerance);
    t->finish();
  }
  if (auto p = top.child("pool")) {
    rc.ansatz = parse_ansatz(p->text("ansatz", to_string(rc.ansatz)));
    rc.pool.count = to_int(p->integer("count", rc.pool.count), "pool.count");
    rc.pool.overlap_threshold = p->number("overlap_threshold", rc.pool.overlap_threshold);
    rc.pool.seed_budget = to_int(p->integer("seed_budget", rc.pool.seed_budget), "pool.seed_budget");
    rc.pool.search.epsilon = p->number("epsilon", rc.pool.search.epsilon);
    rc.pool.search.max_iter = to_int(p->integer("max_iter", rc.pool.search.max_iter), "pool.max_iter");
    rc.pool.search.max_retries = to_int(p->integer("max_retries", rc.pool.search.max_retries), "pool.max_retries");
    p->finish();
  }
  if (auto s = top.child("solver")) {
    SolverConfig& sc = rc.solver;
    sc.epsilon = s->number("epsilon", sc.epsilon);
    sc.delta = s->number("delta", sc.delta);
    sc.max_delta = s->number("max_delta", sc.max_delta);
    sc.max_iters = to_int(s->integer("max_iters", sc.max_iters), "solver.max_iters");
    sc.stall_patience = to_int(s->integer("stall_patience", sc.stall_patience), "solver.stall_patience");
    sc.stall_tolerance = s->number("stall_tolerance", sc.stall_tolerance);
    sc.infidelity_threshold = s->number("infidelity_threshold", sc.infidelity_threshold);
    sc.polish_target = s->number("polish_target", sc.polish_target);
    sc.polish_iters = to_int(s->integer("polish_iters", sc.polish_iters), "solver.polish_iters");
    sc.ordered_infidelity = s->boolean("ordered_infidelity", sc.ordered_infidelity);
    rc.refine = s->boolean("refine", rc.refine);
    s->finish();
  }
  rc.target = top.text("target", rc.target);
  if (top.has("seed")) {
    const long long seed = top.integer("seed", 1);
    if (seed < 0) throw ConfigError("seed: must be non-negative");
    rc.seed = static_cast<std::uint64_t>(seed);
  }
  rc.output_dir = top.text("output_dir", rc.output_dir);
  rc.cache_dir = top.text("cache_dir", rc.cache_dir);
  if (auto e = top.child("estimator")) {
    rc.estimator.k_nuc = e->number("k_nuc", rc.estimator.k_nuc);
    rc.estimator.exponent = e->number("exponent", rc.estimator.exponent);
    e->finish();
  }
  if (auto s = top.child("simulation")) {
    SimConfig& sc = rc.simulation;
    sc.phonon_cutoff = to_int(s->integer("phonon_cutoff", sc.phonon_cutoff), "simulation.phonon_cutoff");
    sc.carrier = s->boolean("carrier", sc.carrier);
    sc.carrier_scale = s->number("carrier_scale", sc.carrier_scale);
    sc.debye_waller = s->boolean("debye_waller", sc.debye_waller);
    sc.samples = to_int(s->integer("samples", sc.samples), "simulation.samples");
    sc.mode_order = s->list<int>("mode_order", sc.mode_order);
    sc.rel_tol = s->number("rel_tol", sc.rel_tol);
    sc.abs_tol = s->number("abs_tol", sc.abs_tol);
    if (s->has("initial_basis_state")) {
      const std::string bits = s->text("initial_basis_state", "");
      if (bits.empty() || bits.size() > 30 || bits.find_first_not_of("01") != std::string::npos)
        throw ConfigError("simulation.initial_basis_state: expected a bit string such as \"0101\"");
      CVec init = CVec::Zero(Eigen::Index{1} << bits.size());
      init(static_cast<Eigen::Index>(std::stoul(bits, nullptr, 2))) = 1.0;
      sc.initial_state = init;
    }
    s->finish();
  }
  if (auto s = top.child("scaling")) {
    rc.scaling.ions = s->list<int>("ions", rc.scaling.ions);
    rc.scaling.t_over_tmin = s->list<double>("t_over_tmin", rc.scaling.t_over_tmin);
    rc.scaling.targets = s->list<std::string>("targets", rc.scaling.targets);
    rc.scaling.pool_count = to_int(s->integer("pool_count", rc.scaling.pool_count), "scaling.pool_count");
    s->finish();
  }
  if (auto s = top.child("collapse")) {
    rc.collapse.targets = to_int(s->integer("targets", rc.collapse.targets), "collapse.targets");
    rc.collapse.density = s->number("density", rc.collapse.density);
    rc.collapse.amplitude = s->number("amplitude", rc.collapse.amplitude);
    rc.collapse.pool_count = to_int(s->integer("pool_count", rc.collapse.pool_count), "collapse.pool_count");
    s->finish();
  }
  if (auto s = top.child("compare")) {
    rc.compare.pool_count = to_int(s->integer("pool_count", rc.compare.pool_count), "compare.pool_count");
    rc.compare.targets = to_int(s->integer("targets", rc.compare.targets), "compare.targets");
    rc.compare.density = s->number("density", rc.compare.density);
    rc.compare.amplitude = s->number("amplitude", rc.compare.amplitude);
    s->finish();
  }
  if (auto g = top.child("guards")) {
    rc.max_multi_ions = to_int(g->integer("max_multi_ions", rc.max_multi_ions), "guards.max_multi_ions");
    rc.allow_large = g->boolean("allow_large", rc.allow_large);
    g->finish();
  }
  top.finish();
  rc.pool.first_seed = rc.seed;
  rc.validate();
  return rc;
}

void RunConfig::validate() const {
  crystal.validate();
  if (lamb_dicke && !(*lamb_dicke > 0.0)) throw ConfigError("crystal.lamb_dicke: must be positive");
  if (gate_time.seconds && !(*gate_time.seconds > 0.0)) throw ConfigError("gate_time.seconds: must be positive");
  if (!(gate_time.t_min_multiple > 0.0)) throw ConfigError("gate_time.t_min_multiple: must be positive");
  if (!(tones.margin >= 0.0)) throw ConfigError("tones.margin_2pi_over_t: must be non-negative");
  if (!(tones.kernel_tolerance > 0.0 && tones.kernel_tolerance < 1.0))
    throw ConfigError("tones.kernel_tolerance: must lie in (0, 1)");
  if (pool.count < 1) throw ConfigError("pool.count: must be positive");
  if (pool.seed_budget < 0) throw ConfigError("pool.seed_budget: must be non-negative");
  if (!(pool.overlap_threshold > 0.0)) throw ConfigError("pool.overlap_threshold: must be positive");
  pool.search.validate();
  solver.validate();
  estimator.validate();
  if (simulation.phonon_cutoff < 12) throw ConfigError("simulation.phonon_cutoff: must be at least 12");
  if (simulation.samples < 0) throw ConfigError("simulation.samples: must be non-negative");
  for (int n : scaling.ions)
    if (n < 2) throw ConfigError("scaling.ions: every entry must be at least 2");
  for (double t : scaling.t_over_tmin)
    if (!(t > 0.0)) throw ConfigError("scaling.t_over_tmin: entries must be positive");
  if (scaling.pool_count < 1 || collapse.pool_count < 1 || compare.pool_count < 1)
    throw ConfigError("pool_count: must be positive");
  if (collapse.targets < 2) throw ConfigError("collapse.targets: need at least two targets for a fit");
  if (compare.targets < 1) throw ConfigError("compare.targets: must be positive");
  for (double d : {collapse.density, compare.density})
    if (!(d > 0.0 && d <= 1.0)) throw ConfigError("density: must lie in (0, 1]");
  if (max_multi_ions < 2) throw ConfigError("guards.max_multi_ions: must be at least 2");
}

std::string RunConfig::hash() const {
  // The output location does not change any result.
  Json j = raw;
  if (j.is_object()) j.erase("output_dir");
  return sha256_hex(j.dump());
}

RunConfig load_run_config(const fs::path& path) { return parse_run_config(read_json(path)); }

std::string run_config_schema() {
  return R"(Run configuration (JSON; every key optional, unknown keys are rejected):
  crystal:    n_ions, spacing_um, mode_freq_low_mhz, mode_freq_high_mhz, ion_mass_amu,
              drive_wavenumber_per_m, base_rabi_rad_per_s, coulomb_coupling, lamb_dicke
  gate_time:  seconds | t_min_multiple
  tones:      margin_2pi_over_t, window_2pi_over_t (<= 0 keeps the padded grid), kernel_tolerance
  pool:       ansatz (global|multi), count, overlap_threshold, seed_budget, epsilon, max_iter, max_retries
  solver:     epsilon, delta, max_delta, max_iters, stall_patience, stall_tolerance,
              infidelity_threshold, polish_target, polish_iters, ordered_infidelity, refine
  target:     spec string (pairs:0-1,2-3 | all | all:0-5 | random:D:SEED | cluster:RxC | cross:S, optional @PHI)
  seed, output_dir, cache_dir
  estimator:  k_nuc, exponent
  simulation: phonon_cutoff, carrier, carrier_scale, debye_waller, samples, mode_order,
              initial_basis_state, rel_tol, abs_tol
  scaling:    ions, t_over_tmin, targets, pool_count
  collapse:   targets, density, amplitude, pool_count
  compare:    pool_count, targets, density, amplitude
  guards:     max_multi_ions, allow_large
)";
}

IonCrystal make_crystal(const RunConfig& config) { return make_crystal(config, config.crystal.n_ions); }

IonCrystal make_crystal(const RunConfig& config, int n_ions) {
  CrystalConfig cc = config.crystal;
  cc.n_ions = n_ions;
  IonCrystal c = build_crystal(cc);
  if (config.lamb_dicke) c.lamb_dicke.setConstant(*config.lamb_dicke);
  return c;
}

CouplingSet make_couplings(const RunConfig& config, const IonCrystal& crystal, double gate_time) {
  auto c = std::make_shared<const IonCrystal>(crystal);
  ToneGrid grid = build_tone_grid(crystal, gate_time, config.tones.margin * kTwoPi / gate_time);
  if (config.tones.window > 0.0)
    grid = restrict_tones_near_modes(grid, crystal, config.tones.window * kTwoPi / gate_time);
  auto g = std::make_shared<const ToneGrid>(std::move(grid));
  KernelBasis k = config.cache_dir.empty()
                      ? kernel_basis(build_closure_matrix(crystal, *g), config.tones.kernel_tolerance)
                      : cached_kernel(config.cache_dir, crystal, *g, config.tones.kernel_tolerance);
  return build_couplings(c, g, std::make_shared<const KernelBasis>(std::move(k)));
}

// ---------------------------------------------------------------- kernel cache

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw ConfigError("kernel cache: truncated file");
  return v;
}

void put_matrix(std::ostream& os, const Mat& m) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(os, m(i, j));
}

Mat get_matrix(std::istream& is) {
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  if (rows > (1u << 20) || cols > (1u << 20)) throw ConfigError("kernel cache: implausible dimensions");
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(is);
  return m;
}

constexpr char kKernelMagic[4] = {'L', 'S', 'F', 'K'};
constexpr std::uint32_t kKernelVersion = 1;

}  // namespace

void write_kernel(const fs::path& path, const KernelBasis& k) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Write to a temporary name first so concurrent readers never see half a file.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw ConfigError("kernel cache: cannot write " + tmp.string());
    os.write(kKernelMagic, 4);
    put<std::uint32_t>(os, kKernelVersion);
    put_matrix(os, k.l_matrix);
    put_matrix(os, k.basis);
    put<double>(os, k.tolerance);
  }
  fs::rename(tmp, path);
}

KernelBasis read_kernel(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("kernel cache: cannot read " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kKernelMagic, 4) != 0) throw ConfigError("kernel cache: bad magic");
  if (get<std::uint32_t>(is) != kKernelVersion) throw ConfigError("kernel cache: unsupported version");
  KernelBasis k;
  k.l_matrix = get_matrix(is);
  k.basis = get_matrix(is);
  k.tolerance = get<double>(is);
  return k;
}

KernelBasis cached_kernel(const fs::path& cache_dir, const IonCrystal& crystal, const ToneGrid& grid,
                          double tolerance) {
  char tol[32];
  std::snprintf(tol, sizeof tol, "%a", tolerance);
  const std::string key = sha256_hex(crystal_hash(crystal) + grid_hash(grid) + tol);
  const fs::path path = cache_dir / ("kernel-" + key.substr(0, 32) + ".bin");
  if (fs::exists(path)) {
    try {
      KernelBasis k = read_kernel(path);
      if (k.tolerance == tolerance && k.basis.rows() == grid.size()) return k;
    } catch (const ConfigError&) {
      // Damaged entry: rebuild and overwrite.
    }
  }
  KernelBasis k = kernel_basis(build_closure_matrix(crystal, grid), tolerance);
  write_kernel(path, k);
  return k;
}

// ---------------------------------------------------------------- pools and solutions

Json pool_to_json(const SolutionPool& pool) {
  const Eigen::Index dim = pool.entries.empty() ? 0 : pool.entries.front().coords.size();
  Mat coords(static_cast<Eigen::Index>(pool.entries.size()), dim);
  Json entries = Json::array();
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const ZeroPhaseSolution& e = pool.entries[i];
    coords.row(static_cast<Eigen::Index>(i)) = e.coords.transpose();
    entries.push_back({{"seed", e.seed}, {"residual", e.residual}, {"iterations", e.iterations}});
  }
  Json packed = pack_matrix(coords);
  const std::string content = sha256_hex(packed.at("data").get<std::string>());
  return Json{{"format", "lsf-pool"},
              {"version", 1},
              {"ansatz", to_string(pool.ansatz)},
              {"epsilon", pool.epsilon},
              {"overlap_threshold", pool.overlap_threshold},
              {"residual_scale", pool.residual_scale},
              {"crystal_hash", pool.crystal_hash},
              {"grid_hash", pool.grid_hash},
              {"stats",
               {{"attempts", pool.stats.attempts},
                {"converged", pool.stats.converged},
                {"rejected_overlap", pool.stats.rejected_overlap}}},
              {"entries", entries},
              {"coords", packed},
              {"coords_sha256", content}};
}

SolutionPool pool_from_json(const Json& j) {
  try {
    if (j.at("format") != "lsf-pool") throw ConfigError("pool file: wrong format tag");
    SolutionPool p;
    p.ansatz = parse_ansatz(j.at("ansatz").get<std::string>());
    p.epsilon = j.at("epsilon").get<double>();
    p.overlap_threshold = j.at("overlap_threshold").get<double>();
    p.residual_scale = j.at("residual_scale").get<double>();
    p.crystal_hash = j.at("crystal_hash").get<std::string>();
    p.grid_hash = j.at("grid_hash").get<std::string>();
    p.stats.attempts = j.at("stats").at("attempts").get<int>();
    p.stats.converged = j.at("stats").at("converged").get<int>();
    p.stats.rejected_overlap = j.at("stats").at("rejected_overlap").get<int>();
    if (sha256_hex(j.at("coords").at("data").get<std::string>()) != j.at("coords_sha256").get<std::string>())
      throw ConfigError("pool file: coordinate checksum mismatch");
    const Mat coords = unpack_matrix(j.at("coords"));
    const Json& entries = j.at("entries");
    if (static_cast<Eigen::Index>(entries.size()) != coords.rows())
      throw ConfigError("pool file: entry count does not match the coordinate array");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      ZeroPhaseSolution z;
      z.coords = coords.row(static_cast<Eigen::Index>(i)).transpose();
      z.seed = entries[i].at("seed").get<std::uint64_t>();
      z.residual = entries[i].at("residual").get<double>();
      z.iterations = entries[i].at("iterations").get<int>();
      z.ansatz = p.ansatz;
      z.converged = true;
      p.entries.push_back(std::move(z));
    }
    return p;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("pool file: ") + e.what());
  }
}

Json target_to_json(const TargetMatrix& t) {
  Json links = Json::array();
  for (int n = 0; n < t.size(); ++n)
    for (int m = n + 1; m < t.size(); ++m)
      if (t.phases(n, m) != 0.0) links.push_back({{"n", n}, {"m", m}, {"phi", t.phases(n, m)}});
  return Json{{"label", t.label}, {"ions", t.size()}, {"links", links}};
}

TargetMatrix target_from_json(const Json& j) {
  try {
    const int n = j.at("ions").get<int>();
    if (n < 1) throw ConfigError("target: ions must be positive");
    Mat phases = Mat::Zero(n, n);
    for (const Json& l : j.at("links")) {
      const int a = l.at("n").get<int>();
      const int b = l.at("m").get<int>();
      if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw ConfigError("target: link index out of range");
      phases(a, b) = phases(b, a) = l.at("phi").get<double>();
    }
    return target_from_matrix(phases, j.at("label").get<std::string>());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
}

Json solutions_to_json(const SolutionFile& f) {
  Json sols = Json::array();
  for (const DriveSolution& s : f.solutions) {
    sols.push_back({{"origin", s.origin},
                    {"total_rabi", s.total_rabi},
                    {"total_rabi_rad_per_s", s.total_rabi_hz(f.gate_time)},
                    {"lambda", s.lambda},
                    {"infidelity", s.infidelity},
                    {"converted_infidelity", s.converted_infidelity},
                    {"converted_rabi", s.converted_rabi},
                    {"iterations", s.iterations},
                    {"polish_change", s.polish_change},
                    {"warning", s.warning},
                    {"note", s.note},
                    {"rabi_trace", s.rabi_trace},
                    {"coords", pack_vector(s.coords)},
                    {"amplitudes", pack_matrix(s.amplitudes)}});
  }
  return Json{{"format", "lsf-solutions"},
              {"version", 1},
              {"units", "coords and amplitudes are dimensionless (amplitude x gate time)"},
              {"crystal_hash", f.crystal_hash},
              {"grid_hash", f.grid_hash},
              {"config_hash", f.config_hash},
              {"gate_time_s", f.gate_time},
              {"target", target_to_json(f.target)},
              {"solutions", sols}};
}

SolutionFile solutions_from_json(const Json& j) {
  try {
    if (j.at("format") != "lsf-solutions") throw ConfigError("solution file: wrong format tag");
    SolutionFile f;
    f.crystal_hash = j.at("crystal_hash").get<std::string>();
    f.grid_hash = j.at("grid_hash").get<std::string>();
    f.config_hash = j.at("config_hash").get<std::string>();
    f.gate_time = j.at("gate_time_s").get<double>();
    f.target = target_from_json(j.at("target"));
    for (const Json& e : j.at("solutions")) {
      DriveSolution s;
      s.origin = e.at("origin").get<int>();
      s.total_rabi = e.at("total_rabi").get<double>();
      s.lambda = e.at("lambda").get<double>();
      s.infidelity = e.at("infidelity").get<double>();
      s.converted_infidelity = e.at("converted_infidelity").get<double>();
      s.converted_rabi = e.at("converted_rabi").get<double>();
      s.iterations = e.at("iterations").get<int>();
      s.polish_change = e.at("polish_change").get<double>();
      s.warning = e.at("warning").get<bool>();
      s.note = e.at("note").get<std::string>();
      s.rabi_trace = e.at("rabi_trace").get<std::vector<double>>();
      s.coords = unpack_vector(e.at("coords"));
      s.amplitudes = unpack_matrix(e.at("amplitudes"));
      if (s.amplitudes.rows() != f.target.size()) throw ConfigError("solution file: amplitude rows != ions");
      f.solutions.push_back(std::move(s));
    }
    return f;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("solution file: ") + e.what());
  }
}

void check_provenance(const std::string& what, const std::string& crystal_h, const std::string& grid_h,
                      const IonCrystal& crystal, const ToneGrid& grid) {
  if (crystal_h != crystal_hash(crystal))
    throw ConfigError(what + ": crystal hash does not match the run configuration");
  if (grid_h != grid_hash(grid)) throw ConfigError(what + ": tone grid hash does not match the run configuration");
}

Json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(1) << '\n';
}

// ---------------------------------------------------------------- CSV

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(long long v) { return std::to_string(v); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) throw ConfigError("csv: row width does not match the header");
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  rows_.push_back(std::move(line));
}

std::string CsvWriter::str() const {
  std::string out;
  for (const std::string& c : comments_) out += "# " + c + '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
  out += '\n';
  for (const std::string& r : rows_) out += r + '\n';
  return out;
}

void CsvWriter::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << str();
}

}  // namespace lsf
