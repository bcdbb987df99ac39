#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsf/analysis.hpp"
#include "lsf/crystal.hpp"
#include "lsf/lsf.hpp"
#include "lsf/simkit.hpp"
#include "lsf/spectrum.hpp"
#include "lsf/zeropool.hpp"

namespace lsf {

using Json = nlohmann::json;

std::string sha256_hex(const std::string& bytes);
std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

/// {"rows", "cols", "dtype": "f64le", "data": base64 of row-major doubles}.
Json pack_matrix(const Mat& m);
Mat unpack_matrix(const Json& j);
Json pack_vector(const Vec& v);
Vec unpack_vector(const Json& j);

Json crystal_to_json(const IonCrystal& crystal);
Json grid_to_json(const ToneGrid& grid);
std::string crystal_hash(const IonCrystal& crystal);
std::string grid_hash(const ToneGrid& grid);

/// Gate time given either in seconds or as a multiple of T_min.
struct GateTimeSpec {
  std::optional<double> seconds;
  double t_min_multiple = 2.0;
  double resolve(const IonCrystal& crystal) const;
};

struct ToneSpec {
  double margin = 3.0;  ///< in units of 2 pi / T
  double window = 4.0;  ///< in units of 2 pi / T; <= 0 keeps the whole padded grid
  double kernel_tolerance = kDefaultKernelTolerance;
};

struct ScalingSpec {
  std::vector<int> ions{6, 10, 14};
  std::vector<double> t_over_tmin{1.5, 2.0, 3.0};
  std::vector<std::string> targets{"all"};
  int pool_count = 10;
};

struct CollapseSpec {
  int targets = 20;
  double density = 0.5;
  double amplitude = kPi / 4.0;
  int pool_count = 10;
};

struct CompareSpec {
  int pool_count = 50;
  int targets = 5;
  double density = 0.5;
  double amplitude = kPi / 4.0;
};

/// Everything a CLI run needs. Parsed strictly: unknown keys are errors.
struct RunConfig {
  CrystalConfig crystal;
  std::optional<double> lamb_dicke;  ///< overrides every eta_j when set
  GateTimeSpec gate_time;
  ToneSpec tones;
  Ansatz ansatz = Ansatz::global;
  PoolParams pool;
  SolverConfig solver;
  bool refine = true;
  std::string target = "all";
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  std::string cache_dir;  ///< kernel cache; empty disables it
  EstimatorConfig estimator;
  SimConfig simulation = [] {
    SimConfig s;
    s.samples = 101;
    return s;
  }();
  ScalingSpec scaling;
  CollapseSpec collapse;
  CompareSpec compare;
  int max_multi_ions = 20;
  bool allow_large = false;

  Json raw;  ///< the parsed document after overrides; hashed without output_dir

  void validate() const;
  std::string hash() const;
};

RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);
/// Schema summary printed by `lsf --help-config`.
std::string run_config_schema();

IonCrystal make_crystal(const RunConfig& config);
IonCrystal make_crystal(const RunConfig& config, int n_ions);
/// Grid, (possibly cached) kernel and couplings for the configured gate time.
CouplingSet make_couplings(const RunConfig& config, const IonCrystal& crystal, double gate_time);

/// Kernel of the closure matrix, read from or written to `cache_dir` under a
/// key derived from the crystal, grid and tolerance.
KernelBasis cached_kernel(const std::filesystem::path& cache_dir, const IonCrystal& crystal, const ToneGrid& grid,
                          double tolerance);
/// Dense binary layout: "LSFK", u32 version, then for l_matrix and basis
/// u64 rows, u64 cols and row-major f64 little-endian; f64 tolerance.
void write_kernel(const std::filesystem::path& path, const KernelBasis& k);
KernelBasis read_kernel(const std::filesystem::path& path);

Json pool_to_json(const SolutionPool& pool);
SolutionPool pool_from_json(const Json& j);

struct SolutionFile {
  std::string crystal_hash;
  std::string grid_hash;
  std::string config_hash;
  double gate_time = 0.0;
  TargetMatrix target;
  std::vector<DriveSolution> solutions;
};
Json target_to_json(const TargetMatrix& t);
TargetMatrix target_from_json(const Json& j);
Json solutions_to_json(const SolutionFile& f);
SolutionFile solutions_from_json(const Json& j);

/// Throws ConfigError when the stored hashes do not match.
void check_provenance(const std::string& what, const std::string& crystal_h, const std::string& grid_h,
                      const IonCrystal& crystal, const ToneGrid& grid);

Json read_json(const std::filesystem::path& path);
/// Writes j.dump(1) plus a newline; creates parent directories.
void write_json(const std::filesystem::path& path, const Json& j);

/// CSV with leading '#' comment lines. Numbers use %.17g so reruns are
/// byte-identical.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void comment(const std::string& line) { comments_.push_back(line); }
  void row(const std::vector<std::string>& cells);
  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};
std::string fmt(double v);
std::string fmt(long long v);
inline std::string fmt(int v) { return fmt(static_cast<long long>(v)); }

}  // namespace lsf
