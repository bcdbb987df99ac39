#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsf/types.hpp"

namespace lsf {

inline constexpr double kDefaultPhase = kPi / 4.0;

/// Desired XX phases phi_nm: symmetric, zero diagonal.
struct TargetMatrix {
  Mat phases;
  std::string label;
  std::vector<int> coupled_set;  ///< ions with a nonzero row, ascending

  int size() const { return static_cast<int>(phases.rows()); }
  /// Recomputes coupled_set and checks symmetry, zero diagonal, finiteness.
  void finalize();
};

struct PairPhase {
  int n = 0;
  int m = 0;
  double phi = kDefaultPhase;
};

TargetMatrix target_from_matrix(const Mat& phases, std::string label);
TargetMatrix target_pairwise(int n_ions, const std::vector<PairPhase>& pairs);
TargetMatrix target_all_to_all(int n_ions, const std::vector<int>& subset, double phi = kDefaultPhase);
/// Each pair is included with probability `density` and gets a phase uniform
/// in (-amplitude, amplitude).
TargetMatrix target_random(int n_ions, double density, double amplitude, std::uint64_t seed);
/// Nearest-neighbour links of a rows x cols grid. Site s = row * cols + col
/// maps to ion mapping[s] (identity when empty).
TargetMatrix target_cluster_grid(int n_ions, int rows, int cols, double phi = kDefaultPhase,
                                 const std::vector<int>& mapping = {});
/// Stabilizer cross map on an odd side x side grid: ancillas at the sites with
/// odd row and odd column, each linked to its four neighbours.
TargetMatrix target_surface_code_cross(int n_ions, int side, double phi = kDefaultPhase,
                                       const std::vector<int>& mapping = {});

/// Parses a target spec string:
///   pairs:0-1,2-3     all | all:0-5 | all:0,2,4    random:DENSITY:SEED
///   cluster:RxC       cross:SIDE
/// Any spec may end in "@PHI" to set the phase (for random: the amplitude).
TargetMatrix parse_target_spec(const std::string& spec, int n_ions);

}  // namespace lsf
