#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "cellstream/synthcells.hpp"

namespace cellstream::curriculum {

using synthcells::ManifestEntry;
using synthcells::Task;

struct CurriculumParams {
  double alpha = 0.5;
  double beta = 0.5;
  double c0 = 0.05;
  int total_epochs = 1000;  // T
  double exponent = 2.0;    // p
  double l_norm_scale = 1.0;

  void validate() const;
};

struct SampleDifficulty {
  double b_raw = 0.0;
  double l_raw = 0.0;
  double b_norm = 0.0;
  double l_norm = 0.0;
  double d = 0.0;
};

// The conventional l normalizer: three standard deviations of the task's
// count distribution.
double default_l_norm_scale(const synthcells::PopulationSpec& pop, Task task);

// d = alpha * (b/10) + beta * min(1, l / l_norm_scale).
SampleDifficulty difficulty(double b_raw, double l_raw,
                            const CurriculumParams& params);

// c(t) = min(1, (t (1 - c0^p) / T + c0^p)^(1/p)); exactly c0 at t = 0 and
// exactly 1 for t >= T.
double competence(int t, const CurriculumParams& params);

// Indices (in input order) of the entries whose difficulty for `task` is at
// most c(t). Throws if an entry is missing its l feature.
std::vector<std::size_t> eligible_set(std::span<const ManifestEntry> entries,
                                      int t, const CurriculumParams& params,
                                      Task task);

// Writes "t,c" rows for t in [0, t_max] for plotting.
void write_competence_csv(const std::filesystem::path& path,
                          const CurriculumParams& params, int t_max);

}  // namespace cellstream::curriculum
