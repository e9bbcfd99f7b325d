#include "cellstream/curriculum.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace cellstream::curriculum {

void CurriculumParams::validate() const {
  if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
    throw std::invalid_argument("alpha and beta must be in [0,1]");
  if (std::abs(alpha + beta - 1.0) > 1e-9)
    throw std::invalid_argument("alpha + beta must equal 1");
  if (!(c0 > 0.0) || c0 > 1.0)
    throw std::invalid_argument("c0 must be in (0,1]");
  if (total_epochs < 1) throw std::invalid_argument("T must be >= 1");
  if (exponent < 1.0) throw std::invalid_argument("exponent must be >= 1");
  if (!(l_norm_scale > 0.0))
    throw std::invalid_argument("l_norm_scale must be > 0");
}

double default_l_norm_scale(const synthcells::PopulationSpec& pop, Task task) {
  double s = 3.0 * pop.std_dev(task);
  if (!(s > 0.0))
    throw std::invalid_argument("population std must be > 0 to derive l_norm_scale");
  return s;
}

SampleDifficulty difficulty(double b_raw, double l_raw,
                            const CurriculumParams& params) {
  params.validate();
  if (!(b_raw >= 0.0) || b_raw > 10.0)
    throw std::invalid_argument("blur radius out of range [0,10]: " +
                                std::to_string(b_raw));
  if (!(l_raw >= 0.0))
    throw std::invalid_argument("l feature must be >= 0");
  SampleDifficulty out;
  out.b_raw = b_raw;
  out.l_raw = l_raw;
  out.b_norm = b_raw / 10.0;
  out.l_norm = std::min(1.0, l_raw / params.l_norm_scale);
  out.d = params.alpha * out.b_norm + params.beta * out.l_norm;
  return out;
}

double competence(int t, const CurriculumParams& params) {
  params.validate();
  if (t < 0) throw std::invalid_argument("epoch index must be >= 0");
  // The raw formula lands within rounding of these endpoints; pinning them
  // keeps t=0 at c0 and t>=T at 1 exactly.
  if (t == 0) return params.c0;
  if (t >= params.total_epochs) return 1.0;
  double c0p = std::pow(params.c0, params.exponent);
  double val = static_cast<double>(t) * (1.0 - c0p) /
                   static_cast<double>(params.total_epochs) +
               c0p;
  return std::min(1.0, std::pow(val, 1.0 / params.exponent));
}

std::vector<std::size_t> eligible_set(std::span<const ManifestEntry> entries,
                                      int t, const CurriculumParams& params,
                                      Task task) {
  double c = competence(t, params);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    double l = e.l(task);
    if (std::isnan(l))
      throw std::invalid_argument("manifest entry " + std::to_string(i) + " (" +
                                  e.path + ") is missing its l feature for task " +
                                  synthcells::to_string(task));
    if (difficulty(e.degradation.blur_radius, l, params).d <= c) out.push_back(i);
  }
  return out;
}

void write_competence_csv(const std::filesystem::path& path,
                          const CurriculumParams& params, int t_max) {
  params.validate();
  if (t_max < 0) throw std::invalid_argument("t_max must be >= 0");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "t,c\n";
  for (int t = 0; t <= t_max; ++t) out << t << ',' << competence(t, params) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace cellstream::curriculum
