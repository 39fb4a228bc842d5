#ifndef SHOCKEXP_CLI_HPP
#define SHOCKEXP_CLI_HPP

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "shockexp/hugoniot.hpp"
#include "shockexp/reference.hpp"

namespace shockexp {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3, kExitUsage = 4 };

enum class Oracle { FiniteVolume, DampedExact };

struct CompareOptions {
  double eps = 0.0;
  int cells = 0;         // 0: numerics.fv_cells
  Oracle oracle = Oracle::FiniteVolume;
  bool grid_check = true; // also run on half the cells to estimate the grid error
  // Subtract the front offset of an eps = 0 run on the same grid, whose
  // exact shocks are s0. Removes the O(dx) smearing bias of the extraction.
  bool baseline = true;
  int far_cells = 40;
  double order_constant = 1.0; // pass if e <= 2 grid_error + order_constant eps^2
  int workers = 0;             // finite-volume runs in parallel; 0: hardware threads
};

struct ComparisonRow {
  double t = 0.0;
  double x_minus = 0.0, x_plus = 0.0;     // oracle, bias removed when a baseline ran
  double s_minus = 0.0, s_plus = 0.0;     // s0 + eps s1
  double bias_minus = 0.0, bias_plus = 0.0;     // baseline front offset from s0
  double coarse_minus = 0.0, coarse_plus = 0.0; // same as x_* on the coarse grid
};

struct CompareReport {
  double eps = 0.0;
  int cells = 0;
  double e_minus = 0.0, e_plus = 0.0;
  double grid_error_estimate = 0.0;
  bool passed = false;
  std::string error; // non-empty when the member failed
  std::vector<ComparisonRow> rows;

  double e() const { return std::max(e_minus, e_plus); }
  std::string to_json() const;
};

/// Shock positions s(t, eps) = Dbar (1 - exp(-eps t)) / eps of the linearly
/// damped problem (f = -u, g = -v, constant states), Dbar the initial speed.
double damped_exact_position(double Dbar, double eps, double t);

/// Asymptotic shocks against the oracle at the reference output times.
CompareReport run_compare(const ProblemSpec& spec, std::shared_ptr<const ExpansionData> expansion,
                          const CompareOptions& options);

struct SweepReport {
  std::vector<CompareReport> members;
  double slope = 0.0;
  std::vector<double> ratios; // e(eps_i) / e(eps_{i+1})
  bool grid_ok = false;       // grid error < e/10 for every member
  bool passed = false;
  std::string to_json() const;
};

/// Least-squares slope of log e against log eps.
double loglog_slope(const std::vector<double>& eps, const std::vector<double>& e);

/// Oracle runs go to a pool of `base.workers` threads and the eps = 0
/// baselines are shared between members. A failing member keeps its error
/// message and the others are still reported.
SweepReport sweep_epsilon(const ProblemSpec& spec, const std::vector<double>& eps_list,
                          const CompareOptions& base);

/// Writes through a temporary file in the same directory and renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

int run_cli(int argc, char** argv);

} // namespace shockexp

#endif
