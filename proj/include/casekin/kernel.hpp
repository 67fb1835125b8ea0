#pragma once

#include <cstddef>
#include <vector>

#include "casekin/types.hpp"

namespace casekin {

//! Triweight kernel (35/32)(1 - u^2)^3 on [-1, 1], zero outside.
double triweight(double u);

//! Partial moment of the triweight kernel: integral of r^k K(r) over [-1, w],
//! in closed form. kernel_moment(0, 1) = 1, kernel_moment(2, 1) = 1/9, and
//! odd moments over the full support vanish by symmetry.
double kernel_moment(int k, double omega);

//! Guards for the locally weighted fits.
struct LocalFitConfig {
  double min_mass = 5.0;  // minimum kernel-weighted risk mass for a slope
  double eps_c = 1e-10;   // minimum weighted design spread for a slope
};

//! One family inside a group panel: proband position on the transformed
//! scale plus the relatives' observed times, split by status.
struct PanelFamily {
  double x = 0.0;                    // transformed proband time, in [0, 1]
  std::vector<double> rel_times;     // all relative times, ascending
  std::vector<double> event_times;   // relative event times (> 0), ascending
};

//! All families of one proband group arranged for repeated local fits.
struct GroupPanel {
  std::vector<PanelFamily> families;         // ascending by x
  std::vector<double> positions;             // families[i].x, for binary search
  std::vector<double> distinct_event_times;  // group-wide, ascending, > 0
};

GroupPanel build_group_panel(const Dataset& ds, int q, const std::vector<double>& proband_pos);

//! Hazard-increment estimates at one kernel location s: for each distinct
//! relative event time v of the group, the local-linear intercept estimates
//! the conditional hazard increment dL(v|s) and the slope its derivative
//! in s, dL*(v|s). The slope divides by the kernel-weighted spread of the
//! at-risk design, which collapses when the risk set thins out near the end
//! of follow-up and would otherwise inject unbounded noise; events whose
//! at-risk kernel mass falls below min_mass or whose spread falls below
//! eps_c therefore keep the plain occurrence/exposure intercept but
//! contribute zero slope, and are counted in skipped. Events with no kernel
//! mass at risk at all contribute zero to both.
struct PointFit {
  std::vector<double> event_times;
  std::vector<double> d_lambda;
  std::vector<double> d_lambda_star;
  std::size_t skipped = 0;
};

PointFit local_linear_fit(const GroupPanel& panel, double s, double bandwidth,
                          const LocalFitConfig& cfg = {});

}  // namespace casekin
