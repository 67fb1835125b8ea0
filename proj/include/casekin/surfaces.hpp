#pragma once

#include <cstddef>
#include <vector>

#include "casekin/types.hpp"
#include "casekin/kernel.hpp"

namespace casekin {

class DegenerateTimes : public Error { public: using Error::Error; };
class InsufficientData : public Error { public: using Error::Error; };

//! Monotone map between the proband time axis and [0, 1]. forward() is the
//! relative-weighted empirical CDF of the proband observed times (each
//! proband counted once per relative, at least once), linearly interpolated
//! between knots and anchored at (0, 0); inverse() is its piecewise-linear
//! inverse. forward(max knot) = 1.
struct TimeTransform {
  std::vector<double> knots;  // 0 followed by the distinct proband times
  std::vector<double> cdf;    // matching forward values, ending at 1

  double forward(double t) const;
  double inverse(double sbar) const;
};

TimeTransform build_time_transform(const Dataset& ds);

//! Estimated conditional survival and hazard-derivative surfaces on a
//! (u, s) lattice: u is relative time on the original scale, s the proband
//! position on the transformed scale. Matrices are stored row-major with
//! u as the row index.
struct ConditionalSurfaces {
  Grid s_grid;  // on [0, 1]
  Grid u_grid;  // on [0, tau]
  std::vector<double> surv0, surv1;        // S_q(u | s), in (0, 1]
  std::vector<double> cumhaz0, cumhaz1;    // -log S_q, nondecreasing in u
  std::vector<double> cumhaz0_deriv;       // d/ds of the group-0 cumulative hazard
  TimeTransform transform;
  double bandwidth = 0.0;
  std::size_t skipped0 = 0, skipped1 = 0;  // degenerate local fits per group

  std::size_t index(std::size_t iu, std::size_t is) const { return iu * s_grid.size() + is; }
  double at(const std::vector<double>& m, std::size_t iu, std::size_t is) const {
    return m[index(iu, is)];
  }

  //! Survival column S_q(. | sbar) for arbitrary sbar, linear in s between
  //! grid columns. Used when resampling relatives given a proband position.
  std::vector<double> survival_column(int q, double sbar) const;
};

//! Fits local-linear hazard increments at every s-grid point for both
//! proband groups and accumulates them into surfaces on u_grid. Cumulative
//! hazards are floored at zero and made nondecreasing in u by running
//! maximum before exponentiation; the s-derivative surface is left as
//! fitted. Throws InsufficientData when every event in some group was
//! skipped at every s, so the group carries no signal at this bandwidth.
ConditionalSurfaces build_conditional_surfaces(const Dataset& ds, double bandwidth,
                                               const Grid& s_grid, const Grid& u_grid,
                                               const LocalFitConfig& cfg = {});

}  // namespace casekin
