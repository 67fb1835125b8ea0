#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "casekin/kaplan_meier.hpp"
#include "casekin/surfaces.hpp"
#include "casekin/types.hpp"

namespace casekin {

class DegenerateDependence : public Error { public: using Error::Error; };

//! Weight curve psi(u | s) over u_grid at one s-grid column:
//!   psi(u|s) = (S0(u|s) - S1(u|s)) S0(u|s) / integral of (S0 - S1)^2 du.
//! Throws DegenerateDependence when the normalizing integral falls below
//! eps_den, i.e. the two conditional curves carry no contrast at s.
std::vector<double> psi_hat(const ConditionalSurfaces& surf, std::size_t s_index,
                            double eps_den = 1e-8);

//! Proband-scale hazard at one s-grid column: the psi-weighted integral
//!   lambda(s) = -integral of psi(u|s) * d/ds cumhaz0(u|s) du.
double hazard_hat(const ConditionalSurfaces& surf, std::size_t s_index, double eps_den = 1e-8);

//! Marginal curves assembled from fitted (or exactly known) surfaces.
//! hazard_s holds lambda at each s-grid point before any monotone repair;
//! Lambda/S live on t_grid after mapping back through the time transform.
struct MarginalCore {
  Grid t_grid;
  std::vector<double> hazard_s;
  std::vector<double> cum_hazard;  // nondecreasing, cum_hazard[0] = 0 when t_grid starts at 0
  std::vector<double> survival;
  double psi_denominator_min = 0.0;
  double negative_hazard_fraction = 0.0;
};

MarginalCore marginal_from_surfaces(const ConditionalSurfaces& surf, const Grid& t_grid,
                                    double eps_den = 1e-8);

struct BoundsDiagnostics {
  double active_fraction = 0.0;   // share of t where the clamp binds
  std::size_t crossings = 0;      // t where the case curve exceeded the control curve
  std::size_t violations = 0;     // post-hoc ordered-bounds failures; must stay 0
};

//! Clamps the survival curve between the case-relatives and
//! control-relatives product-limit curves; at t where the bounds cross,
//! their midpoint is used. Crossings are reported, not fatal.
std::vector<double> apply_km_bounds(std::span<const double> survival, const Grid& t_grid,
                                    const StepSurvival& km_case, const StepSurvival& km_control,
                                    BoundsDiagnostics* diag = nullptr);

struct EstimateConfig {
  std::size_t s_points = 101;
  std::size_t u_points = 200;
  std::size_t t_points = 101;
  std::optional<Grid> s_grid;  // overrides s_points when set
  std::optional<Grid> u_grid;
  std::optional<Grid> t_grid;
  double eps_den = 1e-8;
  LocalFitConfig fit;
};

struct MarginalEstimate {
  Grid t_grid;
  std::vector<double> cum_hazard;
  std::vector<double> survival;          // exp(-cum_hazard)
  std::vector<double> survival_bounded;  // after the product-limit clamp
  double bandwidth = 0.0;
  double psi_denominator_min = 0.0;
  double negative_hazard_fraction = 0.0;
  BoundsDiagnostics bounds;
};

//! Full pipeline on one dataset: time transform, conditional surfaces at the
//! given bandwidth, psi-weighted hazard, cumulative hazard mapped back to the
//! proband scale, and the product-limit clamp.
MarginalEstimate estimate_marginal(const Dataset& ds, double bandwidth,
                                   const EstimateConfig& cfg = {});

}  // namespace casekin
