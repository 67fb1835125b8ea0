#include "casekin/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace casekin {

namespace {

//! psi column and its normalizing integral in one pass.
std::pair<std::vector<double>, double> psi_with_denominator(const ConditionalSurfaces& surf,
                                                            std::size_t s_index, double eps_den) {
  const std::size_t nu = surf.u_grid.size();
  std::vector<double> diff(nu);
  std::vector<double> psi(nu);
  for (std::size_t iu = 0; iu < nu; ++iu) {
    diff[iu] = surf.at(surf.surv0, iu, s_index) - surf.at(surf.surv1, iu, s_index);
    psi[iu] = diff[iu] * diff[iu];
  }
  const double den = surf.u_grid.trapz(psi);
  if (den < eps_den) {
    throw DegenerateDependence("conditional survival contrast vanishes at s = " +
                               std::to_string(surf.s_grid[s_index]) +
                               " (normalizer " + std::to_string(den) + ")");
  }
  for (std::size_t iu = 0; iu < nu; ++iu) {
    psi[iu] = diff[iu] * surf.at(surf.surv0, iu, s_index) / den;
  }
  return {std::move(psi), den};
}

}  // namespace

std::vector<double> psi_hat(const ConditionalSurfaces& surf, std::size_t s_index, double eps_den) {
  return psi_with_denominator(surf, s_index, eps_den).first;
}

double hazard_hat(const ConditionalSurfaces& surf, std::size_t s_index, double eps_den) {
  const auto [psi, den] = psi_with_denominator(surf, s_index, eps_den);
  const std::size_t nu = surf.u_grid.size();
  std::vector<double> integrand(nu);
  for (std::size_t iu = 0; iu < nu; ++iu) {
    integrand[iu] = psi[iu] * surf.at(surf.cumhaz0_deriv, iu, s_index);
  }
  return -surf.u_grid.trapz(integrand);
}

MarginalCore marginal_from_surfaces(const ConditionalSurfaces& surf, const Grid& t_grid,
                                    double eps_den) {
  MarginalCore core;
  core.t_grid = t_grid;

  const std::size_t ns = surf.s_grid.size();
  core.hazard_s.resize(ns);
  core.psi_denominator_min = std::numeric_limits<double>::infinity();
  std::size_t negative = 0;
  std::vector<double> integrand(surf.u_grid.size());
  for (std::size_t is = 0; is < ns; ++is) {
    const auto [psi, den] = psi_with_denominator(surf, is, eps_den);
    core.psi_denominator_min = std::min(core.psi_denominator_min, den);
    for (std::size_t iu = 0; iu < surf.u_grid.size(); ++iu) {
      integrand[iu] = psi[iu] * surf.at(surf.cumhaz0_deriv, iu, is);
    }
    core.hazard_s[is] = -surf.u_grid.trapz(integrand);
    negative += (core.hazard_s[is] < 0.0) ? 1 : 0;
  }
  core.negative_hazard_fraction = static_cast<double>(negative) / static_cast<double>(ns);

  // Cumulative hazard on the transformed scale, repaired to be nondecreasing
  // and nonnegative; negative hazard patches survive only in hazard_s.
  std::vector<double> cum_s = surf.s_grid.cumtrapz(core.hazard_s);
  double running_max = 0.0;
  for (double& v : cum_s) {
    running_max = std::max(running_max, v);
    v = running_max;
  }

  core.cum_hazard.resize(t_grid.size());
  core.survival.resize(t_grid.size());
  for (std::size_t it = 0; it < t_grid.size(); ++it) {
    const double sbar = surf.transform.forward(t_grid[it]);
    core.cum_hazard[it] = interp_linear(surf.s_grid.points(), cum_s, sbar);
    core.survival[it] = std::exp(-core.cum_hazard[it]);
  }
  return core;
}

std::vector<double> apply_km_bounds(std::span<const double> survival, const Grid& t_grid,
                                    const StepSurvival& km_case, const StepSurvival& km_control,
                                    BoundsDiagnostics* diag) {
  if (survival.size() != t_grid.size()) {
    throw Error("bounds clamp: curve and grid lengths differ");
  }
  std::vector<double> out(survival.size());
  std::size_t active = 0;
  std::size_t crossings = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < survival.size(); ++i) {
    const double lo = km_case(t_grid[i]);
    const double hi = km_control(t_grid[i]);
    if (lo > hi) {
      out[i] = 0.5 * (lo + hi);
      ++crossings;
      ++active;
      continue;
    }
    out[i] = std::clamp(survival[i], lo, hi);
    if (out[i] != survival[i]) {
      ++active;
    }
    if (out[i] < lo || out[i] > hi) {
      ++violations;
    }
  }
  if (diag != nullptr) {
    diag->active_fraction = survival.empty()
                                ? 0.0
                                : static_cast<double>(active) / static_cast<double>(survival.size());
    diag->crossings = crossings;
    diag->violations = violations;
  }
  return out;
}

MarginalEstimate estimate_marginal(const Dataset& ds, double bandwidth, const EstimateConfig& cfg) {
  if (!(bandwidth > 0.0) || bandwidth > 1.0) {
    throw Error("bandwidth must lie in (0, 1], got " + std::to_string(bandwidth));
  }
  if (ds.tau <= 0.0) {
    throw NoRelatives("no relative follow-up time in dataset");
  }

  const Grid s_grid = cfg.s_grid ? *cfg.s_grid : Grid::uniform(0.0, 1.0, cfg.s_points);
  const Grid u_grid = cfg.u_grid ? *cfg.u_grid : Grid::uniform(0.0, ds.tau, cfg.u_points);
  const Grid t_grid = cfg.t_grid ? *cfg.t_grid : Grid::uniform(0.0, ds.tau0, cfg.t_points);

  const ConditionalSurfaces surf = build_conditional_surfaces(ds, bandwidth, s_grid, u_grid, cfg.fit);
  MarginalCore core = marginal_from_surfaces(surf, t_grid, cfg.eps_den);

  const StepSurvival bound_case = km_relatives(ds, 1);
  const StepSurvival bound_control = km_relatives(ds, 0);

  MarginalEstimate est;
  est.t_grid = std::move(core.t_grid);
  est.cum_hazard = std::move(core.cum_hazard);
  est.survival = std::move(core.survival);
  est.bandwidth = bandwidth;
  est.psi_denominator_min = core.psi_denominator_min;
  est.negative_hazard_fraction = core.negative_hazard_fraction;
  est.survival_bounded =
      apply_km_bounds(est.survival, est.t_grid, bound_case, bound_control, &est.bounds);
  return est;
}

}  // namespace casekin
