#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "casekin/rng.hpp"
#include "casekin/surfaces.hpp"
#include "casekin/types.hpp"

namespace casekin {

class PoolExhausted : public Error { public: using Error::Error; };
class NoRoot : public Error { public: using Error::Error; };

enum class FrailtyKind { gamma, positive_stable };

//! Age-scale Weibull hazard nu * (mu t)^(shape-1) shared by every subject,
//! multiplied per family by the frailty draw.
struct WeibullBaseline {
  double shape = 4.6;
  double rate = 0.01;   // mu
  double level = 1.0;   // nu, set by calibration

  double hazard(double t) const;
  double cum_hazard(double t) const;
  double inv_cum_hazard(double x) const;
};

//! Shared-frailty family model with all its closed forms. Within a family
//! the proband and relatives are conditionally independent given one
//! frailty draw; u is the relative age, t the proband age.
struct FrailtyModel {
  FrailtyKind kind = FrailtyKind::gamma;
  double kendall_tau = 0.5;
  double dependence = 2.0;  // theta (gamma) or alpha (positive stable)
  WeibullBaseline baseline;
  double end_of_study = 110.0;
  double censor_lo = 0.0;  // interim censoring uniform on [censor_lo, end_of_study]

  static FrailtyModel make(FrailtyKind kind, double tau);

  double marginal_survival(double t) const;
  double marginal_cum_hazard(double t) const;
  double marginal_hazard(double t) const;

  double cond_surv0(double u, double t) const;          // pr(T_R > u | T_P > t)
  double cond_surv1(double u, double t) const;          // pr(T_R > u | T_P = t)
  double cond_cumhaz0(double u, double t) const;        // -log cond_surv0
  double cond_cumhaz0_deriv(double u, double t) const;  // d/dt cond_cumhaz0
  double cond_hazard0(double u, double t) const;        // d/du cond_cumhaz0
};

//! Gamma dependence: theta = 2 tau / (1 - tau).
double kendall_to_gamma_theta(double tau);
//! Positive-stable dependence: alpha = 1 - tau.
double kendall_to_stable_alpha(double tau);

//! One mean-one frailty draw: Gamma(1/theta, theta), or Kanter's rejection-free
//! construction for the positive-stable law with transform exp(-s^alpha).
double draw_frailty(const FrailtyModel& model, Rng& rng);

//! Root-finds the baseline level nu so that the marginal event probability by
//! end_of_study equals target_rate, by bisection to |rate error| < tol.
double calibrate_level(const FrailtyModel& model, double target_rate, double tol = 1e-6);

//! Age where the marginal survival equals prob, by bisection on [0, end_of_study].
double solve_marginal_age(const FrailtyModel& model, double prob);

//! Interim-censoring lower endpoint reproducing the reference overall
//! relative censoring fractions (about 0.60 censored at a 0.60 event rate,
//! about 0.90 at 0.15); rates in between snap to the nearer preset.
double default_censor_lo(double target_event_rate);

struct SimConfig {
  FrailtyModel model;
  std::size_t n1 = 500;        // case families to collect
  std::size_t ratio = 1;       // control families per case family
  std::size_t relatives = 1;   // J, relatives per family
  double target_event_rate = 0.0;  // when > 0, calibrates baseline.level first
  std::uint64_t rng_seed = 0;
  std::size_t budget_factor = 2000;  // candidate families allowed per family needed
};

struct SimResult {
  Dataset data;
  FrailtyModel model;                     // with the calibrated level
  std::vector<double> marginal_ages;      // reference grid on [0, end_of_study]
  std::vector<double> marginal_survival;  // true S on that grid
};

//! Draws candidate families with per-family RNG streams derived from
//! (rng_seed, candidate index) and keeps the first n1 case and n1*ratio
//! control families in candidate order. Throws PoolExhausted when the
//! candidate budget runs out before both pools fill.
SimResult simulate_dataset(const SimConfig& cfg);

//! Censoring-free latent (proband, first relative) event-time pairs, for
//! dependence diagnostics such as empirical Kendall tau.
std::vector<std::pair<double, double>> latent_pairs(const FrailtyModel& model, std::size_t n,
                                                    std::uint64_t seed);

//! Kendall rank correlation via merge-sort inversion counting, O(n log n).
double kendall_tau(const std::vector<std::pair<double, double>>& pairs);

//! Exact conditional surfaces on the given lattice, with the proband scale
//! mapped linearly onto [0, 1] (s = t / end_of_study). Feeding these into
//! the marginal pipeline isolates pure quadrature error.
ConditionalSurfaces oracle_surfaces(const FrailtyModel& model, const Grid& s_grid,
                                    const Grid& u_grid);

}  // namespace casekin
