#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "casekin/marginal.hpp"
#include "casekin/types.hpp"

namespace casekin {

class SelectionFailed : public Error { public: using Error::Error; };
class CiFailed : public Error { public: using Error::Error; };

//! Sample quantile, linear interpolation of order statistics (the common
//! "type 7" convention): at probability p the value with rank (n-1)p.
double quantile_type7(std::vector<double> values, double p);

//! Synthetic copy of ds for bandwidth selection: probands are kept as-is and
//! each family's relatives are replaced by draws from the fitted conditional
//! survival column at the family's proband position, censored by independent
//! draws from censor_km (step-function inversion; survival mass beyond the
//! largest observed relative time becomes censoring there).
Dataset bootstrap_dataset(const Dataset& ds, const ConditionalSurfaces& surf,
                          const StepSurvival& censor_km, std::uint64_t seed);

struct BandwidthConfig {
  std::vector<double> stage1 = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double stage2_offset = 0.05;
  int b_inner = 30;
  double pilot = 0.5;  // bandwidth of the surfaces the replicates are drawn from
  std::uint64_t rng_seed = 0;
};

struct ImseDetail {
  double imse = 0.0;
  Grid t_grid;
  std::vector<double> point_estimate;                 // S(t; h) on the original data
  std::vector<std::vector<double>> replication_curves;
  std::vector<double> mean_curve;
  std::vector<double> mse_curve;  // (mean - point)^2 + sample variance, per t
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
};

//! Estimated integrated mean squared error of the survival curve at
//! bandwidth h: bootstrap replicates are drawn from pilot-bandwidth
//! surfaces, re-estimated at h, and squared-bias-plus-variance is
//! integrated over t_grid. Replication failures count as missing; fewer
//! than half surviving raises SelectionFailed.
double imse_est(const Dataset& ds, double h, const BandwidthConfig& bw,
                const EstimateConfig& est_cfg = {});
ImseDetail imse_est_detail(const Dataset& ds, double h, const BandwidthConfig& bw,
                           const EstimateConfig& est_cfg = {});

struct SelectionDetail {
  double bandwidth = 0.0;
  std::vector<std::pair<double, double>> stage1;  // (candidate, imse); failures = +inf
  std::vector<std::pair<double, double>> stage2;
};

//! Two-stage grid search minimizing imse_est: a coarse pass over stage1,
//! then a refinement over {h1 - offset, h1, min(h1 + offset, 1)}. The same
//! inner replicates are reused for every candidate, so ties are exact and
//! break toward the smaller bandwidth.
double select_bandwidth(const Dataset& ds, const BandwidthConfig& bw,
                        const EstimateConfig& est_cfg = {});
SelectionDetail select_bandwidth_detail(const Dataset& ds, const BandwidthConfig& bw,
                                        const EstimateConfig& est_cfg = {});

struct CiConfig {
  int b_outer = 100;
  double level = 0.95;
  std::uint64_t rng_seed = 0;
  bool reselect_bandwidth = false;  // rerun selection inside each replicate
  BandwidthConfig selection;        // used only when reselect_bandwidth is set
};

struct CiBands {
  Grid t_grid;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t bounds_crossings = 0;   // total across replicates
  std::size_t bounds_violations = 0;  // post-clamp failures; must stay 0
};

//! Pointwise percentile bootstrap band for the bounded survival curve:
//! families are resampled with replacement within their case/control
//! strata, the full pipeline is re-run at bandwidth h, and pointwise
//! type-7 quantiles at (1 -/+ level)/2 form the band. Fewer than 80% of
//! replicates succeeding raises CiFailed.
CiBands percentile_ci(const Dataset& ds, double h, const CiConfig& ci,
                      const EstimateConfig& est_cfg = {});

}  // namespace casekin
