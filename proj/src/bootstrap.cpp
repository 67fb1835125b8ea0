#include "casekin/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "casekin/kaplan_meier.hpp"
#include "casekin/parallel.hpp"
#include "casekin/rng.hpp"

namespace casekin {

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) {
    throw Error("quantile of an empty sample");
  }
  p = std::clamp(p, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  const double g = p * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(g);
  if (i + 1 >= values.size()) {
    return values.back();
  }
  const double frac = g - static_cast<double>(i);
  return (1.0 - frac) * values[i] + frac * values[i + 1];
}

namespace {

//! Inverse-transform draw from a nonincreasing survival curve sampled on a
//! grid: the first grid point where the curve drops to u or below. Returns
//! +inf when the curve keeps more than u mass everywhere (no event in range).
double invert_survival(const std::vector<double>& surv, const std::vector<double>& at, double u) {
  const auto it = std::partition_point(surv.begin(), surv.end(),
                                       [&](double s) { return s > u; });
  if (it == surv.end()) {
    return std::numeric_limits<double>::infinity();
  }
  return at[static_cast<std::size_t>(it - surv.begin())];
}

}  // namespace

Dataset bootstrap_dataset(const Dataset& ds, const ConditionalSurfaces& surf,
                          const StepSurvival& censor_km, std::uint64_t seed) {
  std::vector<FamilyRecord> families = ds.families;
  const double cap = ds.tau;  // residual censoring mass lands at the horizon
  for (std::size_t i = 0; i < families.size(); ++i) {
    FamilyRecord& fam = families[i];
    if (fam.relatives.empty()) {
      continue;
    }
    Rng rng = Rng::stream(seed, i);
    const double sbar = surf.transform.forward(fam.proband.time);
    const std::vector<double> column = surf.survival_column(fam.proband_group, sbar);
    for (auto& rel : fam.relatives) {
      const double event_time = invert_survival(column, surf.u_grid.points(), rng.uniform01());
      double censor_time = invert_survival(censor_km.values(), censor_km.jump_times(),
                                           rng.uniform01());
      censor_time = std::min(censor_time, cap);
      if (event_time <= censor_time) {
        rel = Observation{event_time, 1};
      } else {
        rel = Observation{censor_time, 0};
      }
    }
  }
  return make_dataset(std::move(families));
}

namespace {

//! Defaults frozen once per top-level call so every candidate bandwidth and
//! every replicate is scored on identical grids.
EstimateConfig frozen_config(const Dataset& ds, const EstimateConfig& cfg) {
  EstimateConfig out = cfg;
  if (!out.s_grid) {
    out.s_grid = Grid::uniform(0.0, 1.0, cfg.s_points);
  }
  if (!out.u_grid) {
    out.u_grid = Grid::uniform(0.0, ds.tau, cfg.u_points);
  }
  if (!out.t_grid) {
    out.t_grid = Grid::uniform(0.0, ds.tau0, cfg.t_points);
  }
  return out;
}

struct InnerWorld {
  std::vector<Dataset> replicates;
};

InnerWorld make_inner_world(const Dataset& ds, const BandwidthConfig& bw,
                            const EstimateConfig& est_cfg) {
  ConditionalSurfaces pilot;
  StepSurvival censor;
  try {
    pilot = build_conditional_surfaces(ds, bw.pilot, *est_cfg.s_grid, *est_cfg.u_grid,
                                       est_cfg.fit);
    censor = km_relatives_pooled(ds, /*flip_status=*/true);
  } catch (const Error& e) {
    throw SelectionFailed(std::string("pilot fit failed: ") + e.what());
  }
  InnerWorld world;
  world.replicates.resize(static_cast<std::size_t>(bw.b_inner));
  parallel_for(world.replicates.size(), [&](std::size_t b) {
    world.replicates[b] = bootstrap_dataset(ds, pilot, censor, derive_seed(bw.rng_seed, b));
  });
  return world;
}

ImseDetail imse_for_candidate(const Dataset& ds, const InnerWorld& world, double h,
                              const EstimateConfig& est_cfg) {
  ImseDetail detail;
  detail.t_grid = *est_cfg.t_grid;
  detail.attempted = world.replicates.size();
  detail.point_estimate = estimate_marginal(ds, h, est_cfg).survival;

  std::vector<std::vector<double>> curves(world.replicates.size());
  std::vector<char> ok(world.replicates.size(), 0);
  parallel_for(world.replicates.size(), [&](std::size_t b) {
    try {
      curves[b] = estimate_marginal(world.replicates[b], h, est_cfg).survival;
      ok[b] = 1;
    } catch (const Error&) {
      ok[b] = 0;
    }
  });
  for (std::size_t b = 0; b < curves.size(); ++b) {
    if (ok[b] != 0) {
      detail.replication_curves.push_back(std::move(curves[b]));
    }
  }
  detail.succeeded = detail.replication_curves.size();
  if (detail.succeeded * 2 < detail.attempted || detail.succeeded < 2) {
    throw SelectionFailed("only " + std::to_string(detail.succeeded) + " of " +
                          std::to_string(detail.attempted) +
                          " replicates usable at bandwidth " + std::to_string(h));
  }

  const std::size_t nt = detail.t_grid.size();
  detail.mean_curve.assign(nt, 0.0);
  detail.mse_curve.assign(nt, 0.0);
  for (const auto& curve : detail.replication_curves) {
    for (std::size_t i = 0; i < nt; ++i) {
      detail.mean_curve[i] += curve[i];
    }
  }
  const double nb = static_cast<double>(detail.succeeded);
  for (std::size_t i = 0; i < nt; ++i) {
    detail.mean_curve[i] /= nb;
  }
  for (std::size_t i = 0; i < nt; ++i) {
    double var = 0.0;
    for (const auto& curve : detail.replication_curves) {
      const double d = curve[i] - detail.mean_curve[i];
      var += d * d;
    }
    var /= nb - 1.0;
    const double bias = detail.mean_curve[i] - detail.point_estimate[i];
    detail.mse_curve[i] = bias * bias + var;
  }
  detail.imse = detail.t_grid.trapz(detail.mse_curve);
  return detail;
}

}  // namespace

ImseDetail imse_est_detail(const Dataset& ds, double h, const BandwidthConfig& bw,
                           const EstimateConfig& est_cfg) {
  const EstimateConfig cfg = frozen_config(ds, est_cfg);
  const InnerWorld world = make_inner_world(ds, bw, cfg);
  return imse_for_candidate(ds, world, h, cfg);
}

double imse_est(const Dataset& ds, double h, const BandwidthConfig& bw,
                const EstimateConfig& est_cfg) {
  return imse_est_detail(ds, h, bw, est_cfg).imse;
}

SelectionDetail select_bandwidth_detail(const Dataset& ds, const BandwidthConfig& bw,
                                        const EstimateConfig& est_cfg) {
  if (bw.stage1.empty()) {
    throw SelectionFailed("no candidate bandwidths");
  }
  const EstimateConfig cfg = frozen_config(ds, est_cfg);
  const InnerWorld world = make_inner_world(ds, bw, cfg);

  std::map<double, double> cache;
  const auto score = [&](double h) {
    if (const auto it = cache.find(h); it != cache.end()) {
      return it->second;
    }
    double value;
    try {
      value = imse_for_candidate(ds, world, h, cfg).imse;
    } catch (const Error&) {
      value = std::numeric_limits<double>::infinity();
    }
    cache.emplace(h, value);
    return value;
  };
  // Ascending scan with strict comparison: ties go to the smaller bandwidth.
  const auto best_of = [&](const std::vector<double>& candidates,
                           std::vector<std::pair<double, double>>& table) {
    double best_h = candidates.front();
    double best_v = std::numeric_limits<double>::infinity();
    for (double h : candidates) {
      const double v = score(h);
      table.emplace_back(h, v);
      if (v < best_v) {
        best_v = v;
        best_h = h;
      }
    }
    if (!std::isfinite(best_v)) {
      throw SelectionFailed("every candidate bandwidth failed");
    }
    return best_h;
  };

  SelectionDetail detail;
  std::vector<double> stage1 = bw.stage1;
  std::sort(stage1.begin(), stage1.end());
  const double h1 = best_of(stage1, detail.stage1);

  std::vector<double> stage2;
  for (double h : {h1 - bw.stage2_offset, h1, std::min(h1 + bw.stage2_offset, 1.0)}) {
    if (h > 0.0 && h <= 1.0 &&
        std::none_of(stage2.begin(), stage2.end(),
                     [&](double other) { return std::abs(other - h) < 1e-12; })) {
      stage2.push_back(h);
    }
  }
  std::sort(stage2.begin(), stage2.end());
  detail.bandwidth = best_of(stage2, detail.stage2);
  return detail;
}

double select_bandwidth(const Dataset& ds, const BandwidthConfig& bw,
                        const EstimateConfig& est_cfg) {
  return select_bandwidth_detail(ds, bw, est_cfg).bandwidth;
}

CiBands percentile_ci(const Dataset& ds, double h, const CiConfig& ci,
                      const EstimateConfig& est_cfg) {
  if (!(ci.level > 0.0) || !(ci.level < 1.0)) {
    throw Error("confidence level must lie in (0, 1)");
  }
  if (ci.b_outer < 2) {
    throw Error("need at least two outer replications");
  }
  const EstimateConfig cfg = frozen_config(ds, est_cfg);

  std::vector<std::size_t> case_idx;
  std::vector<std::size_t> control_idx;
  for (std::size_t i = 0; i < ds.families.size(); ++i) {
    (ds.families[i].proband_group == 1 ? case_idx : control_idx).push_back(i);
  }
  if (case_idx.empty() || control_idx.empty()) {
    throw EmptyDataset("stratified resampling needs both groups");
  }

  const auto nb = static_cast<std::size_t>(ci.b_outer);
  std::vector<std::vector<double>> curves(nb);
  std::vector<char> ok(nb, 0);
  std::vector<std::size_t> crossings(nb, 0);
  std::vector<std::size_t> violations(nb, 0);
  parallel_for(nb, [&](std::size_t b) {
    Rng rng = Rng::stream(ci.rng_seed, b);
    std::vector<FamilyRecord> fams;
    fams.reserve(ds.families.size());
    for (std::size_t k = 0; k < case_idx.size(); ++k) {
      fams.push_back(ds.families[case_idx[rng.below(case_idx.size())]]);
    }
    for (std::size_t k = 0; k < control_idx.size(); ++k) {
      fams.push_back(ds.families[control_idx[rng.below(control_idx.size())]]);
    }
    try {
      const Dataset resampled = make_dataset(std::move(fams));
      double hb = h;
      if (ci.reselect_bandwidth) {
        BandwidthConfig sel = ci.selection;
        sel.rng_seed = derive_seed(ci.rng_seed ^ 0x9e3779b97f4a7c15ULL, b);
        hb = select_bandwidth(resampled, sel, cfg);
      }
      const MarginalEstimate est = estimate_marginal(resampled, hb, cfg);
      curves[b] = est.survival_bounded;
      crossings[b] = est.bounds.crossings;
      violations[b] = est.bounds.violations;
      ok[b] = 1;
    } catch (const Error&) {
      ok[b] = 0;
    }
  });

  CiBands bands;
  bands.t_grid = *cfg.t_grid;
  bands.attempted = nb;
  std::vector<const std::vector<double>*> kept;
  for (std::size_t b = 0; b < nb; ++b) {
    if (ok[b] != 0) {
      kept.push_back(&curves[b]);
      bands.bounds_crossings += crossings[b];
      bands.bounds_violations += violations[b];
    }
  }
  bands.succeeded = kept.size();
  if (bands.succeeded * 5 < bands.attempted * 4) {
    throw CiFailed("only " + std::to_string(bands.succeeded) + " of " +
                   std::to_string(bands.attempted) + " resamples produced a curve");
  }

  const double alpha = 1.0 - ci.level;
  const std::size_t nt = bands.t_grid.size();
  bands.lower.resize(nt);
  bands.upper.resize(nt);
  std::vector<double> column(kept.size());
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t b = 0; b < kept.size(); ++b) {
      column[b] = (*kept[b])[i];
    }
    bands.lower[i] = quantile_type7(column, alpha / 2.0);
    bands.upper[i] = quantile_type7(column, 1.0 - alpha / 2.0);
  }
  return bands;
}

}  // namespace casekin
