#include "casekin/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "casekin/parallel.hpp"

namespace casekin {

double TimeTransform::forward(double t) const {
  return std::clamp(interp_linear(knots, cdf, t), 0.0, 1.0);
}

double TimeTransform::inverse(double sbar) const {
  return interp_linear(cdf, knots, std::clamp(sbar, 0.0, 1.0));
}

TimeTransform build_time_transform(const Dataset& ds) {
  if (ds.families.empty()) {
    throw EmptyDataset("time transform needs at least one family");
  }
  // Each proband is weighted by the number of relatives it contributes,
  // with a floor of one so childless families still anchor the scale.
  std::vector<std::pair<double, double>> weighted;
  weighted.reserve(ds.families.size());
  double total = 0.0;
  for (const auto& fam : ds.families) {
    const double w = static_cast<double>(std::max<std::size_t>(fam.relatives.size(), 1));
    weighted.emplace_back(fam.proband.time, w);
    total += w;
  }
  std::sort(weighted.begin(), weighted.end());
  if (weighted.front().first == weighted.back().first) {
    throw DegenerateTimes("all proband times are identical; no usable time scale");
  }

  TimeTransform tf;
  if (weighted.front().first > 0.0) {
    tf.knots.push_back(0.0);
    tf.cdf.push_back(0.0);
  }
  double acc = 0.0;
  std::size_t i = 0;
  while (i < weighted.size()) {
    const double t = weighted[i].first;
    for (; i < weighted.size() && weighted[i].first == t; ++i) {
      acc += weighted[i].second;
    }
    tf.knots.push_back(t);
    tf.cdf.push_back(acc / total);
  }
  tf.cdf.back() = 1.0;  // guard against accumulated rounding
  return tf;
}

std::vector<double> ConditionalSurfaces::survival_column(int q, double sbar) const {
  const std::vector<double>& m = (q == 1) ? surv1 : surv0;
  const double s = std::clamp(sbar, s_grid.front(), s_grid.back());
  const auto& pts = s_grid.points();
  auto it = std::upper_bound(pts.begin(), pts.end(), s);
  std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - pts.begin()), pts.size() - 1);
  if (hi == 0) {
    hi = 1;
  }
  const std::size_t lo = hi - 1;
  const double w = (s - pts[lo]) / (pts[hi] - pts[lo]);
  std::vector<double> column(u_grid.size());
  for (std::size_t iu = 0; iu < u_grid.size(); ++iu) {
    column[iu] = (1.0 - w) * at(m, iu, lo) + w * at(m, iu, hi);
  }
  return column;
}

namespace {

//! Accumulates event-time increments into a step function sampled on grid.
//! out[iu] = sum of increments at event times <= grid[iu].
void accumulate_on_grid(const std::vector<double>& event_times, const std::vector<double>& inc,
                        const Grid& grid, std::vector<double>& out) {
  double running = 0.0;
  std::size_t e = 0;
  for (std::size_t iu = 0; iu < grid.size(); ++iu) {
    const double u = grid[iu];
    while (e < event_times.size() && event_times[e] <= u) {
      running += inc[e];
      ++e;
    }
    out[iu] = running;
  }
}

}  // namespace

ConditionalSurfaces build_conditional_surfaces(const Dataset& ds, double bandwidth,
                                               const Grid& s_grid, const Grid& u_grid,
                                               const LocalFitConfig& cfg) {
  if (!(bandwidth > 0.0) || bandwidth > 1.0) {
    throw Error("surface bandwidth must lie in (0, 1]");
  }

  ConditionalSurfaces surf;
  surf.s_grid = s_grid;
  surf.u_grid = u_grid;
  surf.transform = build_time_transform(ds);
  surf.bandwidth = bandwidth;

  std::vector<double> proband_pos(ds.families.size());
  for (std::size_t i = 0; i < ds.families.size(); ++i) {
    proband_pos[i] = surf.transform.forward(ds.families[i].proband.time);
  }
  const GroupPanel panels[2] = {build_group_panel(ds, 0, proband_pos),
                                build_group_panel(ds, 1, proband_pos)};

  const std::size_t nu = u_grid.size();
  const std::size_t ns = s_grid.size();
  surf.surv0.assign(nu * ns, 1.0);
  surf.surv1.assign(nu * ns, 1.0);
  surf.cumhaz0.assign(nu * ns, 0.0);
  surf.cumhaz1.assign(nu * ns, 0.0);
  surf.cumhaz0_deriv.assign(nu * ns, 0.0);

  std::vector<std::size_t> skipped[2];
  skipped[0].assign(ns, 0);
  skipped[1].assign(ns, 0);

  parallel_for(ns, [&](std::size_t is) {
    std::vector<double> column(nu);
    for (int q = 0; q < 2; ++q) {
      const PointFit fit = local_linear_fit(panels[q], s_grid[is], bandwidth, cfg);
      skipped[q][is] = fit.skipped;

      std::vector<double>& cumhaz = (q == 1) ? surf.cumhaz1 : surf.cumhaz0;
      std::vector<double>& surv = (q == 1) ? surf.surv1 : surf.surv0;
      accumulate_on_grid(fit.event_times, fit.d_lambda, u_grid, column);
      double running_max = 0.0;  // floors at zero and enforces monotonicity in u
      for (std::size_t iu = 0; iu < nu; ++iu) {
        running_max = std::max(running_max, column[iu]);
        cumhaz[surf.index(iu, is)] = running_max;
        surv[surf.index(iu, is)] = std::exp(-running_max);
      }
      if (q == 0) {
        accumulate_on_grid(fit.event_times, fit.d_lambda_star, u_grid, column);
        for (std::size_t iu = 0; iu < nu; ++iu) {
          surf.cumhaz0_deriv[surf.index(iu, is)] = column[iu];
        }
      }
    }
  });

  for (int q = 0; q < 2; ++q) {
    const std::size_t n_events = panels[q].distinct_event_times.size();
    const std::size_t total_skipped = std::accumulate(skipped[q].begin(), skipped[q].end(),
                                                      static_cast<std::size_t>(0));
    if (q == 0) {
      surf.skipped0 = total_skipped;
    } else {
      surf.skipped1 = total_skipped;
    }
    if (n_events > 0 && total_skipped == n_events * ns) {
      throw InsufficientData("every group-" + std::to_string(q) +
                             " event was skipped at every kernel location; bandwidth " +
                             std::to_string(bandwidth) + " leaves no usable signal");
    }
  }
  return surf;
}

}  // namespace casekin
