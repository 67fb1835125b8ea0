#include "casekin/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace casekin {

double triweight(double u) {
  if (u <= -1.0 || u >= 1.0) {
    return 0.0;
  }
  const double w = 1.0 - u * u;
  return (35.0 / 32.0) * w * w * w;
}

double kernel_moment(int k, double omega) {
  if (k < 0) {
    throw Error("kernel_moment: order must be >= 0");
  }
  const double w = std::clamp(omega, -1.0, 1.0);
  // (1 - r^2)^3 = 1 - 3 r^2 + 3 r^4 - r^6, integrated against r^k termwise.
  static constexpr double coef[4] = {1.0, -3.0, 3.0, -1.0};
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    const int p = k + 2 * j + 1;
    const double at_lower = (p % 2 == 0) ? 1.0 : -1.0;  // (-1)^p
    acc += coef[j] * (std::pow(w, p) - at_lower) / static_cast<double>(p);
  }
  return (35.0 / 32.0) * acc;
}

GroupPanel build_group_panel(const Dataset& ds, int q, const std::vector<double>& proband_pos) {
  if (proband_pos.size() != ds.families.size()) {
    throw Error("group panel: one transformed proband time per family required");
  }
  GroupPanel panel;
  for (std::size_t i = 0; i < ds.families.size(); ++i) {
    const auto& fam = ds.families[i];
    if (fam.proband_group != q) {
      continue;
    }
    PanelFamily pf;
    pf.x = proband_pos[i];
    pf.rel_times.reserve(fam.relatives.size());
    for (const auto& rel : fam.relatives) {
      pf.rel_times.push_back(rel.time);
      if (rel.status == 1 && rel.time > 0.0) {
        pf.event_times.push_back(rel.time);
      }
    }
    std::sort(pf.rel_times.begin(), pf.rel_times.end());
    std::sort(pf.event_times.begin(), pf.event_times.end());
    panel.families.push_back(std::move(pf));
  }
  std::sort(panel.families.begin(), panel.families.end(),
            [](const PanelFamily& a, const PanelFamily& b) { return a.x < b.x; });
  panel.positions.reserve(panel.families.size());
  for (const auto& fam : panel.families) {
    panel.positions.push_back(fam.x);
    panel.distinct_event_times.insert(panel.distinct_event_times.end(), fam.event_times.begin(),
                                      fam.event_times.end());
  }
  std::sort(panel.distinct_event_times.begin(), panel.distinct_event_times.end());
  panel.distinct_event_times.erase(
      std::unique(panel.distinct_event_times.begin(), panel.distinct_event_times.end()),
      panel.distinct_event_times.end());
  return panel;
}

namespace {

struct RelEntry {
  double time;
  double k;
  double xi;
};

struct EventEntry {
  double time;
  double k;
  double xi;
};

}  // namespace

PointFit local_linear_fit(const GroupPanel& panel, double s, double bandwidth,
                          const LocalFitConfig& cfg) {
  if (!(bandwidth > 0.0)) {
    throw Error("local fit: bandwidth must be positive");
  }
  PointFit out;
  out.event_times = panel.distinct_event_times;
  out.d_lambda.assign(out.event_times.size(), 0.0);
  out.d_lambda_star.assign(out.event_times.size(), 0.0);
  if (out.event_times.empty()) {
    return out;
  }

  // Families with positive kernel weight at s.
  const auto lo = std::lower_bound(panel.positions.begin(), panel.positions.end(), s - bandwidth);
  const auto hi = std::upper_bound(panel.positions.begin(), panel.positions.end(), s + bandwidth);
  std::vector<RelEntry> rels;
  std::vector<EventEntry> occurrences;
  for (auto it = lo; it != hi; ++it) {
    const auto& fam = panel.families[static_cast<std::size_t>(it - panel.positions.begin())];
    const double xi = fam.x - s;
    const double k = triweight(xi / bandwidth);
    if (k <= 0.0) {
      continue;
    }
    for (double t : fam.rel_times) {
      rels.push_back(RelEntry{t, k, xi});
    }
    for (double t : fam.event_times) {
      occurrences.push_back(EventEntry{t, k, xi});
    }
  }
  std::sort(rels.begin(), rels.end(),
            [](const RelEntry& a, const RelEntry& b) { return a.time < b.time; });
  std::sort(occurrences.begin(), occurrences.end(),
            [](const EventEntry& a, const EventEntry& b) { return a.time < b.time; });

  // Risk-set sums over relatives still at risk: a0 = sum K, a1 = sum K*xi,
  // a2 = sum K*xi^2, each relative weighted by its family's kernel value.
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  std::size_t head = 0;
  const auto refresh = [&]() {
    a0 = a1 = a2 = 0.0;
    for (std::size_t j = head; j < rels.size(); ++j) {
      a0 += rels[j].k;
      a1 += rels[j].k * rels[j].xi;
      a2 += rels[j].k * rels[j].xi * rels[j].xi;
    }
  };
  refresh();
  std::size_t removals_since_refresh = 0;

  std::size_t occ = 0;
  for (std::size_t e = 0; e < out.event_times.size(); ++e) {
    const double v = out.event_times[e];
    // Drop relatives observed strictly before v; ties stay at risk for v.
    while (head < rels.size() && rels[head].time < v) {
      a0 -= rels[head].k;
      a1 -= rels[head].k * rels[head].xi;
      a2 -= rels[head].k * rels[head].xi * rels[head].xi;
      ++head;
      if (++removals_since_refresh >= 4096) {
        // Rebuild the running sums to keep incremental cancellation in check.
        refresh();
        removals_since_refresh = 0;
      }
    }

    double ev_k = 0.0, ev_kx = 0.0;
    while (occ < occurrences.size() && occurrences[occ].time < v) {
      ++occ;
    }
    while (occ < occurrences.size() && occurrences[occ].time == v) {
      ev_k += occurrences[occ].k;
      ev_kx += occurrences[occ].k * occurrences[occ].xi;
      ++occ;
    }

    if (!(a0 > 0.0)) {
      ++out.skipped;
      continue;
    }
    const double xi_bar = a1 / a0;
    const double spread = a2 - a1 * a1 / a0;
    if (a0 < cfg.min_mass || spread < cfg.eps_c) {
      // Slope is unidentifiable or dominated by a handful of survivors; keep
      // the locally weighted occurrence/exposure ratio so thin risk sets
      // still yield the plain hazard increment.
      out.d_lambda[e] = ev_k / a0;
      ++out.skipped;
      continue;
    }
    const double slope = (ev_kx - xi_bar * ev_k) / spread;
    out.d_lambda_star[e] = slope;
    out.d_lambda[e] = ev_k / a0 - slope * xi_bar;
  }
  return out;
}

}  // namespace casekin
