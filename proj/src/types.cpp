#include "casekin/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace casekin {

Dataset make_dataset(std::vector<FamilyRecord> families) {
  Dataset ds;
  ds.families = std::move(families);
  for (const auto& fam : ds.families) {
    if (fam.proband_group == 1) {
      ++ds.n1;
    } else {
      ++ds.n0;
    }
    ds.tau0 = std::max(ds.tau0, fam.proband.time);
    for (const auto& rel : fam.relatives) {
      ds.tau = std::max(ds.tau, rel.time);
    }
  }
  return ds;
}

Dataset validate_dataset(const std::vector<RawRecord>& rows) {
  if (rows.empty()) {
    throw EmptyDataset("dataset has no rows");
  }

  // Stable sort on family_id only keeps the original row order inside a family.
  std::vector<const RawRecord*> ordered;
  ordered.reserve(rows.size());
  for (const auto& row : rows) {
    ordered.push_back(&row);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RawRecord* a, const RawRecord* b) { return a->family_id < b->family_id; });

  std::vector<FamilyRecord> families;
  for (const RawRecord* row : ordered) {
    if (!(row->time >= 0.0) || !std::isfinite(row->time)) {
      throw NegativeTime("family " + row->family_id + ": time must be finite and >= 0");
    }
    if (row->status != 0 && row->status != 1) {
      throw Error("family " + row->family_id + ": status must be 0 or 1");
    }
    if (families.empty() || families.back().family_id != row->family_id) {
      families.push_back(FamilyRecord{row->family_id, {}, 0, {}});
      families.back().proband.status = -1;  // marks "not seen yet"
    }
    FamilyRecord& fam = families.back();
    if (row->role == 'P') {
      if (fam.proband.status != -1) {
        throw DuplicateProband("family " + row->family_id + " has more than one proband row");
      }
      fam.proband = Observation{row->time, row->status};
    } else if (row->role == 'R') {
      fam.relatives.push_back(Observation{row->time, row->status});
    } else {
      throw Error("family " + row->family_id + ": role must be P or R");
    }
  }

  for (auto& fam : families) {
    if (fam.proband.status == -1) {
      throw MissingProband("family " + fam.family_id + " has no proband row");
    }
    fam.proband_group = fam.proband.status;
  }

  Dataset ds = make_dataset(std::move(families));
  if (ds.n0 == 0 || ds.n1 == 0) {
    throw EmptyDataset("need at least one case family and one control family (n1=" +
                       std::to_string(ds.n1) + ", n0=" + std::to_string(ds.n0) + ")");
  }
  return ds;
}

StepSurvival::StepSurvival(std::vector<double> jump_times, std::vector<double> values)
    : jump_times_(std::move(jump_times)), values_(std::move(values)) {
  if (jump_times_.size() != values_.size()) {
    throw Error("step function: jump_times and values must have equal length");
  }
  double prev_t = -1.0;
  double prev_v = 1.0;
  for (std::size_t i = 0; i < jump_times_.size(); ++i) {
    if (!(jump_times_[i] > prev_t)) {
      throw Error("step function: jump times must be strictly increasing");
    }
    if (values_[i] > prev_v + 1e-12 || values_[i] < -1e-12) {
      throw Error("step function: values must be nonincreasing within [0, 1]");
    }
    prev_t = jump_times_[i];
    prev_v = values_[i];
  }
}

double StepSurvival::operator()(double t) const {
  // Last jump at or before t; 1 before the first jump.
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) {
    return 1.0;
  }
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw Error("grid needs at least two points");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) {
      throw Error("grid points must be strictly increasing");
    }
  }
  step_ = points_[1] - points_[0];
  uniform_ = true;
  for (std::size_t i = 1; i + 1 < points_.size(); ++i) {
    if (std::abs((points_[i + 1] - points_[i]) - step_) > 1e-9 * std::max(1.0, std::abs(step_))) {
      uniform_ = false;
      step_ = 0.0;
      break;
    }
  }
}

Grid Grid::uniform(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) {
    throw Error("uniform grid needs n >= 2 and hi > lo");
  }
  std::vector<double> pts(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = lo + h * static_cast<double>(i);
  }
  pts.back() = hi;  // exact endpoint
  return Grid(std::move(pts));
}

double Grid::trapz(std::span<const double> f) const {
  if (f.size() != points_.size()) {
    throw Error("trapz: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    acc += 0.5 * (f[i] + f[i - 1]) * (points_[i] - points_[i - 1]);
  }
  return acc;
}

std::vector<double> Grid::cumtrapz(std::span<const double> f) const {
  if (f.size() != points_.size()) {
    throw Error("cumtrapz: length mismatch");
  }
  std::vector<double> out(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (f[i] + f[i - 1]) * (points_[i] - points_[i - 1]);
  }
  return out;
}

double interp_linear(std::span<const double> x, std::span<const double> y, double at) {
  if (x.empty() || x.size() != y.size()) {
    throw Error("interp_linear: bad input lengths");
  }
  if (at <= x.front()) {
    return y.front();
  }
  if (at >= x.back()) {
    return y.back();
  }
  auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double dx = x[hi] - x[lo];
  if (dx <= 0.0) {
    return y[lo];
  }
  const double w = (at - x[lo]) / dx;
  return (1.0 - w) * y[lo] + w * y[hi];
}

}  // namespace casekin
