#include "casekin/kaplan_meier.hpp"

#include <algorithm>
#include <vector>

namespace casekin {

StepSurvival km_estimate(std::span<const Observation> observations, bool flip_status) {
  if (observations.empty()) {
    throw EmptyInput("product-limit estimate needs at least one observation");
  }

  std::vector<Observation> obs(observations.begin(), observations.end());
  if (flip_status) {
    for (auto& o : obs) {
      o.status = 1 - o.status;
    }
  }
  std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    return a.time < b.time;
  });

  std::vector<double> jump_times;
  std::vector<double> values;
  double surv = 1.0;
  std::size_t i = 0;
  std::size_t at_risk = obs.size();
  while (i < obs.size()) {
    const double t = obs[i].time;
    std::size_t events = 0;
    std::size_t total = 0;
    for (; i < obs.size() && obs[i].time == t; ++i) {
      events += static_cast<std::size_t>(obs[i].status);
      ++total;
    }
    if (events > 0) {
      // Censored-at-t observations count toward the risk set here: events first.
      surv *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      jump_times.push_back(t);
      values.push_back(surv);
    }
    at_risk -= total;
  }
  return StepSurvival(std::move(jump_times), std::move(values));
}

namespace {

StepSurvival km_over_relatives(const Dataset& ds, int q, bool pooled, bool flip_status) {
  std::vector<Observation> obs;
  for (const auto& fam : ds.families) {
    if (!pooled && fam.proband_group != q) {
      continue;
    }
    obs.insert(obs.end(), fam.relatives.begin(), fam.relatives.end());
  }
  if (obs.empty()) {
    throw NoRelatives(pooled ? std::string("no relatives in dataset")
                             : "no relatives in group " + std::to_string(q));
  }
  return km_estimate(obs, flip_status);
}

}  // namespace

StepSurvival km_relatives(const Dataset& ds, int q, bool flip_status) {
  return km_over_relatives(ds, q, false, flip_status);
}

StepSurvival km_relatives_pooled(const Dataset& ds, bool flip_status) {
  return km_over_relatives(ds, 0, true, flip_status);
}

}  // namespace casekin
