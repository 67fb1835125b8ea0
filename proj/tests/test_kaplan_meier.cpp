#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "casekin/kaplan_meier.hpp"
#include "casekin/types.hpp"

using namespace casekin;

namespace {

// Textbook product-limit evaluation: S(t) = prod over event times v <= t of
// (1 - d(v)/n(v)) with n(v) counting every observation with time >= v, so
// subjects censored exactly at v are still at risk there.
double product_limit(const std::vector<Observation>& obs, double t, bool flip) {
  std::vector<double> event_times;
  for (const auto& o : obs) {
    const int status = flip ? 1 - o.status : o.status;
    if (status == 1) {
      event_times.push_back(o.time);
    }
  }
  double s = 1.0;
  std::vector<double> done;
  for (double v : event_times) {
    if (v > t) {
      continue;
    }
    bool seen = false;
    for (double w : done) {
      if (w == v) {
        seen = true;
        break;
      }
    }
    if (seen) {
      continue;
    }
    done.push_back(v);
    std::size_t at_risk = 0;
    std::size_t events = 0;
    for (const auto& o : obs) {
      if (o.time >= v) {
        ++at_risk;
      }
      const int status = flip ? 1 - o.status : o.status;
      if (o.time == v && status == 1) {
        ++events;
      }
    }
    s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
  }
  return s;
}

}  // namespace

TEST_CASE("product-limit curve on a worked three-subject example") {
  const std::vector<Observation> obs = {{1.0, 1}, {2.0, 0}, {3.0, 1}};
  const StepSurvival s = km_estimate(obs);

  REQUIRE(s.jump_times().size() == 2);  // jumps only at event times
  CHECK(s.jump_times()[0] == 1.0);
  CHECK(s.jump_times()[1] == 3.0);
  CHECK(s.values()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s.values()[1] == 0.0);

  CHECK(s(0.5) == 1.0);
  CHECK(s(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s(2.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s(3.0) == 0.0);
}

TEST_CASE("subjects censored at an event time stay in the risk set") {
  const std::vector<Observation> obs = {{1.0, 1}, {1.0, 0}, {2.0, 1}};
  const StepSurvival s = km_estimate(obs);
  REQUIRE(s.jump_times().size() == 2);
  // At v = 1 the risk set is all three subjects, one event: factor 2/3.
  CHECK(s(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // At v = 2 only the last subject remains: the curve drops to zero.
  CHECK(s(2.0) == 0.0);
}

TEST_CASE("curve without events stays at one") {
  const std::vector<Observation> obs = {{1.0, 0}, {2.0, 0}};
  const StepSurvival s = km_estimate(obs);
  CHECK(s.empty());
  CHECK(s(0.0) == 1.0);
  CHECK(s(5.0) == 1.0);
}

TEST_CASE("flipping the status estimates the censoring distribution") {
  const std::vector<Observation> obs = {{1.0, 1}, {2.0, 0}, {3.0, 1}};
  const StepSurvival s = km_estimate(obs, /*flip_status=*/true);
  // Censoring events: only at t = 2, with subjects {2, 3} at risk.
  REQUIRE(s.jump_times().size() == 1);
  CHECK(s.jump_times()[0] == 2.0);
  CHECK(s.values()[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("empty input is rejected") {
  CHECK_THROWS_AS(km_estimate({}), EmptyInput);
}

TEST_CASE("matches the textbook product limit on every small configuration") {
  // All ordered tuples of up to 5 observations drawn from 3 times x 2 statuses.
  const std::array<double, 3> times = {0.5, 1.0, 1.5};
  const std::array<int, 2> statuses = {0, 1};
  std::array<Observation, 6> menu;
  std::size_t m = 0;
  for (double t : times) {
    for (int st : statuses) {
      menu[m++] = Observation{t, st};
    }
  }
  const std::vector<double> eval_at = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0};

  std::size_t checked = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<std::size_t> pick(n, 0);
    for (;;) {
      std::vector<Observation> obs;
      obs.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        obs.push_back(menu[pick[i]]);
      }
      const StepSurvival s = km_estimate(obs);
      for (double t : eval_at) {
        worst = std::max(worst, std::abs(s(t) - product_limit(obs, t, false)));
      }
      const StepSurvival sf = km_estimate(obs, true);
      for (double t : eval_at) {
        worst = std::max(worst, std::abs(sf(t) - product_limit(obs, t, true)));
      }
      ++checked;

      std::size_t k = 0;
      while (k < n && pick[k] == menu.size() - 1) {
        pick[k++] = 0;
      }
      if (k == n) {
        break;
      }
      ++pick[k];
    }
  }
  CHECK(checked == 6u + 36u + 216u + 1296u + 7776u);
  CHECK(worst <= 1e-12);
}

TEST_CASE("relative curves can be pooled or split by proband group") {
  std::vector<FamilyRecord> fams;
  fams.push_back(FamilyRecord{"a", Observation{50.0, 1}, 1, {Observation{1.0, 1}}});
  fams.push_back(FamilyRecord{"b", Observation{60.0, 0}, 0, {Observation{2.0, 1}}});
  fams.push_back(FamilyRecord{"c", Observation{55.0, 1}, 1, {Observation{3.0, 0}}});
  const Dataset ds = make_dataset(std::move(fams));

  const StepSurvival cases = km_relatives(ds, 1);
  REQUIRE(cases.jump_times().size() == 1);
  CHECK(cases.jump_times()[0] == 1.0);
  CHECK(cases.values()[0] == doctest::Approx(0.5).epsilon(1e-15));  // 2 at risk, 1 event

  const StepSurvival controls = km_relatives(ds, 0);
  REQUIRE(controls.jump_times().size() == 1);
  CHECK(controls.jump_times()[0] == 2.0);
  CHECK(controls.values()[0] == 0.0);  // single relative, event

  const StepSurvival pooled = km_relatives_pooled(ds);
  REQUIRE(pooled.jump_times().size() == 2);
  CHECK(pooled(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(pooled(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("groups without relatives are reported, not silently empty") {
  std::vector<FamilyRecord> fams;
  fams.push_back(FamilyRecord{"a", Observation{50.0, 1}, 1, {}});
  fams.push_back(FamilyRecord{"b", Observation{60.0, 0}, 0, {Observation{2.0, 1}}});
  const Dataset ds = make_dataset(std::move(fams));
  CHECK_THROWS_AS(km_relatives(ds, 1), NoRelatives);
  CHECK_NOTHROW(km_relatives(ds, 0));

  std::vector<FamilyRecord> none;
  none.push_back(FamilyRecord{"a", Observation{50.0, 1}, 1, {}});
  const Dataset empty_rel = make_dataset(std::move(none));
  CHECK_THROWS_AS(km_relatives_pooled(empty_rel), NoRelatives);
}
