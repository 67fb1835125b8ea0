#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "casekin/bootstrap.hpp"
#include "casekin/frailty.hpp"
#include "casekin/kaplan_meier.hpp"
#include "casekin/marginal.hpp"
#include "casekin/surfaces.hpp"
#include "casekin/types.hpp"

using namespace casekin;

namespace {

Dataset small_simulated(std::size_t n1, std::uint64_t seed) {
  SimConfig cfg;
  cfg.model = FrailtyModel::make(FrailtyKind::gamma, 0.5);
  cfg.model.censor_lo = default_censor_lo(0.6);
  cfg.target_event_rate = 0.6;
  cfg.n1 = n1;
  cfg.rng_seed = seed;
  return simulate_dataset(cfg).data;
}

EstimateConfig quick_grids() {
  EstimateConfig cfg;
  cfg.s_points = 41;
  cfg.u_points = 80;
  cfg.t_points = 41;
  return cfg;
}

}  // namespace

TEST_CASE("sample quantiles interpolate order statistics linearly") {
  std::vector<double> values;
  for (int k = 1; k <= 100; ++k) {
    values.push_back(0.01 * k);
  }
  std::shuffle(values.begin(), values.end(), std::mt19937(5));  // order must not matter

  CHECK(quantile_type7(values, 0.025) == doctest::Approx(0.03475).epsilon(1e-12));
  CHECK(quantile_type7(values, 0.975) == doctest::Approx(0.97525).epsilon(1e-12));
  CHECK(quantile_type7(values, 0.5) == doctest::Approx(0.505).epsilon(1e-12));
  CHECK(quantile_type7(values, 0.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(quantile_type7(values, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Probabilities are clamped, never extrapolated.
  CHECK(quantile_type7(values, -0.5) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(quantile_type7(values, 1.5) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK(quantile_type7({3.0}, 0.1) == 3.0);
  CHECK(quantile_type7({3.0}, 0.9) == 3.0);
  CHECK(quantile_type7({1.0, 2.0}, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(quantile_type7({}, 0.5), Error);
}

TEST_CASE("resampling from flat unit surfaces censors every relative") {
  std::vector<FamilyRecord> fams;
  fams.push_back(FamilyRecord{"a", Observation{20.0, 1}, 1,
                              {Observation{3.0, 1}, Observation{8.0, 0}}});
  fams.push_back(FamilyRecord{"b", Observation{40.0, 0}, 0, {Observation{6.0, 1}}});
  fams.push_back(FamilyRecord{"c", Observation{60.0, 1}, 1, {Observation{2.0, 0}}});
  const Dataset ds = make_dataset(std::move(fams));

  ConditionalSurfaces flat;
  flat.s_grid = Grid::uniform(0.0, 1.0, 2);
  flat.u_grid = Grid::uniform(0.0, ds.tau, 17);
  flat.surv0.assign(flat.u_grid.size() * 2, 1.0);
  flat.surv1.assign(flat.u_grid.size() * 2, 1.0);
  flat.transform = build_time_transform(ds);

  const StepSurvival censor({5.0, 10.0}, {0.6, 0.0});
  const Dataset synth = bootstrap_dataset(ds, flat, censor, 2024);

  REQUIRE(synth.size() == ds.size());
  for (std::size_t i = 0; i < synth.size(); ++i) {
    // Probands are carried over untouched; relatives are regenerated.
    CHECK(synth.families[i].proband.time == ds.families[i].proband.time);
    CHECK(synth.families[i].proband.status == ds.families[i].proband.status);
    REQUIRE(synth.families[i].relatives.size() == ds.families[i].relatives.size());
    for (const auto& rel : synth.families[i].relatives) {
      CHECK(rel.status == 0);  // no event mass anywhere in the surfaces
      CHECK(rel.time <= ds.tau);
      CHECK(rel.time > 0.0);
    }
  }
}

TEST_CASE("synthetic replicates are seed-deterministic") {
  const Dataset ds = small_simulated(40, 17);
  const ConditionalSurfaces pilot = build_conditional_surfaces(
      ds, 0.5, Grid::uniform(0.0, 1.0, 41), Grid::uniform(0.0, ds.tau, 80));
  const StepSurvival censor = km_relatives_pooled(ds, /*flip_status=*/true);

  const Dataset a = bootstrap_dataset(ds, pilot, censor, 7);
  const Dataset b = bootstrap_dataset(ds, pilot, censor, 7);
  const Dataset c = bootstrap_dataset(ds, pilot, censor, 8);

  bool same = true;
  bool differ = false;
  std::size_t events = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.families[i].relatives.size(); ++j) {
      const Observation& ra = a.families[i].relatives[j];
      const Observation& rb = b.families[i].relatives[j];
      const Observation& rc = c.families[i].relatives[j];
      same = same && ra.time == rb.time && ra.status == rb.status;
      differ = differ || ra.time != rc.time;
      events += ra.status;
    }
  }
  CHECK(same);
  CHECK(differ);
  CHECK(events > 0);  // real surfaces carry event mass
}

TEST_CASE("resampling risk decomposes into squared bias plus variance") {
  const Dataset ds = small_simulated(50, 3);
  BandwidthConfig bw;
  bw.b_inner = 8;
  bw.rng_seed = 11;
  const ImseDetail detail = imse_est_detail(ds, 0.8, bw, quick_grids());

  CHECK(detail.attempted == 8);
  REQUIRE(detail.succeeded >= 2);
  REQUIRE(detail.replication_curves.size() == detail.succeeded);
  const std::size_t nt = detail.t_grid.size();
  REQUIRE(detail.point_estimate.size() == nt);
  REQUIRE(detail.mean_curve.size() == nt);
  REQUIRE(detail.mse_curve.size() == nt);

  double worst = 0.0;
  std::vector<double> mse(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    double mean = 0.0;
    for (const auto& curve : detail.replication_curves) {
      mean += curve[i];
    }
    mean /= static_cast<double>(detail.succeeded);
    worst = std::max(worst, std::abs(mean - detail.mean_curve[i]));
    double var = 0.0;
    for (const auto& curve : detail.replication_curves) {
      var += (curve[i] - mean) * (curve[i] - mean);
    }
    var /= static_cast<double>(detail.succeeded) - 1.0;
    const double bias = mean - detail.point_estimate[i];
    mse[i] = bias * bias + var;
    worst = std::max(worst, std::abs(mse[i] - detail.mse_curve[i]));
  }
  CHECK(worst <= 1e-12);
  CHECK(detail.imse == doctest::Approx(detail.t_grid.trapz(mse)).epsilon(1e-12));
  CHECK(detail.imse >= 0.0);

  // The scalar wrapper reports the same value, bit for bit.
  CHECK(imse_est(ds, 0.8, bw, quick_grids()) == detail.imse);
}

TEST_CASE("bandwidth selection follows its two-stage risk tables") {
  const Dataset ds = small_simulated(50, 21);
  BandwidthConfig bw;
  bw.stage1 = {0.4, 0.7, 1.0};
  bw.b_inner = 8;
  bw.rng_seed = 13;
  const SelectionDetail detail = select_bandwidth_detail(ds, bw, quick_grids());

  REQUIRE(detail.stage1.size() == 3);
  // Reconstruct the decision: ascending scan, strict improvement, so exact
  // ties resolve to the smaller bandwidth.
  const auto argmin = [](const std::vector<std::pair<double, double>>& table) {
    double best_h = table.front().first;
    double best_v = std::numeric_limits<double>::infinity();
    for (const auto& [h, v] : table) {
      if (v < best_v) {
        best_v = v;
        best_h = h;
      }
    }
    return best_h;
  };
  const double h1 = argmin(detail.stage1);
  REQUIRE(!detail.stage2.empty());
  CHECK(detail.stage2.size() <= 3);
  for (const auto& [h, v] : detail.stage2) {
    CHECK(h >= h1 - 0.05 - 1e-12);
    CHECK(h <= std::min(h1 + 0.05, 1.0) + 1e-12);
    CHECK(h > 0.0);
    CHECK(h <= 1.0);
  }
  CHECK(detail.bandwidth == argmin(detail.stage2));

  // The refinement can never do worse than the coarse winner.
  double stage1_best = std::numeric_limits<double>::infinity();
  for (const auto& [h, v] : detail.stage1) {
    stage1_best = std::min(stage1_best, v);
  }
  double stage2_best = std::numeric_limits<double>::infinity();
  for (const auto& [h, v] : detail.stage2) {
    stage2_best = std::min(stage2_best, v);
  }
  CHECK(stage2_best <= stage1_best + 1e-15);

  // Same seed, same answer; the scalar wrapper agrees.
  const SelectionDetail again = select_bandwidth_detail(ds, bw, quick_grids());
  CHECK(again.bandwidth == detail.bandwidth);
  CHECK(again.stage1 == detail.stage1);
  CHECK(again.stage2 == detail.stage2);
  CHECK(select_bandwidth(ds, bw, quick_grids()) == detail.bandwidth);
}

TEST_CASE("selection failures are reported as such") {
  const Dataset ds = small_simulated(30, 2);
  BandwidthConfig empty;
  empty.stage1 = {};
  CHECK_THROWS_AS(select_bandwidth(ds, empty, quick_grids()), SelectionFailed);

  // A degenerate time scale breaks the pilot fit underneath the selector.
  std::vector<FamilyRecord> flat;
  flat.push_back(FamilyRecord{"a", Observation{50.0, 1}, 1, {Observation{3.0, 1}}});
  flat.push_back(FamilyRecord{"b", Observation{50.0, 0}, 0, {Observation{4.0, 1}}});
  const Dataset degenerate = make_dataset(std::move(flat));
  BandwidthConfig bw;
  bw.b_inner = 4;
  CHECK_THROWS_AS(imse_est(degenerate, 0.5, bw, quick_grids()), SelectionFailed);
}

TEST_CASE("percentile bands bracket a survival curve pointwise") {
  const Dataset ds = small_simulated(40, 29);
  CiConfig ci;
  ci.b_outer = 16;
  ci.level = 0.9;
  ci.rng_seed = 5;
  const CiBands bands = percentile_ci(ds, 0.8, ci, quick_grids());

  CHECK(bands.attempted == 16);
  CHECK(bands.succeeded * 5 >= bands.attempted * 4);
  CHECK(bands.bounds_violations == 0);
  REQUIRE(bands.lower.size() == bands.t_grid.size());
  REQUIRE(bands.upper.size() == bands.t_grid.size());
  CHECK(bands.t_grid[0] == 0.0);
  CHECK(bands.t_grid.back() == doctest::Approx(ds.tau0).epsilon(1e-12));
  for (std::size_t i = 0; i < bands.t_grid.size(); ++i) {
    CHECK(bands.lower[i] <= bands.upper[i] + 1e-15);
    CHECK(bands.lower[i] >= 0.0);
    CHECK(bands.upper[i] <= 1.0);
  }
  CHECK(bands.lower[0] == 1.0);  // every replicate starts at survival one
  CHECK(bands.upper[0] == 1.0);

  const CiBands again = percentile_ci(ds, 0.8, ci, quick_grids());
  CHECK(again.lower == bands.lower);
  CHECK(again.upper == bands.upper);
}

TEST_CASE("band construction validates its knobs") {
  const Dataset ds = small_simulated(30, 4);
  CiConfig bad_level;
  bad_level.level = 1.0;
  CHECK_THROWS_AS(percentile_ci(ds, 0.8, bad_level, quick_grids()), Error);
  bad_level.level = 0.0;
  CHECK_THROWS_AS(percentile_ci(ds, 0.8, bad_level, quick_grids()), Error);

  CiConfig bad_b;
  bad_b.b_outer = 1;
  CHECK_THROWS_AS(percentile_ci(ds, 0.8, bad_b, quick_grids()), Error);
}
