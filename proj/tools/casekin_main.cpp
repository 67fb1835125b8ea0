#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "casekin/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"casekin: marginal survival estimation from case-control family data"};
  app.require_subcommand(1);

  casekin::RunConfig cfg;

  const auto add_io = [&](CLI::App* sub, bool needs_input) {
    if (needs_input) {
      sub->add_option("--input", cfg.input_path, "family CSV (family_id,role,time,status)")
          ->required();
    }
    sub->add_option("--output", cfg.output_path, "output path")->required();
  };
  const auto add_grids = [&](CLI::App* sub) {
    sub->add_option("--s-grid", cfg.s_points, "kernel locations on [0, 1]")
        ->check(CLI::Range(std::size_t{3}, std::size_t{100000}));
    sub->add_option("--u-grid", cfg.u_points, "relative-age quadrature points")
        ->check(CLI::Range(std::size_t{3}, std::size_t{1000000}));
  };
  const auto add_bandwidth = [&](CLI::App* sub) {
    sub->add_option("--bandwidth", cfg.bandwidth, "bandwidth in (0, 1], or 'auto'");
    sub->add_option("--b-inner", cfg.b_inner, "inner replications for bandwidth selection")
        ->check(CLI::PositiveNumber);
  };
  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "RNG seed");
  };
  const auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--frailty", cfg.frailty, "family dependence: gamma or pstable")
        ->check(CLI::IsMember({"gamma", "pstable"}));
    sub->add_option("--tau", cfg.tau, "Kendall tau of the dependence")
        ->check(CLI::Range(0.01, 0.99));
    sub->add_option("--event-rate", cfg.event_rate, "marginal event probability by end of study")
        ->check(CLI::Range(0.001, 0.999));
  };

  CLI::App* estimate = app.add_subcommand("estimate", "estimate the marginal survival curve");
  add_io(estimate, true);
  add_bandwidth(estimate);
  add_grids(estimate);
  add_seed(estimate);
  estimate->add_flag("--with-ci", cfg.with_ci, "append percentile bootstrap band columns");
  estimate->add_option("--b-outer", cfg.b_outer, "outer bootstrap replications")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--level", cfg.level, "confidence level")->check(CLI::Range(0.5, 0.999));

  CLI::App* simulate = app.add_subcommand("simulate", "draw a case-control family dataset");
  add_io(simulate, false);
  add_seed(simulate);
  add_scenario(simulate);
  simulate->add_option("--n1", cfg.n1, "case families")->check(CLI::PositiveNumber);
  simulate->add_option("--ratio", cfg.ratio, "control families per case family")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--relatives", cfg.relatives, "relatives per family")
      ->check(CLI::PositiveNumber);

  CLI::App* select = app.add_subcommand("select-bandwidth", "two-stage bootstrap bandwidth search");
  add_io(select, true);
  select->add_option("--b-inner", cfg.b_inner, "inner replications per candidate")
      ->check(CLI::PositiveNumber);
  add_grids(select);
  add_seed(select);

  CLI::App* ci = app.add_subcommand("ci", "percentile bootstrap confidence band");
  add_io(ci, true);
  add_bandwidth(ci);
  add_grids(ci);
  add_seed(ci);
  ci->add_option("--b-outer", cfg.b_outer, "outer bootstrap replications")
      ->check(CLI::PositiveNumber);
  ci->add_option("--level", cfg.level, "confidence level")->check(CLI::Range(0.5, 0.999));

  CLI::App* oracle = app.add_subcommand("oracle-check",
                                        "closed-form pipeline check on exact surfaces");
  oracle->add_option("--output", cfg.output_path, "optional TSV of the compared curves");
  add_grids(oracle);
  add_scenario(oracle);

  CLI11_PARSE(app, argc, argv);

  cfg.command = app.get_subcommands().front()->get_name();
  return casekin::run_command(cfg, std::cout, std::cerr);
}
