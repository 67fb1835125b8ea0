#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace casekin {

//! Parsed command-line request; the front end maps flags onto this struct
//! so every subcommand can also be driven in-process from tests.
struct RunConfig {
  std::string command;  // estimate | simulate | select-bandwidth | ci | oracle-check
  std::string input_path;
  std::string output_path;
  std::string bandwidth = "auto";  // fixed value or "auto" for the two-stage search
  std::uint64_t seed = 0;
  int b_inner = 30;
  int b_outer = 100;
  double level = 0.95;
  std::size_t s_points = 101;
  std::size_t u_points = 200;
  bool with_ci = false;  // estimate: append percentile-band columns

  // simulate / oracle-check scenario knobs
  std::string frailty = "gamma";  // or "pstable"
  double tau = 0.5;               // Kendall tau of the family dependence
  double event_rate = 0.6;        // marginal event probability by end of study
  std::size_t n1 = 500;
  std::size_t ratio = 1;
  std::size_t relatives = 1;
};

//! Executes one subcommand, writing progress to out and failures to err.
//! Returns a process exit code (0 on success).
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace casekin
