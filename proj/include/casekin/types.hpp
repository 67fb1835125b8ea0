#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace casekin {

//! Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MissingProband : public Error { public: using Error::Error; };
class DuplicateProband : public Error { public: using Error::Error; };
class NegativeTime : public Error { public: using Error::Error; };
class EmptyDataset : public Error { public: using Error::Error; };

//! One observed (time, status) pair; status 1 means the event was observed.
struct Observation {
  double time = 0.0;
  int status = 0;
};

//! A proband together with the observations on their relatives.
//! proband_group duplicates proband.status: 1 = case family, 0 = control.
struct FamilyRecord {
  std::string family_id;
  Observation proband;
  int proband_group = 0;
  std::vector<Observation> relatives;
};

//! Validated case-control family data. Immutable after construction.
struct Dataset {
  std::vector<FamilyRecord> families;
  std::size_t n1 = 0;  // case families
  std::size_t n0 = 0;  // control families
  double tau0 = 0.0;   // max proband observed time
  double tau = 0.0;    // max relative observed time

  std::size_t size() const { return families.size(); }
};

//! Raw input row before validation.
struct RawRecord {
  std::string family_id;
  char role = 'R';  // 'P' proband, 'R' relative
  double time = 0.0;
  int status = 0;
};

//! Groups rows into families (sorted by family_id, relatives in row order),
//! checks the one-proband-per-family contract, and computes counts and maxima.
Dataset validate_dataset(const std::vector<RawRecord>& rows);

//! Recomputes n0/n1/tau0/tau for families assembled elsewhere (simulator,
//! bootstrap resampling). Family records must already be well formed.
Dataset make_dataset(std::vector<FamilyRecord> families);

//! Right-continuous nonincreasing step function on [0, inf) with S(0) = 1.
//! Evaluation beyond the last jump returns the last value.
class StepSurvival {
public:
  StepSurvival() = default;
  StepSurvival(std::vector<double> jump_times, std::vector<double> values);

  double operator()(double t) const;

  const std::vector<double>& jump_times() const { return jump_times_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return jump_times_.empty(); }

private:
  std::vector<double> jump_times_;  // strictly increasing
  std::vector<double> values_;      // nonincreasing, in [0, 1]
};

//! Strictly increasing evaluation points, used for all quadrature.
class Grid {
public:
  Grid() = default;
  explicit Grid(std::vector<double> points);
  static Grid uniform(double lo, double hi, std::size_t n);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  const std::vector<double>& points() const { return points_; }
  bool is_uniform() const { return uniform_; }
  double step() const { return step_; }

  //! Trapezoid rule over the whole grid.
  double trapz(std::span<const double> f) const;
  //! Running trapezoid integral; out[i] = integral from points[0] to points[i].
  std::vector<double> cumtrapz(std::span<const double> f) const;

private:
  std::vector<double> points_;
  bool uniform_ = false;
  double step_ = 0.0;
};

//! Linear interpolation of (x, y) pairs with flat extrapolation.
//! x must be nondecreasing.
double interp_linear(std::span<const double> x, std::span<const double> y, double at);

}  // namespace casekin
