#pragma once

#include <span>

#include "casekin/types.hpp"

namespace casekin {

class EmptyInput : public Error { public: using Error::Error; };
class NoRelatives : public Error { public: using Error::Error; };

//! Product-limit survival estimate. At tied times events are taken to
//! precede censorings, so censored subjects stay in the risk set for that
//! jump. With flip_status the roles swap and the curve estimates the
//! survival function of the censoring distribution.
StepSurvival km_estimate(std::span<const Observation> observations, bool flip_status = false);

//! km_estimate over the relatives of all families whose proband group is q.
StepSurvival km_relatives(const Dataset& ds, int q, bool flip_status = false);

//! km_estimate over the relatives of every family regardless of group.
StepSurvival km_relatives_pooled(const Dataset& ds, bool flip_status = false);

}  // namespace casekin
