#pragma once

#include <cstddef>

#include "mimic/policy.hpp"
#include "mimic/serialization.hpp"

namespace mimic {

/// Uniform surface shared by every learner. Inputs specific to an algorithm
/// (demonstrations, expert handle, preference labeler) are given at construction.
/// train() is resumable: train(a); train(b) is identical to train(a + b).
class ImitationAlgorithm {
 public:
  virtual ~ImitationAlgorithm() = default;

  virtual void train(std::size_t budget) = 0;
  virtual const Policy& current_policy() const = 0;

  const MetricLog& metrics() const { return log_; }

 protected:
  MetricLog log_;
};

}  // namespace mimic
