#pragma once

#include <map>
#include <span>

#include "ppush/runtime/particle_nn.hpp"

namespace ppush {

/// Particle pushforward of one input batch.
struct PredictiveSummary {
  std::map<ParticleId, Tensor> outputs;
  Tensor mean;
  Tensor std;  // population convention
};

/// Elementwise mean and population std over `outputs` in ascending pid order.
PredictiveSummary summarize(std::map<ParticleId, Tensor> outputs);

/// Async pforward on every pid, joined, then summarized.
PredictiveSummary ppush_predict(ParticleNN& pnn, std::span<const ParticleId> pids, const Tensor& x);

}  // namespace ppush
