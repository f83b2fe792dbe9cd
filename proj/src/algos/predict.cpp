#include "ppush/algos/predict.hpp"

#include <cmath>

#include "ppush/core/errors.hpp"

namespace ppush {

PredictiveSummary summarize(std::map<ParticleId, Tensor> outputs) {
  if (outputs.empty()) throw ConfigError("predictive summary needs at least one particle");
  const Shape shape = outputs.begin()->second.shape();
  const double n = static_cast<double>(outputs.size());
  Tensor mean(shape, 0.0);
  for (const auto& [pid, out] : outputs) {
    if (out.shape() != shape) throw DimensionError("particle outputs differ in shape");
    for (std::size_t i = 0; i < out.numel(); ++i) mean[i] += out[i];
  }
  for (double& v : mean.data()) v /= n;
  Tensor std(shape, 0.0);
  for (const auto& [pid, out] : outputs) {
    for (std::size_t i = 0; i < out.numel(); ++i) {
      const double d = out[i] - mean[i];
      std[i] += d * d;
    }
  }
  for (double& v : std.data()) v = std::sqrt(v / n);
  return PredictiveSummary{std::move(outputs), std::move(mean), std::move(std)};
}

PredictiveSummary ppush_predict(ParticleNN& pnn, std::span<const ParticleId> pids, const Tensor& x) {
  if (pids.empty()) throw ConfigError("ppush_predict needs at least one particle");
  std::vector<EventHandle> events;
  events.reserve(pids.size());
  for (auto pid : pids) events.push_back(pnn.pforward(pid, x));
  auto payloads = pnn.pjoin(events);
  std::map<ParticleId, Tensor> outputs;
  for (std::size_t i = 0; i < pids.size(); ++i) {
    outputs.insert_or_assign(pids[i], payload_as<Tensor>(std::move(payloads[i])));
  }
  return summarize(std::move(outputs));
}

}  // namespace ppush
