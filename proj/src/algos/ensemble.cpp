#include "ppush/algos/ensemble.hpp"

#include <mutex>

#include "ppush/core/errors.hpp"

namespace ppush {

CentralizedEnsemble::CentralizedEnsemble(ParticleNN& pnn, std::span<const std::uint64_t> seeds,
                                         double lr)
    : pnn_(pnn) {
  if (seeds.empty()) throw ConfigError("an ensemble needs at least one particle");
  const Optimizer opt = Optimizer::sgd(lr);
  for (auto seed : seeds) pids_.push_back(pnn_.pinit({.seed = seed, .optimizer = opt}));
}

double CentralizedEnsemble::run_epoch(const Dataset& data) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& batch : data) {
    std::vector<EventHandle> events;
    events.reserve(pids_.size());
    for (auto pid : pids_) events.push_back(pnn_.pstep(pid, batch.x, batch.y));
    for (auto& loss : pnn_.pjoin(events)) {
      total += std::get<double>(loss);
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

std::vector<ParticleId> train_ensemble_centralized(ParticleNN& pnn, const Dataset& data,
                                                   std::size_t epochs, double lr,
                                                   std::span<const std::uint64_t> seeds) {
  CentralizedEnsemble ensemble(pnn, seeds, lr);
  for (std::size_t e = 0; e < epochs; ++e) ensemble.run_epoch(data);
  return ensemble.particles();
}

std::vector<ParticleId> train_ensemble_distributed(ParticleNN& pnn, const DatasetFactory& make_data,
                                                   std::size_t epochs, double lr,
                                                   std::span<const std::uint64_t> seeds,
                                                   std::vector<HookSpan>* spans) {
  if (seeds.empty()) throw ConfigError("an ensemble needs at least one particle");
  const Optimizer opt = Optimizer::sgd(lr);
  std::vector<ParticleId> pids;
  for (auto seed : seeds) pids.push_back(pnn.pinit({.seed = seed, .optimizer = opt}));

  auto trace_mu = std::make_shared<std::mutex>();
  for (auto pid : pids) {
    HookState state{{"dataloader", make_data()}, {"epochs", epochs}};
    pnn.phook_register(pid, "ENSEMBLE_MAIN", [spans, trace_mu](ParticleContext& ctx, HookState& st) {
      const auto start = std::chrono::steady_clock::now();
      const auto& loader = std::any_cast<const Dataset&>(st.at("dataloader"));
      const auto n_epochs = std::any_cast<std::size_t>(st.at("epochs"));
      for (std::size_t e = 0; e < n_epochs; ++e) {
        for (const auto& batch : loader) ctx.step(LossKind::Mse, batch.x, batch.y);
      }
      if (spans) {
        std::lock_guard lock(*trace_mu);
        spans->push_back({ctx.pid(), start, std::chrono::steady_clock::now()});
      }
    }, std::move(state));
  }

  std::vector<EventHandle> events;
  for (auto pid : pids) events.push_back(pnn.psend(pid, "ENSEMBLE_MAIN"));
  pnn.pjoin(events);
  return pids;
}

}  // namespace ppush
