#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "ppush/algos/data.hpp"
#include "ppush/runtime/particle_nn.hpp"

namespace ppush {

/// Deep ensemble driven from the coordinator: every batch issues one async
/// pstep per particle and then joins them all.
class CentralizedEnsemble {
 public:
  CentralizedEnsemble(ParticleNN& pnn, std::span<const std::uint64_t> seeds, double lr);

  /// One pass over `data`; returns the mean loss over all steps.
  double run_epoch(const Dataset& data);
  const std::vector<ParticleId>& particles() const noexcept { return pids_; }

 private:
  ParticleNN& pnn_;
  std::vector<ParticleId> pids_;
};

std::vector<ParticleId> train_ensemble_centralized(ParticleNN& pnn, const Dataset& data,
                                                   std::size_t epochs, double lr,
                                                   std::span<const std::uint64_t> seeds);

/// Wall-clock extent of one particle's training hook.
struct HookSpan {
  ParticleId pid;
  std::chrono::steady_clock::time_point start;
  std::chrono::steady_clock::time_point end;
};

/// Deep ensemble where each particle trains itself inside an "ENSEMBLE_MAIN"
/// hook on its own loader; the only synchronization is the final join.
std::vector<ParticleId> train_ensemble_distributed(ParticleNN& pnn, const DatasetFactory& make_data,
                                                   std::size_t epochs, double lr,
                                                   std::span<const std::uint64_t> seeds,
                                                   std::vector<HookSpan>* spans = nullptr);

}  // namespace ppush
