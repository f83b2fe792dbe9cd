#pragma once

#include <cstdint>

#include "ppush/algos/data.hpp"
#include "ppush/runtime/particle_nn.hpp"

namespace ppush {

/// Diagonal SWAG posterior from streaming first and second raw moments.
struct SwagPosterior {
  ParamSet mean;
  ParamSet mom2;
  std::int64_t n = 1;  // snapshots folded in

  /// max(mom2 - mean^2, 0) elementwise.
  ParamSet variance() const;
};

struct SwagConfig {
  std::size_t pretrain_epochs = 0;
  std::size_t swag_epochs = 1;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

/// Parameter particle plus two moment particles. The moment particles are
/// created after pretraining from the parameter particle's snapshot and are
/// updated by the SWAG_1st_MOMENT / SWAG_2nd_MOMENT hooks after every
/// synchronous pstep of the swag phase.
class SwagTrainer {
 public:
  SwagTrainer(ParticleNN& pnn, const SwagConfig& cfg);

  double pretrain_epoch(const Dataset& data);
  /// Snapshots the parameter particle into the two moment particles and
  /// registers their hooks. Idempotent; swag_epoch and posterior call it.
  void begin_swag_phase();
  double swag_epoch(const Dataset& data);

  ParticleId param_particle() const noexcept { return param_pid_; }
  SwagPosterior posterior();

 private:
  ParticleNN& pnn_;
  SwagConfig cfg_;
  ParticleId param_pid_;
  std::optional<ParticleId> mom1_pid_;
  std::optional<ParticleId> mom2_pid_;
  std::int64_t n_ = 1;
};

SwagPosterior train_swag(ParticleNN& pnn, const Dataset& data, const SwagConfig& cfg);

/// mean + sqrt(variance) * z with z ~ N(0, I), elementwise.
ParamSet swag_sample(const SwagPosterior& posterior, std::uint64_t seed);

}  // namespace ppush
