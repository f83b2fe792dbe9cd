#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ppush/algos/data.hpp"
#include "ppush/core/optim.hpp"
#include "ppush/runtime/particle_nn.hpp"

namespace ppush {

struct SvgdConfig {
  double bandwidth = 1.0;
  double lr = 1e-3;
  PriorSpec prior;
  /// Weights the likelihood term by k and the prior by 1 and only scales the
  /// kernel-gradient term by 1/n, instead of averaging the whole sum.
  bool legacy_coefficients = false;

  void validate() const;
};

/// Stein direction for particle `self`, given each particle's parameters
/// with their stored loss gradients:
///   phi = 1/n sum_j [ k(theta_j, theta_i) g_j + grad_{theta_j} k(theta_j, theta_i) ],
///   g_j = -grad loss(theta_j) + grad log p(theta_j),
/// summed in the given order (callers pass ascending pid order).
std::vector<double> svgd_direction(std::span<const ParamSet* const> particles, std::size_t self,
                                   const SvgdConfig& cfg);

/// Staging area shared by one particle's UPDATE and COMMIT hooks. Both hooks
/// of a particle run on its owning loop, so no locking is needed.
using SvgdPending = std::shared_ptr<std::optional<std::vector<double>>>;

/// SVGD_UPDATE hook body. Gathers every other particle, computes the new
/// parameters and parks them in the SvgdPending stored at `state["pending"]`;
/// svgd_commit applies them. Splitting the two keeps every particle's gather
/// reading pre-update values.
void svgd_update(ParticleContext& ctx, HookState& state, const SvgdConfig& cfg);
/// SVGD_COMMIT hook body.
void svgd_commit(ParticleContext& ctx, HookState& state);
/// Registers both hooks on `pid` around a fresh shared SvgdPending.
void register_svgd_hooks(ParticleNN& pnn, ParticleId pid, const SvgdConfig& cfg);

inline constexpr const char* kSvgdUpdateHook = "SVGD_UPDATE";
inline constexpr const char* kSvgdCommitHook = "SVGD_COMMIT";

class SvgdTrainer {
 public:
  /// Creates one optimizer-free particle per seed (placed round-robin) and
  /// registers the SVGD hooks on each.
  SvgdTrainer(ParticleNN& pnn, std::span<const std::uint64_t> seeds, const SvgdConfig& cfg);

  /// Per batch: gradient-only psteps on every particle, join, then the
  /// all-to-all update. Returns the mean loss over the gradient steps.
  double run_epoch(const Dataset& data);
  /// All-to-all update on the gradients currently stored in the particles.
  void update();
  const std::vector<ParticleId>& particles() const noexcept { return pids_; }

 private:
  ParticleNN& pnn_;
  std::vector<ParticleId> pids_;
};

std::vector<ParticleId> train_svgd(ParticleNN& pnn, const Dataset& data, std::size_t epochs,
                                   const SvgdConfig& cfg, std::span<const std::uint64_t> seeds);

}  // namespace ppush
