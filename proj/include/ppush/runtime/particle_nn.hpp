#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ppush/core/errors.hpp"
#include "ppush/runtime/device_loop.hpp"

namespace ppush {

struct InitOptions {
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::none();
  /// Explicit placement; round-robin by pid when empty.
  std::optional<DeviceId> device;
  /// Start from these parameters instead of a seeded init.
  std::optional<ParamSet> params;
};

/// Extracts a typed payload; StateError if the event produced another type.
template <class T>
T payload_as(Payload p) {
  if (auto* v = std::get_if<T>(&p)) return std::move(*v);
  throw StateError("event payload has an unexpected type");
}

/// Coordinator for a set of particles of one architecture spread over
/// `num_devices` device event loops. Use from a single coordinating thread.
class ParticleNN {
 public:
  ParticleNN(MlpArch arch, std::size_t num_devices = 1, std::size_t active_capacity = 1);
  ~ParticleNN();
  ParticleNN(const ParticleNN&) = delete;
  ParticleNN& operator=(const ParticleNN&) = delete;

  ParticleId pinit(InitOptions options = {});

  EventHandle pstep(ParticleId pid, const Tensor& data, const Tensor& label,
                    LossKind loss = LossKind::Mse);
  double pstep_sync(ParticleId pid, const Tensor& data, const Tensor& label,
                    LossKind loss = LossKind::Mse);

  EventHandle pforward(ParticleId pid, const Tensor& data);
  Tensor pforward_sync(ParticleId pid, const Tensor& data);

  /// Deep copy of a particle's parameters and gradients.
  EventHandle pget(ParticleId pid);
  ParamSet pget_sync(ParticleId pid);

  void phook_register(ParticleId pid, const std::string& name, HookProc proc, HookState state = {});
  EventHandle psend(ParticleId pid, const std::string& name);
  void psend_sync(ParticleId pid, const std::string& name);

  /// Waits for every event, then rethrows the first error if any. Payloads
  /// are returned in argument order.
  std::vector<Payload> pjoin(const std::vector<EventHandle>& events);

  LoopStats loop_stats(DeviceId device);

  const MlpArch& arch() const noexcept { return fabric_->arch; }
  std::size_t num_devices() const noexcept { return loops_.size(); }
  std::size_t active_capacity() const noexcept { return capacity_; }
  std::size_t num_particles() const noexcept { return owners_.size(); }
  std::vector<ParticleId> particles() const;
  DeviceId device_of(ParticleId pid) const;

  /// Stops every loop; idempotent. Called by the destructor.
  void shutdown();
  std::size_t live_workers() const;

 private:
  EventHandle send(DeviceId device, Message::Body body, std::optional<ParticleId> target = {});

  std::shared_ptr<detail::Fabric> fabric_;
  std::vector<std::unique_ptr<DeviceEventLoop>> loops_;
  std::vector<DeviceId> owners_;  // indexed by pid
  std::size_t capacity_;
  bool stopped_ = false;
};

}  // namespace ppush
