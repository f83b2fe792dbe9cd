#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ppush/runtime/message.hpp"

namespace ppush {

namespace detail {

/// Routing shared by the coordinator and every loop. Immutable after
/// construction apart from the mailboxes (internally synchronized) and the
/// event-id counter.
struct Fabric {
  Fabric(MlpArch arch, std::size_t num_devices);

  std::shared_ptr<EventSlot> new_slot(std::optional<ParticleId> target = {});

  const MlpArch arch;
  std::vector<std::unique_ptr<Mailbox>> mailboxes;
  std::atomic<std::uint64_t> next_event{0};
};

}  // namespace detail

class DeviceEventLoop;

/// View of one particle handed to a hook while it runs on the owning loop.
///
/// `module_params()` returns a reference into device memory that stays valid
/// only until the next get, join or step on this context: servicing those can
/// context-switch the particle out.
class ParticleContext {
 public:
  ParticleId pid() const noexcept { return pid_; }
  DeviceId device() const noexcept;
  const MlpArch& arch() const noexcept;

  /// Every particle id, ascending.
  std::vector<ParticleId> particles() const;

  /// Asynchronous deep copy (values and gradients) of `target`. Targets on
  /// this loop are served immediately without touching a queue.
  EventHandle get(ParticleId target);

  /// Waits for the given get events; result keyed by target particle.
  std::map<ParticleId, ParamSet> join(const std::vector<EventHandle>& events);

  /// Forward, zero grads, loss, backward, optimizer update on this particle.
  double step(LossKind loss, const Tensor& data, const Tensor& label);
  Tensor forward(const Tensor& data);

  ParamSet& module_params();

 private:
  friend class DeviceEventLoop;
  ParticleContext(DeviceEventLoop& loop, ParticleId pid) : loop_(loop), pid_(pid) {}

  DeviceEventLoop& loop_;
  ParticleId pid_;
};

/// Worker bound to one simulated device. Owns the particles placed on it,
/// keeps at most `capacity` of them in device memory (the active set) and
/// swaps the rest to a per-device host store under LRU.
class DeviceEventLoop {
 public:
  DeviceEventLoop(DeviceId id, std::size_t capacity, std::shared_ptr<detail::Fabric> fabric);
  ~DeviceEventLoop();
  DeviceEventLoop(const DeviceEventLoop&) = delete;
  DeviceEventLoop& operator=(const DeviceEventLoop&) = delete;

  void start();
  /// Waits for the worker thread to exit (after a Shutdown message).
  void join();
  bool running() const noexcept { return running_.load(); }
  DeviceId id() const noexcept { return id_; }

 private:
  friend class ParticleContext;

  struct Memory {
    ParamSet params;
    Optimizer optimizer;
  };
  struct Hook {
    HookProc proc;
    HookState state;
  };
  struct ParticleState {
    std::map<std::string, Hook> hooks;
    bool active = false;
  };

  void run();
  void dispatch(Message& m);
  void respond(const Message& m, Payload value);
  void respond_error(const Message& m, std::exception_ptr error);
  void drain_after_shutdown();

  Payload on_init(msg::Init& init);
  Payload on_step(msg::Step& step);
  Payload on_forward(msg::Forward& fwd);
  Payload on_register(msg::RegisterHook& reg);
  Payload on_hook(msg::HookTrigger& trig);
  LoopStats stats() const;

  ParticleState& local_particle(ParticleId pid);
  Memory& activate(ParticleId pid);
  double step_particle(ParticleId pid, LossKind loss, const Tensor& data, const Tensor& label);
  ParamSet snapshot(ParticleId pid);
  EventHandle request_get(ParticleId target);
  /// Blocks until every event completes, servicing only replies and
  /// loop-originated gets meanwhile.
  void await(const std::vector<EventHandle>& events);
  DeviceId owner_of(ParticleId pid) const;

  const DeviceId id_;
  const std::size_t capacity_;
  std::shared_ptr<detail::Fabric> fabric_;
  Mailbox& inbox_;

  std::map<ParticleId, DeviceId> registry_;
  std::map<ParticleId, ParticleState> particles_;
  std::map<ParticleId, Memory> arena_;  // device memory
  std::map<ParticleId, Memory> host_;   // inactive set
  std::list<ParticleId> recency_;       // most recent first

  std::vector<ParticleId> evictions_;
  std::vector<ParticleId> loads_;
  std::size_t processed_ = 0;

  std::atomic<bool> running_{false};
  std::thread thread_;
};

}  // namespace ppush
