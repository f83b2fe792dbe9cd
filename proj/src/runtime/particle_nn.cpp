#include "ppush/runtime/particle_nn.hpp"

#include <algorithm>
#include <exception>

#include "ppush/core/errors.hpp"

namespace ppush {

ParticleNN::ParticleNN(MlpArch arch, std::size_t num_devices, std::size_t active_capacity)
    : capacity_(active_capacity) {
  arch.validate();
  if (num_devices == 0) throw ConfigError("a particle neural network needs at least one device");
  if (active_capacity == 0) throw ConfigError("active set capacity must be at least 1");
  fabric_ = std::make_shared<detail::Fabric>(std::move(arch), num_devices);
  loops_.reserve(num_devices);
  for (DeviceId d = 0; d < num_devices; ++d) {
    loops_.push_back(std::make_unique<DeviceEventLoop>(d, active_capacity, fabric_));
  }
  for (auto& loop : loops_) loop->start();
}

ParticleNN::~ParticleNN() { shutdown(); }

void ParticleNN::shutdown() {
  if (stopped_) return;
  stopped_ = true;
  std::vector<EventHandle> done;
  for (DeviceId d = 0; d < loops_.size(); ++d) done.push_back(send(d, msg::Shutdown{}));
  for (auto& e : done) e.join();
  for (auto& loop : loops_) loop->join();
}

std::size_t ParticleNN::live_workers() const {
  return static_cast<std::size_t>(std::count_if(
      loops_.begin(), loops_.end(), [](const auto& loop) { return loop->running(); }));
}

EventHandle ParticleNN::send(DeviceId device, Message::Body body, std::optional<ParticleId> target) {
  if (stopped_ && !std::holds_alternative<msg::Shutdown>(body)) {
    throw StateError("particle neural network has been shut down");
  }
  auto slot = fabric_->new_slot(target);
  if (!fabric_->mailboxes.at(device)->post(Message{std::move(body), slot, std::nullopt})) {
    throw StateError("device " + std::to_string(device) + " is not accepting messages");
  }
  return EventHandle(slot);
}

DeviceId ParticleNN::device_of(ParticleId pid) const {
  if (pid.value >= owners_.size()) {
    throw LookupError("unknown particle " + std::to_string(pid.value));
  }
  return owners_[pid.value];
}

std::vector<ParticleId> ParticleNN::particles() const {
  std::vector<ParticleId> out;
  for (std::uint32_t i = 0; i < owners_.size(); ++i) out.push_back(ParticleId{i});
  return out;
}

ParticleId ParticleNN::pinit(InitOptions options) {
  const ParticleId pid{static_cast<std::uint32_t>(owners_.size())};
  const DeviceId owner = options.device.value_or(pid.value % loops_.size());
  if (owner >= loops_.size()) {
    throw LookupError("device " + std::to_string(owner) + " does not exist (have " +
                      std::to_string(loops_.size()) + ")");
  }
  ParamSet params = options.params ? std::move(*options.params)
                                   : ParamSet::init(fabric_->arch, options.seed);
  params.check_matches(fabric_->arch);

  // Broadcast so every loop can route point-to-point requests to the owner.
  std::vector<EventHandle> acks;
  for (DeviceId d = 0; d < loops_.size(); ++d) {
    msg::Init init{pid, owner, std::nullopt, options.optimizer};
    if (d == owner) init.params = params;
    acks.push_back(send(d, std::move(init)));
  }
  pjoin(acks);
  owners_.push_back(owner);
  return pid;
}

EventHandle ParticleNN::pstep(ParticleId pid, const Tensor& data, const Tensor& label,
                              LossKind loss) {
  return send(device_of(pid), msg::Step{pid, loss, data, label});
}

double ParticleNN::pstep_sync(ParticleId pid, const Tensor& data, const Tensor& label,
                              LossKind loss) {
  return payload_as<double>(pstep(pid, data, label, loss).join());
}

EventHandle ParticleNN::pforward(ParticleId pid, const Tensor& data) {
  return send(device_of(pid), msg::Forward{pid, data});
}

Tensor ParticleNN::pforward_sync(ParticleId pid, const Tensor& data) {
  return payload_as<Tensor>(pforward(pid, data).join());
}

EventHandle ParticleNN::pget(ParticleId pid) {
  return send(device_of(pid), msg::Get{pid}, pid);
}

ParamSet ParticleNN::pget_sync(ParticleId pid) { return payload_as<ParamSet>(pget(pid).join()); }

void ParticleNN::phook_register(ParticleId pid, const std::string& name, HookProc proc,
                                HookState state) {
  send(device_of(pid), msg::RegisterHook{pid, name, std::move(proc), std::move(state)}).join();
}

EventHandle ParticleNN::psend(ParticleId pid, const std::string& name) {
  return send(device_of(pid), msg::HookTrigger{pid, name});
}

void ParticleNN::psend_sync(ParticleId pid, const std::string& name) { psend(pid, name).join(); }

std::vector<Payload> ParticleNN::pjoin(const std::vector<EventHandle>& events) {
  std::vector<Payload> out;
  out.reserve(events.size());
  std::exception_ptr first_error;
  for (auto e : events) {
    try {
      out.push_back(e.join());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
      out.emplace_back();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

LoopStats ParticleNN::loop_stats(DeviceId device) {
  if (device >= loops_.size()) throw LookupError("device " + std::to_string(device) + " does not exist");
  return payload_as<LoopStats>(send(device, msg::Stats{}).join());
}

}  // namespace ppush
