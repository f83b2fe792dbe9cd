#include "ppush/runtime/device_loop.hpp"

#include <algorithm>
#include <string>

#include "ppush/core/errors.hpp"

namespace ppush {

namespace {

std::string pid_str(ParticleId pid) { return "particle " + std::to_string(pid.value); }

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

namespace detail {

Fabric::Fabric(MlpArch arch_in, std::size_t num_devices) : arch(std::move(arch_in)) {
  mailboxes.reserve(num_devices);
  for (std::size_t i = 0; i < num_devices; ++i) mailboxes.push_back(std::make_unique<Mailbox>());
}

std::shared_ptr<EventSlot> Fabric::new_slot(std::optional<ParticleId> target) {
  return std::make_shared<EventSlot>(next_event.fetch_add(1), target);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ParticleContext

DeviceId ParticleContext::device() const noexcept { return loop_.id_; }

const MlpArch& ParticleContext::arch() const noexcept { return loop_.fabric_->arch; }

std::vector<ParticleId> ParticleContext::particles() const {
  std::vector<ParticleId> out;
  out.reserve(loop_.registry_.size());
  for (const auto& [pid, dev] : loop_.registry_) out.push_back(pid);
  return out;
}

EventHandle ParticleContext::get(ParticleId target) { return loop_.request_get(target); }

std::map<ParticleId, ParamSet> ParticleContext::join(const std::vector<EventHandle>& events) {
  for (const auto& e : events) {
    if (!e.valid() || !e.target()) throw StateError("join expects events returned by get");
  }
  loop_.await(events);
  std::map<ParticleId, ParamSet> out;
  for (const auto& e : events) {
    Payload p = e.shared_slot()->take();
    auto* params = std::get_if<ParamSet>(&p);
    if (!params || !e.target()) throw StateError("join expects get events");
    out.insert_or_assign(*e.target(), std::move(*params));
  }
  return out;
}

double ParticleContext::step(LossKind loss, const Tensor& data, const Tensor& label) {
  return loop_.step_particle(pid_, loss, data, label);
}

Tensor ParticleContext::forward(const Tensor& data) {
  return ppush::forward(arch(), loop_.activate(pid_).params, data);
}

ParamSet& ParticleContext::module_params() { return loop_.activate(pid_).params; }

// ---------------------------------------------------------------------------
// DeviceEventLoop

DeviceEventLoop::DeviceEventLoop(DeviceId id, std::size_t capacity,
                                 std::shared_ptr<detail::Fabric> fabric)
    : id_(id), capacity_(capacity), fabric_(std::move(fabric)), inbox_(*fabric_->mailboxes.at(id)) {
  if (capacity_ == 0) throw ConfigError("active set capacity must be at least 1");
}

DeviceEventLoop::~DeviceEventLoop() { join(); }

void DeviceEventLoop::start() {
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void DeviceEventLoop::join() {
  if (thread_.joinable()) thread_.join();
}

void DeviceEventLoop::run() {
  for (;;) {
    Message m = inbox_.pop();
    if (std::holds_alternative<msg::Shutdown>(m.body)) {
      drain_after_shutdown();
      respond(m, std::monostate{});
      break;
    }
    dispatch(m);
  }
  running_ = false;
}

void DeviceEventLoop::drain_after_shutdown() {
  auto leftover = inbox_.close();
  for (auto& m : leftover) {
    if (std::holds_alternative<msg::Reply>(m.body)) continue;
    respond_error(m, std::make_exception_ptr(
                         StateError("device " + std::to_string(id_) + " shut down")));
  }
}

void DeviceEventLoop::respond(const Message& m, Payload value) {
  if (!m.reply_to) return;
  if (m.requester) {
    fabric_->mailboxes[*m.requester]->post(
        Message{msg::Reply{m.reply_to, std::move(value), nullptr}, nullptr, std::nullopt});
  } else {
    m.reply_to->complete(std::move(value));
  }
}

void DeviceEventLoop::respond_error(const Message& m, std::exception_ptr error) {
  if (!m.reply_to) return;
  if (m.requester) {
    fabric_->mailboxes[*m.requester]->post(
        Message{msg::Reply{m.reply_to, {}, std::move(error)}, nullptr, std::nullopt});
  } else {
    m.reply_to->fail(std::move(error));
  }
}

void DeviceEventLoop::dispatch(Message& m) {
  ++processed_;
  if (auto* reply = std::get_if<msg::Reply>(&m.body)) {
    if (reply->error) {
      reply->slot->fail(reply->error);
    } else {
      reply->slot->complete(std::move(reply->payload));
    }
    return;
  }
  try {
    Payload result = std::visit(
        Overloaded{
            [&](msg::Init& b) { return on_init(b); },
            [&](msg::Step& b) { return on_step(b); },
            [&](msg::Forward& b) { return on_forward(b); },
            [&](msg::Get& b) { return Payload{snapshot(b.target)}; },
            [&](msg::RegisterHook& b) { return on_register(b); },
            [&](msg::HookTrigger& b) { return on_hook(b); },
            [&](msg::Stats&) { return Payload{stats()}; },
            [&](auto&) -> Payload { throw StateError("unexpected message"); },
        },
        m.body);
    respond(m, std::move(result));
  } catch (...) {
    respond_error(m, std::current_exception());
  }
}

Payload DeviceEventLoop::on_init(msg::Init& init) {
  registry_[init.pid] = init.owner;
  if (init.owner == id_) {
    if (!init.params) throw StateError("owner init without parameters");
    particles_[init.pid] = ParticleState{};
    // New particles start in the host store; the first touch loads them.
    host_[init.pid] = Memory{std::move(*init.params), init.optimizer};
  }
  return std::monostate{};
}

Payload DeviceEventLoop::on_step(msg::Step& step) {
  return step_particle(step.pid, step.loss, step.data, step.label);
}

Payload DeviceEventLoop::on_forward(msg::Forward& fwd) {
  local_particle(fwd.pid);
  return ppush::forward(fabric_->arch, activate(fwd.pid).params, fwd.data);
}

Payload DeviceEventLoop::on_register(msg::RegisterHook& reg) {
  auto& state = local_particle(reg.pid);
  if (!reg.proc) throw ConfigError("hook '" + reg.name + "' has no procedure");
  auto [it, inserted] = state.hooks.try_emplace(reg.name, Hook{std::move(reg.proc), std::move(reg.state)});
  if (!inserted) {
    throw ConfigError("hook '" + reg.name + "' already registered on " + pid_str(reg.pid));
  }
  return std::monostate{};
}

Payload DeviceEventLoop::on_hook(msg::HookTrigger& trig) {
  auto& state = local_particle(trig.pid);
  auto it = state.hooks.find(trig.name);
  if (it == state.hooks.end()) {
    throw LookupError("no hook '" + trig.name + "' on " + pid_str(trig.pid));
  }
  activate(trig.pid);
  ParticleContext ctx(*this, trig.pid);
  it->second.proc(ctx, it->second.state);
  return std::monostate{};
}

LoopStats DeviceEventLoop::stats() const {
  LoopStats s;
  s.device = id_;
  s.capacity = capacity_;
  s.evictions = evictions_;
  s.loads = loads_;
  s.active.assign(recency_.begin(), recency_.end());
  s.registry = registry_;
  s.messages_processed = processed_;
  return s;
}

DeviceEventLoop::ParticleState& DeviceEventLoop::local_particle(ParticleId pid) {
  auto it = particles_.find(pid);
  if (it == particles_.end()) {
    throw LookupError(pid_str(pid) + " is not owned by device " + std::to_string(id_));
  }
  return it->second;
}

DeviceEventLoop::Memory& DeviceEventLoop::activate(ParticleId pid) {
  auto& state = local_particle(pid);
  if (state.active) {
    recency_.remove(pid);
    recency_.push_front(pid);
    return arena_.at(pid);
  }
  if (arena_.size() >= capacity_) {
    const ParticleId victim = recency_.back();
    recency_.pop_back();
    // Copy out rather than move: the transfer is the context-switch cost.
    host_[victim] = arena_.at(victim);
    arena_.erase(victim);
    particles_.at(victim).active = false;
    evictions_.push_back(victim);
  }
  auto node = host_.find(pid);
  Memory& slot = arena_[pid];
  slot = node->second;
  host_.erase(node);
  state.active = true;
  recency_.push_front(pid);
  loads_.push_back(pid);
  return slot;
}

double DeviceEventLoop::step_particle(ParticleId pid, LossKind loss, const Tensor& data,
                                      const Tensor& label) {
  Memory& mem = activate(pid);
  ForwardPass pass(fabric_->arch, mem.params, data);
  mem.params.zero_grad();
  double value = 0.0;
  switch (loss) {
    case LossKind::Mse:
      value = pass.mse_loss(label);
      break;
  }
  pass.backward(mem.params);
  if (mem.optimizer.kind == Optimizer::Kind::Sgd) sgd_step(mem.params, mem.optimizer.lr);
  return value;
}

ParamSet DeviceEventLoop::snapshot(ParticleId pid) { return activate(pid).params; }

DeviceId DeviceEventLoop::owner_of(ParticleId pid) const {
  auto it = registry_.find(pid);
  if (it == registry_.end()) throw LookupError("unknown " + pid_str(pid));
  return it->second;
}

EventHandle DeviceEventLoop::request_get(ParticleId target) {
  const DeviceId owner = owner_of(target);
  auto slot = fabric_->new_slot(target);
  if (owner == id_) {
    try {
      slot->complete(snapshot(target));
    } catch (...) {
      slot->fail(std::current_exception());
    }
    return EventHandle(slot);
  }
  Message m{msg::Get{target}, slot, id_};
  if (!fabric_->mailboxes[owner]->post(std::move(m))) {
    slot->fail(std::make_exception_ptr(
        StateError("device " + std::to_string(owner) + " shut down")));
  }
  return EventHandle(slot);
}

void DeviceEventLoop::await(const std::vector<EventHandle>& events) {
  auto pending = [&] {
    return std::any_of(events.begin(), events.end(), [](const EventHandle& e) { return !e.ready(); });
  };
  const auto serviceable = [](const Message& m) {
    return std::holds_alternative<msg::Reply>(m.body) ||
           (std::holds_alternative<msg::Get>(m.body) && m.requester.has_value());
  };
  while (pending()) {
    Message m = inbox_.pop_first(serviceable);
    dispatch(m);
  }
}

}  // namespace ppush
