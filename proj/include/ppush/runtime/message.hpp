#pragma once

#include <any>
#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ppush/core/optim.hpp"
#include "ppush/runtime/event.hpp"

namespace ppush {

class ParticleContext;

/// Private mutable state of one hook, confined to the owning loop.
using HookState = std::map<std::string, std::any>;
using HookProc = std::function<void(ParticleContext&, HookState&)>;

namespace msg {

/// Creates the particle on its owner; other loops only record the placement.
struct Init {
  ParticleId pid;
  DeviceId owner = 0;
  std::optional<ParamSet> params;  // owner only
  Optimizer optimizer;
};

struct Step {
  ParticleId pid;
  LossKind loss = LossKind::Mse;
  Tensor data;
  Tensor label;
};

struct Forward {
  ParticleId pid;
  Tensor data;
};

struct Get {
  ParticleId target;
};

struct RegisterHook {
  ParticleId pid;
  std::string name;
  HookProc proc;
  HookState state;
};

struct HookTrigger {
  ParticleId pid;
  std::string name;
};

/// Completion of a request issued from inside a hook on another loop.
struct Reply {
  std::shared_ptr<detail::EventSlot> slot;
  Payload payload;
  std::exception_ptr error;
};

struct Stats {};
struct Shutdown {};

}  // namespace msg

struct Message {
  using Body = std::variant<msg::Init, msg::Step, msg::Forward, msg::Get, msg::RegisterHook,
                            msg::HookTrigger, msg::Reply, msg::Stats, msg::Shutdown>;

  Body body;
  /// Completion slot for every non-Reply message.
  std::shared_ptr<detail::EventSlot> reply_to;
  /// Loop that issued the request; empty for the coordinator.
  std::optional<DeviceId> requester;
};

/// Unbounded FIFO inbox with selective receive.
class Mailbox {
 public:
  /// False if the mailbox has been closed; the message is dropped.
  bool post(Message m);
  Message pop();
  /// Removes the first message satisfying `pred`, blocking until one arrives.
  Message pop_first(const std::function<bool(const Message&)>& pred);
  /// Refuses further posts and returns whatever was still queued.
  std::deque<Message> close();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
  bool closed_ = false;
};

}  // namespace ppush
