#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>

#include "ppush/runtime/types.hpp"

namespace ppush {

namespace detail {

/// Completion slot shared between the issuer of a request and whoever
/// services it.
class EventSlot {
 public:
  EventSlot(std::uint64_t id, std::optional<ParticleId> target)
      : id_(id), target_(target) {}

  std::uint64_t id() const noexcept { return id_; }
  std::optional<ParticleId> target() const noexcept { return target_; }

  void complete(Payload value);
  void fail(std::exception_ptr error);
  bool ready() const;

  /// Blocks until completion, then hands out the payload once.
  Payload wait_take();
  /// Non-blocking variant for slots already known to be complete.
  Payload take();

 private:
  Payload take_locked();

  const std::uint64_t id_;
  const std::optional<ParticleId> target_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool done_ = false;
  bool taken_ = false;
  Payload value_;
  std::exception_ptr error_;
};

}  // namespace detail

/// Handle to an asynchronous particle operation. Copies share the same
/// completion; the result can be joined exactly once.
class EventHandle {
 public:
  EventHandle() = default;
  explicit EventHandle(std::shared_ptr<detail::EventSlot> slot) : slot_(std::move(slot)) {}

  std::uint64_t id() const { return slot().id(); }
  /// Target particle for get events.
  std::optional<ParticleId> target() const { return slot().target(); }
  bool ready() const { return slot().ready(); }
  bool valid() const noexcept { return static_cast<bool>(slot_); }

  /// Blocks until complete. Rethrows an error payload; StateError on a
  /// second join.
  Payload join() { return slot().wait_take(); }

  const std::shared_ptr<detail::EventSlot>& shared_slot() const noexcept { return slot_; }

 private:
  detail::EventSlot& slot() const;

  std::shared_ptr<detail::EventSlot> slot_;
};

}  // namespace ppush
