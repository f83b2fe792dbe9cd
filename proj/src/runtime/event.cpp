#include "ppush/runtime/event.hpp"

#include "ppush/core/errors.hpp"

namespace ppush {

namespace detail {

void EventSlot::complete(Payload value) {
  {
    std::lock_guard lock(mu_);
    if (done_) throw StateError("event completed twice");
    value_ = std::move(value);
    done_ = true;
  }
  cv_.notify_all();
}

void EventSlot::fail(std::exception_ptr error) {
  {
    std::lock_guard lock(mu_);
    if (done_) throw StateError("event completed twice");
    error_ = std::move(error);
    done_ = true;
  }
  cv_.notify_all();
}

bool EventSlot::ready() const {
  std::lock_guard lock(mu_);
  return done_;
}

Payload EventSlot::wait_take() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return done_; });
  return take_locked();
}

Payload EventSlot::take() {
  std::lock_guard lock(mu_);
  if (!done_) throw StateError("event " + std::to_string(id_) + " is not complete");
  return take_locked();
}

Payload EventSlot::take_locked() {
  if (taken_) throw StateError("event " + std::to_string(id_) + " already joined");
  taken_ = true;
  if (error_) std::rethrow_exception(error_);
  return std::move(value_);
}

}  // namespace detail

detail::EventSlot& EventHandle::slot() const {
  if (!slot_) throw StateError("empty event handle");
  return *slot_;
}

}  // namespace ppush
