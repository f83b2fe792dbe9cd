#include "ppush/runtime/message.hpp"

namespace ppush {

bool Mailbox::post(Message m) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return false;
    queue_.push_back(std::move(m));
  }
  cv_.notify_one();
  return true;
}

Message Mailbox::pop() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !queue_.empty(); });
  Message m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

Message Mailbox::pop_first(const std::function<bool(const Message&)>& pred) {
  std::unique_lock lock(mu_);
  std::size_t scanned = 0;
  for (;;) {
    for (; scanned < queue_.size(); ++scanned) {
      if (pred(queue_[scanned])) {
        Message m = std::move(queue_[scanned]);
        queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(scanned));
        return m;
      }
    }
    cv_.wait(lock, [&] { return queue_.size() > scanned; });
  }
}

std::deque<Message> Mailbox::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  return std::exchange(queue_, {});
}

}  // namespace ppush
