#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

#include "pdsim/error.hpp"

namespace pdsim {

/// Fixed-depth FIFO between two threads. A push or pop that waits longer
/// than the timeout throws Error(deadlock); pop returns nullopt once the
/// queue is closed and drained.
template <typename T>
class BoundedQueue {
 public:
  using Clock = std::chrono::steady_clock;

  BoundedQueue(std::size_t depth, std::chrono::milliseconds timeout, std::string name)
      : depth_(depth), timeout_(timeout), name_(std::move(name)) {
    require(depth >= 1, "queue depth must be at least 1");
  }

  void push(T item) {
    std::unique_lock lock(mu_);
    if (!not_full_.wait_for(lock, timeout_, [&] { return closed_ || items_.size() < depth_; }))
      fail(ErrorKind::deadlock, name_ + ": push timed out after " +
                                    std::to_string(timeout_.count()) + " ms");
    if (closed_) return;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    if (!not_empty_.wait_for(lock, timeout_, [&] { return closed_ || !items_.empty(); }))
      fail(ErrorKind::deadlock, name_ + ": pop timed out after " +
                                    std::to_string(timeout_.count()) + " ms");
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  /// Wakes all waiters; later pushes are dropped.
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t depth() const noexcept { return depth_; }

 private:
  std::size_t depth_;
  std::chrono::milliseconds timeout_;
  std::string name_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace pdsim
