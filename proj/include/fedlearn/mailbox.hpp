#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <utility>

namespace fedlearn {

/// Unbounded FIFO owned by one receiving activity. Senders only ever move
/// values in; nothing is shared after the hand-off.
template <class T>
class Mailbox {
public:
    void send(T message) {
        {
            std::lock_guard lock(mutex_);
            queue_.push_back(std::move(message));
        }
        ready_.notify_one();
    }

    T receive() {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [this] { return !queue_.empty(); });
        T message = std::move(queue_.front());
        queue_.pop_front();
        return message;
    }

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<T> queue_;
};

} // namespace fedlearn
