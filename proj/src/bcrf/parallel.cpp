#include "bcrf/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bcrf {

int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

namespace {

// A lazily grown pool shared by all batch entry points. Each parallel_for
// publishes one job; workers and the caller grab fixed chunks through an
// atomic cursor, so assignment order never affects results.
class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void run(int64_t count, int threads,
           const std::function<void(int64_t, int64_t)>& fn) {
    // One job at a time; concurrent callers serialize here.
    std::lock_guard<std::mutex> job(job_mutex_);
    const int64_t want_chunks = static_cast<int64_t>(threads) * 4;
    const int64_t chunk = std::max<int64_t>(1, (count + want_chunks - 1) /
                                                   want_chunks);
    ensure_workers(threads - 1);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      fn_ = &fn;
      count_ = count;
      chunk_ = chunk;
      cursor_.store(0, std::memory_order_relaxed);
      pending_ = std::min<int64_t>(static_cast<int64_t>(workers_.size()),
                                   (count + chunk - 1) / chunk - 1);
      if (pending_ < 0) pending_ = 0;
      ++generation_;
    }
    wake_.notify_all();
    drain();  // caller participates
    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [&] { return active_ == 0; });
    fn_ = nullptr;
    if (error_) {
      std::exception_ptr e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  Pool() = default;

  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : workers_) t.join();
  }

  void ensure_workers(int needed) {
    std::lock_guard<std::mutex> lock(mutex_);
    while (static_cast<int>(workers_.size()) < needed) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  void worker_loop() {
    uint64_t seen = 0;
    while (true) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        if (pending_ == 0) continue;  // enough workers already engaged
        --pending_;
        ++active_;
      }
      drain();
      bool all_done;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        --active_;
        all_done = active_ == 0;
      }
      if (all_done) done_.notify_all();
    }
  }

  void drain() {
    const std::function<void(int64_t, int64_t)>* fn;
    int64_t count, chunk;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      fn = fn_;
      count = count_;
      chunk = chunk_;
    }
    if (fn == nullptr) return;
    while (true) {
      int64_t begin = cursor_.fetch_add(chunk, std::memory_order_relaxed);
      if (begin >= count) break;
      int64_t end = std::min(begin + chunk, count);
      try {
        (*fn)(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  std::mutex job_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  std::vector<std::thread> workers_;
  const std::function<void(int64_t, int64_t)>* fn_ = nullptr;
  int64_t count_ = 0;
  int64_t chunk_ = 1;
  std::atomic<int64_t> cursor_{0};
  int64_t pending_ = 0;
  int64_t active_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace

void parallel_for(int64_t count, int threads,
                  const std::function<void(int64_t, int64_t)>& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    fn(0, count);
    return;
  }
  Pool::instance().run(count, threads, fn);
}

}  // namespace bcrf
