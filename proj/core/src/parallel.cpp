#include "ubsb/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace ubsb {
namespace {

thread_local bool tls_in_worker = false;

class ThreadPool {
 public:
  explicit ThreadPool(int workers) {
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const noexcept { return static_cast<int>(threads_.size()); }

  void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::unique_lock lock(mutex_);
    job_ = &fn;
    job_size_ = n;
    next_.store(0);
    pending_workers_ = size();
    error_ = nullptr;
    ++generation_;
    wake_.notify_all();
    lock.unlock();

    // The calling thread participates too.
    tls_in_worker = true;
    drain();
    tls_in_worker = false;

    lock.lock();
    done_.wait(lock, [this] { return pending_workers_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void drain() {
    for (;;) {
      const std::size_t i = next_.fetch_add(1);
      if (i >= job_size_) break;
      try {
        (*job_)(i);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
        next_.store(job_size_);
      }
    }
  }

  void worker_loop() {
    tls_in_worker = true;
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
      }
      drain();
      {
        std::lock_guard lock(mutex_);
        if (--pending_workers_ == 0) done_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_size_ = 0;
  std::atomic<std::size_t> next_{0};
  int pending_workers_ = 0;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

std::mutex g_config_mutex;
std::mutex g_run_mutex;
int g_threads = 1;
std::unique_ptr<ThreadPool> g_pool;

}  // namespace

void set_thread_count(int threads) {
  std::lock_guard lock(g_config_mutex);
  threads = std::max(1, threads);
  if (threads == g_threads) return;
  std::lock_guard run_lock(g_run_mutex);
  g_pool.reset();
  g_threads = threads;
  if (threads > 1) g_pool = std::make_unique<ThreadPool>(threads - 1);
}

int thread_count() noexcept { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (tls_in_worker || g_threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::unique_lock lock(g_run_mutex, std::try_to_lock);
  if (!lock.owns_lock() || !g_pool) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  g_pool->run(n, fn);
}

}  // namespace ubsb
