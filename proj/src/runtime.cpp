#include "corpusflow/runtime.hpp"

#include <iostream>

#include "corpusflow/error.hpp"

namespace corpusflow::tasks {

Runtime::Runtime(TaskEngine& engine, Executor executor, HealthProbe probe, RuntimeOptions options)
    : engine_(engine), executor_(std::move(executor)), probe_(std::move(probe)), options_(options) {}

Runtime::~Runtime() { stop(); }

void Runtime::start() {
  std::lock_guard lock(mutex_);
  if (dispatcher_.joinable()) return;
  stopping_ = false;
  dispatcher_ = std::thread([this] { dispatch_loop(); });
  prober_ = std::thread([this] { health_loop(); });
}

void Runtime::stop() {
  {
    std::lock_guard lock(mutex_);
    if (!dispatcher_.joinable()) return;
    stopping_ = true;
  }
  wake_cv_.notify_all();
  dispatcher_.join();
  prober_.join();
  reap(true);
  done_cv_.notify_all();
}

void Runtime::wake() {
  {
    std::lock_guard lock(mutex_);
    kicked_ = true;
  }
  wake_cv_.notify_all();
}

bool Runtime::wait(const std::string& task_id, std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(mutex_);
  while (!engine_.is_finished(task_id)) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    done_cv_.wait_for(lock, std::chrono::milliseconds(50));
  }
  return true;
}

void Runtime::reap(bool all) {
  std::lock_guard lock(jobs_mutex_);
  for (auto it = jobs_.begin(); it != jobs_.end();) {
    if (all || (*it)->finished) {
      (*it)->thread.join();
      it = jobs_.erase(it);
    } else {
      ++it;
    }
  }
}

void Runtime::dispatch_loop() {
  std::unique_lock lock(mutex_);
  while (!stopping_) {
    lock.unlock();
    reap(false);
    engine_.expire_timeouts();
    auto assignments = engine_.dispatch();
    {
      std::lock_guard jl(jobs_mutex_);
      for (auto& a : assignments) {
        auto job = std::make_unique<Job>();
        Job* raw = job.get();
        job->thread = std::thread([this, a = std::move(a), raw]() mutable { run(std::move(a), raw); });
        jobs_.push_back(std::move(job));
      }
    }
    lock.lock();
    wake_cv_.wait_for(lock, options_.tick, [this] { return stopping_ || kicked_; });
    kicked_ = false;
  }
}

void Runtime::health_loop() {
  std::unique_lock lock(mutex_);
  while (!stopping_) {
    wake_cv_.wait_for(lock, options_.heartbeat, [this] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    for (const auto& node : engine_.workers()) {
      if (node.local) continue;
      bool ok = false;
      try {
        ok = probe_(node);
      } catch (const std::exception&) {
        ok = false;
      }
      try {
        engine_.report_health(node.node_id, ok);
      } catch (const NotFound&) {
        // deregistered while probing
      }
    }
    lock.lock();
  }
}

void Runtime::run(Assignment a, Job* job) {
  Outcome outcome;
  try {
    outcome = Outcome::ok(executor_(a));
  } catch (const std::exception& e) {
    outcome = Outcome::failure(e.what());
  }
  try {
    engine_.report_result(a.node_id, a.unit_id, std::move(outcome));
  } catch (const Error& e) {
    // The unit was reassigned while this attempt ran (timeout, dead node).
    std::cerr << "dropped result for " << a.unit_id << ": " << e.what() << "\n";
  }
  job->finished = true;
  {
    std::lock_guard lock(mutex_);
    kicked_ = true;
  }
  wake_cv_.notify_all();
  done_cv_.notify_all();
}

}  // namespace corpusflow::tasks
