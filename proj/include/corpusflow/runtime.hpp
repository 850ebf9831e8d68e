#pragma once

// Threads around a TaskEngine: a dispatcher that expires timeouts and hands
// out assignments, one executor thread per in-flight unit (bounded by node
// capacities), and a health prober for remote workers.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "corpusflow/task_engine.hpp"

namespace corpusflow::tasks {

struct RuntimeOptions {
  std::chrono::milliseconds tick{20};
  std::chrono::milliseconds heartbeat{10000};
};

class Runtime {
 public:
  // Runs one unit; throws on failure.
  using Executor = std::function<UnitResult(const Assignment&)>;
  using HealthProbe = std::function<bool(const WorkerNode&)>;

  Runtime(TaskEngine& engine, Executor executor, HealthProbe probe, RuntimeOptions options = {});
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  void start();
  // Stops dispatching and joins every thread; running units finish first.
  void stop();
  void wake();

  // True when the task finished within the timeout.
  bool wait(const std::string& task_id, std::chrono::milliseconds timeout);

 private:
  struct Job {
    std::thread thread;
    std::atomic<bool> finished{false};
  };

  void dispatch_loop();
  void health_loop();
  void run(Assignment assignment, Job* job);
  void reap(bool all);

  TaskEngine& engine_;
  Executor executor_;
  HealthProbe probe_;
  RuntimeOptions options_;

  std::mutex mutex_;
  std::condition_variable wake_cv_;
  std::condition_variable done_cv_;
  bool stopping_ = false;
  bool kicked_ = false;
  std::thread dispatcher_;
  std::thread prober_;
  std::mutex jobs_mutex_;
  std::list<std::unique_ptr<Job>> jobs_;
};

}  // namespace corpusflow::tasks
