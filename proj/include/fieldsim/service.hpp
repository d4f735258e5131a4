#pragma once

// Long-running gateway mode: one worker thread owns the Simulation and
// paces it against the wall clock. Request handlers never touch the engine
// directly; mutations go through a FIFO queue drained between ticks and
// readers get immutable snapshots, log slices and per-tick frames.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

#include "fieldsim/controller.hpp"
#include "fieldsim/scenario.hpp"
#include "fieldsim/simulation.hpp"
#include "fieldsim/telemetry.hpp"

namespace fieldsim {

class NotRunning : public std::runtime_error {
 public:
  NotRunning() : std::runtime_error("no active run") {}
  explicit NotRunning(const std::string& what) : std::runtime_error(what) {}
};

/// Everything appended to the log while processing one tick.
struct Frame {
  std::uint64_t seq = 0;
  SimMinute tick = 0;
  std::vector<TelemetryRecord> records;
};

/// Bounded per-client frame queue. A client that falls `capacity` frames
/// behind is disconnected instead of silently skipping frames.
class Subscription {
 public:
  enum class Status { Frame, Timeout, Overflow, Ended };

  struct Poll {
    Status status = Status::Timeout;
    std::optional<Frame> frame;
  };

  explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

  Poll next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || overflowed_ || ended_; });
    if (!queue_.empty()) {
      Poll p{Status::Frame, std::move(queue_.front())};
      queue_.pop_front();
      return p;
    }
    if (overflowed_) return {Status::Overflow, std::nullopt};
    if (ended_) return {Status::Ended, std::nullopt};
    return {Status::Timeout, std::nullopt};
  }

  bool disconnected() const {
    std::lock_guard lock(mu_);
    return overflowed_;
  }

  /// False once the subscriber has been dropped.
  bool push(const Frame& f) {
    std::lock_guard lock(mu_);
    if (overflowed_ || ended_) return false;
    if (queue_.size() >= capacity_) {
      overflowed_ = true;
      queue_.clear();
      cv_.notify_all();
      return false;
    }
    queue_.push_back(f);
    cv_.notify_all();
    return true;
  }

  void end() {
    std::lock_guard lock(mu_);
    ended_ = true;
    cv_.notify_all();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> queue_;
  std::size_t capacity_;
  bool overflowed_ = false;
  bool ended_ = false;
};

struct ServiceOptions {
  double pace = 1.0;  // sim-minutes per wall-second; <= 0 runs unpaced
  std::size_t subscriber_capacity = 4096;
  bool manual = false;  // no worker; ticks advance only through advance()
};

class GatewayService {
 public:
  GatewayService() = default;
  GatewayService(const GatewayService&) = delete;
  GatewayService& operator=(const GatewayService&) = delete;
  ~GatewayService() { stop(); }

  /// Starts a run; the tick-0 frame is processed before this returns so a
  /// snapshot is available immediately.
  void start(ScenarioConfig config, ServiceOptions options = {}) {
    stop();
    std::lock_guard lock(mu_);
    options_ = options;
    projected_rules_ = config.rules;
    sim_.emplace(std::move(config));
    queue_.clear();
    frame_seq_ = 0;
    stop_requested_ = false;
    step_locked();
    if (!options_.manual) worker_ = std::thread([this] { work(); });
  }

  /// Manual mode only: processes up to `ticks` ticks; returns how many ran.
  int advance(int ticks = 1) {
    std::lock_guard lock(mu_);
    require_running();
    if (!options_.manual) throw std::logic_error("advance() needs ServiceOptions::manual");
    int n = 0;
    for (; n < ticks && !sim_->finished(); ++n) step_locked();
    return n;
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (!sim_) return;
      stop_requested_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
    std::lock_guard lock(mu_);
    for (auto& weak : subscribers_)
      if (auto s = weak.lock()) s->end();
    subscribers_.clear();
    sim_.reset();
  }

  bool running() const {
    std::lock_guard lock(mu_);
    return sim_.has_value();
  }

  Snapshot get_state() const {
    std::lock_guard lock(mu_);
    require_running();
    return sim_->snapshot();
  }

  bool finished() const {
    std::lock_guard lock(mu_);
    require_running();
    return sim_->finished();
  }

  /// Blocks until the run reaches its duration (or stops).
  void wait_until_finished() const {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return !sim_ || sim_->finished(); });
  }

  // Mutations are validated against the state they will see (including
  // earlier queued mutations) and rejected synchronously.

  void post_override(NodeId target, OverrideMode mode) {
    std::lock_guard lock(mu_);
    require_mutable();
    if (!control_topology(sim_->config()).actuators.contains(target))
      throw NotFound("unknown actuator " + to_string(target));
    queue_.push_back([target, mode](Simulation& s) { s.override_actuator(target, mode); });
    cv_.notify_all();
  }

  void post_rule_patch(const RulePatch& patch) {
    std::lock_guard lock(mu_);
    require_mutable();
    projected_rules_ = update_rules(projected_rules_, patch);
    queue_.push_back([patch](Simulation& s) { s.patch_rules(patch); });
    cv_.notify_all();
  }

  /// Without a start time the event begins on the next processed tick.
  void post_event(EnvEvent event, bool start_on_next_tick) {
    std::lock_guard lock(mu_);
    require_mutable();
    ScenarioConfig view = sim_->config();
    view.rules = projected_rules_;
    EnvEvent probe = event;
    if (start_on_next_tick) probe.start = sim_->next_tick();
    auto errs = validate_event(probe, view, "event");
    if (!start_on_next_tick && event.start < sim_->next_tick())
      errs.push_back({"event.start", "must be >= next tick " + std::to_string(sim_->next_tick())});
    if (!errs.empty()) throw ValidationFailure(std::move(errs));
    queue_.push_back([event, start_on_next_tick](Simulation& s) {
      EnvEvent e = event;
      if (start_on_next_tick) e.start = s.next_tick();
      s.inject_event(e);
    });
    cv_.notify_all();
  }

  std::vector<TelemetryRecord> query(SimMinute from, SimMinute to, const RecordFilter& filter = {}) const {
    std::lock_guard lock(mu_);
    require_running();
    return sim_->telemetry().query(from, to, filter);
  }

  std::string export_csv() const {
    std::lock_guard lock(mu_);
    require_running();
    return fieldsim::export_csv(sim_->telemetry());
  }

  SimResult result() const {
    std::lock_guard lock(mu_);
    require_running();
    return sim_->result();
  }

  /// Frames start with the next processed tick; earlier history comes from query().
  std::shared_ptr<Subscription> subscribe() {
    std::lock_guard lock(mu_);
    require_running();
    auto sub = std::make_shared<Subscription>(options_.subscriber_capacity);
    if (sim_->finished())
      sub->end();
    else
      subscribers_.push_back(sub);
    return sub;
  }

  /// Next tick the worker will process (history before it is queryable).
  SimMinute next_tick() const {
    std::lock_guard lock(mu_);
    require_running();
    return sim_->next_tick();
  }

 private:
  void require_running() const {
    if (!sim_) throw NotRunning();
  }

  void require_mutable() const {
    require_running();
    if (sim_->finished()) throw NotRunning("run finished");
  }

  void step_locked() {
    while (!queue_.empty()) {
      auto m = std::move(queue_.front());
      queue_.pop_front();
      try {
        m(*sim_);
      } catch (const std::exception&) {
        // Validated at post time; a failure here means state moved under
        // the mutation (e.g. an event whose start tick already passed).
      }
    }
    const SimMinute tick = sim_->next_tick();
    const auto [first, last] = sim_->step();
    Frame f{++frame_seq_, tick, {}};
    const auto& recs = sim_->telemetry().records();
    f.records.assign(recs.begin() + static_cast<std::ptrdiff_t>(first), recs.begin() + static_cast<std::ptrdiff_t>(last));
    std::erase_if(subscribers_, [&](const std::weak_ptr<Subscription>& weak) {
      auto s = weak.lock();
      return !s || !s->push(f);
    });
    if (sim_->finished()) {
      for (auto& weak : subscribers_)
        if (auto s = weak.lock()) s->end();
      subscribers_.clear();
      done_cv_.notify_all();
    }
  }

  void work() {
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    std::int64_t ticks = 1;  // tick 0 ran in start()
    std::unique_lock lock(mu_);
    while (!stop_requested_) {
      if (sim_->finished()) {
        cv_.wait(lock, [&] { return stop_requested_.load(); });
        break;
      }
      if (options_.pace > 0) {
        const double seconds = static_cast<double>(ticks * sim_->config().tick) / options_.pace;
        const auto deadline = started + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(seconds));
        if (cv_.wait_until(lock, deadline, [&] { return stop_requested_.load(); })) break;
      }
      step_locked();
      ++ticks;
      if (options_.pace <= 0) {
        // Let readers in between unpaced ticks.
        lock.unlock();
        std::this_thread::yield();
        lock.lock();
      }
    }
    done_cv_.notify_all();
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  mutable std::condition_variable done_cv_;
  std::optional<Simulation> sim_;
  ServiceOptions options_;
  RuleConfig projected_rules_;
  std::deque<std::function<void(Simulation&)>> queue_;
  std::vector<std::weak_ptr<Subscription>> subscribers_;
  std::uint64_t frame_seq_ = 0;
  std::atomic<bool> stop_requested_{false};
  std::thread worker_;
};

}  // namespace fieldsim
