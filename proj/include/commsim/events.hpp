// events.hpp — deterministic discrete-event kernel
#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "commsim/types.hpp"

namespace commsim {

// Fixed module dispatch priorities within one cycle: memory responses become
// visible to consumers in the cycle they complete.
enum : uint32_t {
  PRIO_DRAM = 0,
  PRIO_BUS = 1,
  PRIO_DMAC = 2,
  PRIO_CTRL = 3,
};

/// Anything that receives scheduled callbacks.
struct EventSink {
  virtual ~EventSink() = default;
  virtual void on_event(uint32_t tag, uint64_t arg) = 0;
};

/// Events dispatch in (cycle, priority, sequence) order — a total order, so
/// identical inputs replay identically.
class EventQueue {
 public:
  cycle_t now() const { return now_; }
  uint64_t dispatched() const { return dispatched_; }

  void schedule_at(cycle_t cycle, uint32_t priority, EventSink* sink,
                   uint32_t tag, uint64_t arg = 0) {
    if (cycle < now_)
      throw std::logic_error("event scheduled in the past");
    heap_.push(Ev{cycle, priority, seq_++, sink, tag, arg});
  }

  void schedule_in(cycle_t delta, uint32_t priority, EventSink* sink,
                   uint32_t tag, uint64_t arg = 0) {
    schedule_at(now_ + delta, priority, sink, tag, arg);
  }

  bool empty() const { return heap_.empty(); }

  /// Dispatch the next event; false when drained.
  bool step() {
    if (heap_.empty()) return false;
    Ev e = heap_.top();
    heap_.pop();
    now_ = e.cycle;
    dispatched_++;
    e.sink->on_event(e.tag, e.arg);
    return true;
  }

  void run() {
    while (step()) {}
  }

 private:
  struct Ev {
    cycle_t cycle;
    uint32_t priority;
    uint64_t seq;
    EventSink* sink;
    uint32_t tag;
    uint64_t arg;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.cycle != b.cycle) return a.cycle > b.cycle;
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Ev, std::vector<Ev>, Later> heap_;
  cycle_t now_ = 0;
  uint64_t seq_ = 0;
  uint64_t dispatched_ = 0;
};

}  // namespace commsim
