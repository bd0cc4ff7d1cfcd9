// dram.cpp — FR-FCFS scheduler, bank/page state machine, refresh
#include "commsim/dram.hpp"

#include <algorithm>

namespace commsim {

namespace {

enum : uint32_t {
  TAG_TRY = 0,
  TAG_REQ_DONE_READ = 2,
  TAG_REQ_DONE_WRITE = 3,
};

constexpr cycle_t kNever = ~cycle_t(0);

uint32_t ceil_div_u32(uint32_t a, uint32_t b) { return (a + b - 1) / b; }

}  // namespace

const char* to_string(DramCommand::Kind k) {
  switch (k) {
    case DramCommand::ACT: return "ACT";
    case DramCommand::RD: return "RD";
    case DramCommand::WR: return "WR";
    case DramCommand::PRE: return "PRE";
    default: return "REF";
  }
}

DramModel::DramModel(EventQueue& q, const DramConfig& cfg,
                     DramListener* listener, bool collect_trace)
    : q_(q), cfg_(cfg), listener_(listener), collect_trace_(collect_trace) {
  cfg_.validate();
  banks_.resize(cfg_.num_banks);
  queues_.resize(cfg_.num_banks);
  reserved_.resize(cfg_.num_banks, 0);
  next_refresh_ = cfg_.refresh_period;  // 0 = refresh disabled
}

// Refreshes are replayed lazily: commands only ever issue inside a kick, so
// any refresh whose nominal time has passed is applied (pages closed, REF
// recorded, banks blocked for refresh_duration) before issuing resumes.
// This keeps the event queue free of self-perpetuating timers.
void DramModel::apply_refreshes(cycle_t t) {
  if (cfg_.refresh_period == 0) return;
  while (t >= next_refresh_) {
    const cycle_t start = std::max(next_refresh_, data_bus_free_);
    for (uint32_t b = 0; b < cfg_.num_banks; ++b)
      if (banks_[b].active)
        precharge(b, std::max(start, banks_[b].col_end), 255);
    emit(DramCommand::REF, 255, 0, 0, start, 255);
    refresh_until_ = start + cfg_.refresh_duration;
    for (BankState& bk : banks_)
      bk.ready_at = std::max(bk.ready_at, refresh_until_);
    next_refresh_ += cfg_.refresh_period;
  }
}

// ============================================================================
// Queue admission
// ============================================================================

bool DramModel::try_reserve(const BurstRequest& req) {
  const uint32_t bank = cfg_.bank_of(req.start_addr);
  const uint32_t units = ceil_div_u32(req.beats, cfg_.dram_burst_beats);
  if (queues_[bank].size() + reserved_[bank] + units > cfg_.queue_depth)
    return false;
  reserved_[bank] += units;
  return true;
}

uint64_t DramModel::enqueue(const BurstRequest& req, bool write_data_ready) {
  const uint64_t id = next_req_id_++;
  const uint32_t bank = cfg_.bank_of(req.start_addr);
  const bool is_write = req.direction == Dir::Write;
  if (is_write && !write_data_ready) requests_[id] = Request{};

  uint32_t offset = 0;
  addr_t a = req.start_addr;
  uint32_t left = req.beats;
  uint32_t units = 0;
  while (left > 0) {
    const uint32_t n = std::min(left, cfg_.dram_burst_beats);
    ColUnit u;
    u.req_id = id;
    u.addr = a;
    u.beats = n;
    u.beat_offset = offset;
    u.is_write = is_write;
    u.last_of_request = (left == n);
    u.arrival_seq = arrival_seq_++;
    u.dmac = req.dmac;
    u.write_beats_needed = (is_write && !write_data_ready) ? offset + n : 0;
    queues_[bank].push_back(u);
    pending_units_++;
    units++;
    a += n;
    offset += n;
    left -= n;
  }
  if (queues_[bank].size() > cfg_.queue_depth) violations_++;  // backpressure breach
  reserved_[bank] -= std::min(reserved_[bank], units);
  kick();
  return id;
}

void DramModel::write_data_progress(uint64_t req_id, uint32_t beats_delivered) {
  auto it = requests_.find(req_id);
  if (it == requests_.end()) return;
  it->second.write_beats_seen = std::max(it->second.write_beats_seen, beats_delivered);
  kick();
}

// ============================================================================
// Command emission
// ============================================================================

void DramModel::emit(DramCommand::Kind kind, uint32_t bank, uint64_t row,
                     uint32_t col, cycle_t cycle, uint8_t dmac) {
  switch (kind) {
    case DramCommand::ACT: counts_.activates++; break;
    case DramCommand::PRE: counts_.precharges++; break;
    case DramCommand::RD:
    case DramCommand::WR: counts_.column_cmds++; break;
    default: break;
  }
  if (collect_trace_)
    trace_.push_back(DramCommand{kind, uint8_t(bank), row, col, cycle, dmac});
}

void DramModel::precharge(uint32_t bank, cycle_t t, uint8_t dmac) {
  BankState& bk = banks_[bank];
  if (!bk.active || t < bk.col_end) violations_++;
  emit(DramCommand::PRE, bank, bk.row, 0, t, dmac);
  bk.active = false;
  bk.ready_at = std::max<cycle_t>(t + cfg_.t_rp, bk.act_cycle + cfg_.t_rc);
}

cycle_t DramModel::col_bus_ready(Dir dir, cycle_t) const {
  cycle_t ready = data_bus_free_;
  if (dir_known_ && dir != last_dir_) ready += cfg_.turnaround;
  return ready;
}

bool DramModel::unit_eligible(const ColUnit& u) const {
  if (!u.is_write || u.write_beats_needed == 0) return true;
  auto it = requests_.find(u.req_id);
  return it == requests_.end() ||
         it->second.write_beats_seen >= u.write_beats_needed;
}

// ============================================================================
// Scheduler
// ============================================================================

std::optional<uint64_t> DramModel::fr_fcfs_pick(cycle_t cycle) const {
  const ColUnit* best = nullptr;
  for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
    const BankState& bk = banks_[b];
    if (!bk.active || bk.cols_since_act >= cfg_.close_after_cols) continue;
    if (cycle < bk.act_cycle + cfg_.t_rcd) continue;
    for (const ColUnit& u : queues_[b]) {
      if (cfg_.row_of(u.addr) != bk.row) continue;
      // first row hit in arrival order owns this bank's slot
      if (!unit_eligible(u)) break;
      const Dir dir = u.is_write ? Dir::Write : Dir::Read;
      if (cycle < col_bus_ready(dir, cycle)) break;
      if (!best || u.arrival_seq < best->arrival_seq) best = &u;
      break;
    }
  }
  if (!best) return std::nullopt;
  return best->req_id;
}

bool DramModel::issue_one(cycle_t t) {
  if (t < refresh_until_) return false;

  // 1) close-policy precharges that have come due
  for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
    BankState& bk = banks_[b];
    if (bk.active && bk.cols_since_act >= cfg_.close_after_cols &&
        t >= bk.col_end) {
      precharge(b, t, last_col_dmac_);
      return true;
    }
  }

  // 2) best ready column command (row hits only, oldest first)
  {
    uint32_t best_bank = 0;
    size_t best_idx = 0;
    const ColUnit* best = nullptr;
    for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
      BankState& bk = banks_[b];
      if (!bk.active || bk.cols_since_act >= cfg_.close_after_cols) continue;
      if (t < bk.act_cycle + cfg_.t_rcd) continue;
      for (size_t i = 0; i < queues_[b].size(); ++i) {
        const ColUnit& u = queues_[b][i];
        if (cfg_.row_of(u.addr) != bk.row) continue;
        if (!unit_eligible(u)) break;
        const Dir dir = u.is_write ? Dir::Write : Dir::Read;
        if (t < col_bus_ready(dir, t)) break;
        if (!best || u.arrival_seq < best->arrival_seq) {
          best = &u;
          best_bank = b;
          best_idx = i;
        }
        break;
      }
    }
    if (best) {
      const ColUnit u = *best;
      BankState& bk = banks_[best_bank];
      if (!bk.active || cfg_.row_of(u.addr) != bk.row ||
          t < bk.act_cycle + cfg_.t_rcd ||
          bk.cols_since_act >= cfg_.close_after_cols)
        violations_++;  // command-legality breach

      const Dir dir = u.is_write ? Dir::Write : Dir::Read;
      data_bus_free_ = t + cfg_.t_burst;
      last_dir_ = dir;
      dir_known_ = true;
      bk.cols_since_act++;
      bk.col_end = t + cfg_.t_burst;
      last_col_dmac_ = u.dmac;

      emit(u.is_write ? DramCommand::WR : DramCommand::RD, best_bank, bk.row,
           uint32_t(u.addr % cfg_.page_elements), t, u.dmac);
      if (!u.is_write) {
        beats_returned_ += u.beats;
        if (listener_) listener_->read_col_issued(u.req_id, u.beat_offset, u.beats, t);
      }
      if (u.last_of_request) {
        const cycle_t done =
            u.is_write ? t + cfg_.t_burst : t + cfg_.t_cl + cfg_.t_burst;
        q_.schedule_at(done, PRIO_DRAM, this,
                       u.is_write ? TAG_REQ_DONE_WRITE : TAG_REQ_DONE_READ,
                       u.req_id);
        if (u.is_write) requests_.erase(u.req_id);
      }
      queues_[best_bank].erase(queues_[best_bank].begin() + best_idx);
      pending_units_--;
      if (listener_) listener_->unit_dequeued();
      return true;
    }
  }

  // 3) lazy precharge: stale row blocking queued work
  for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
    BankState& bk = banks_[b];
    if (!bk.active || queues_[b].empty() || t < bk.col_end) continue;
    bool hit = false;
    for (const ColUnit& u : queues_[b])
      if (cfg_.row_of(u.addr) == bk.row) { hit = true; break; }
    if (!hit) {
      precharge(b, t, queues_[b].front().dmac);
      return true;
    }
  }

  // 4) activate for the oldest queued row
  for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
    BankState& bk = banks_[b];
    if (bk.active || queues_[b].empty() || t < bk.ready_at) continue;
    const ColUnit& u = queues_[b].front();
    bk.active = true;
    bk.row = cfg_.row_of(u.addr);
    bk.cols_since_act = 0;
    bk.act_cycle = t;
    emit(DramCommand::ACT, b, bk.row, 0, t, u.dmac);
    return true;
  }
  return false;
}

cycle_t DramModel::next_action_after(cycle_t t) const {
  cycle_t best = kNever;
  auto consider = [&](cycle_t c) {
    if (c > t && c < best) best = c;
  };
  if (refresh_until_ > t) {
    consider(refresh_until_);
    return best;
  }
  for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
    const BankState& bk = banks_[b];
    if (bk.active && bk.cols_since_act >= cfg_.close_after_cols) {
      consider(bk.col_end);
      continue;
    }
    if (bk.active) {
      bool hit = false;
      for (const ColUnit& u : queues_[b]) {
        if (cfg_.row_of(u.addr) != bk.row) continue;
        if (!unit_eligible(u)) break;  // woken by write_data_progress
        const Dir dir = u.is_write ? Dir::Write : Dir::Read;
        consider(std::max<cycle_t>(bk.act_cycle + cfg_.t_rcd,
                                   col_bus_ready(dir, t)));
        hit = true;
        break;
      }
      if (!hit && !queues_[b].empty()) {
        bool any_hit = false;
        for (const ColUnit& u : queues_[b])
          if (cfg_.row_of(u.addr) == bk.row) { any_hit = true; break; }
        if (!any_hit) consider(bk.col_end);  // lazy PRE
      }
    } else if (!queues_[b].empty()) {
      consider(bk.ready_at);  // ACT
    }
  }
  return best;
}

void DramModel::kick() {
  apply_refreshes(q_.now());
  while (issue_one(q_.now())) {}
  const cycle_t nxt = next_action_after(q_.now());
  if (nxt != kNever && nxt < next_try_) {
    next_try_ = nxt;
    q_.schedule_at(nxt, PRIO_DRAM, this, TAG_TRY);
  }
}

void DramModel::on_event(uint32_t tag, uint64_t arg) {
  switch (tag) {
    case TAG_TRY:
      if (q_.now() >= next_try_) next_try_ = kNever;
      kick();
      break;
    case TAG_REQ_DONE_READ:
    case TAG_REQ_DONE_WRITE:
      if (listener_) listener_->request_done(arg, q_.now());
      break;
    default:
      break;
  }
}

void DramModel::flush_open_pages() {
  for (uint32_t b = 0; b < cfg_.num_banks; ++b) {
    BankState& bk = banks_[b];
    if (bk.active)
      precharge(b, std::max(q_.now(), bk.col_end), last_col_dmac_);
  }
}

// ============================================================================
// Standalone harness
// ============================================================================

namespace {

struct ServiceHarness : EventSink, DramListener {
  EventQueue q;
  std::vector<std::pair<BurstRequest, cycle_t>> reqs;
  std::vector<cycle_t> completion;
  DramModel* dram = nullptr;

  void on_event(uint32_t, uint64_t arg) override {
    dram->enqueue(reqs[arg].first, /*write_data_ready=*/true);
  }
  void read_col_issued(uint64_t, uint32_t, uint32_t, cycle_t) override {}
  void unit_dequeued() override {}
  void request_done(uint64_t req_id, cycle_t done) override {
    completion[req_id] = done;
  }
};

}  // namespace

ServiceResult service_trace(
    const std::vector<std::pair<BurstRequest, cycle_t>>& requests,
    const DramConfig& cfg) {
  ServiceHarness h;
  h.reqs = requests;
  h.completion.assign(requests.size(), 0);
  DramModel dram(h.q, cfg, &h, /*collect_trace=*/true);
  h.dram = &dram;
  for (size_t i = 0; i < requests.size(); ++i)
    h.q.schedule_at(requests[i].second, PRIO_BUS, &h, 0, i);
  h.q.run();
  dram.flush_open_pages();

  ServiceResult r;
  r.completion = std::move(h.completion);
  r.trace = dram.trace();
  r.counts = dram.command_counts();
  return r;
}

}  // namespace commsim
