#pragma once

// Object memory: per-buffer FIFO ring of past representations plus the
// lifecycle state machine. The buffer index is the persistent track id.
// Reachable transitions: Free->Active (activate), {Active,Dormant}->Active
// (write), Active->Dormant(1) and Dormant(c)->Dormant(c+1)|Terminated
// (mark_missed). Terminated buffers are never written again within a video.

#include <deque>
#include <stdexcept>
#include <vector>

#include "slottrack/core/tensor.hpp"

namespace slottrack::mem {

enum class BufferState { Free, Active, Dormant, Terminated };

template <typename T>
class MemoryBank {
 public:
  struct Entry {
    core::Tensor<T> repr;  // 1 x d
    int t = 0;
  };

  struct Buffer {
    BufferState state = BufferState::Free;
    int missed = 0;  // meaningful in Dormant only, in [1, tau_out]
    std::deque<Entry> ring;
    int activated_at = -1;
    int terminated_at = -1;
  };

  MemoryBank(int capacity, int t_max, int tau_out)
      : t_max_(t_max), tau_out_(tau_out), buffers_(capacity) {
    if (capacity < 1 || t_max < 1 || tau_out < 1)
      throw std::invalid_argument("memory bank: bad dimensions");
  }

  int capacity() const { return static_cast<int>(buffers_.size()); }
  int t_max() const { return t_max_; }
  int tau_out() const { return tau_out_; }

  bool has_free() const {
    for (const auto& b : buffers_)
      if (b.state == BufferState::Free) return true;
    return false;
  }

  int activate(const core::Tensor<T>& init, int t) {
    check_repr(init);
    for (size_t i = 0; i < buffers_.size(); ++i) {
      auto& b = buffers_[i];
      if (b.state != BufferState::Free) continue;
      b.state = BufferState::Active;
      b.missed = 0;
      b.activated_at = t;
      b.ring.push_back({init, t});
      return static_cast<int>(i);
    }
    throw std::runtime_error("memory bank: capacity exhausted");
  }

  void write(int id, const core::Tensor<T>& repr, int t) {
    auto& b = at(id);
    if (b.state != BufferState::Active && b.state != BufferState::Dormant)
      throw std::runtime_error("memory bank: write to a buffer that is not alive");
    check_repr(repr);
    b.ring.push_back({repr, t});
    if (static_cast<int>(b.ring.size()) > t_max_) b.ring.pop_front();
    b.state = BufferState::Active;
    b.missed = 0;
  }

  void mark_missed(int id) {
    auto& b = at(id);
    if (b.state == BufferState::Active) {
      b.state = BufferState::Dormant;
      b.missed = 1;
    } else if (b.state == BufferState::Dormant) {
      if (b.missed + 1 > tau_out_) {
        b.state = BufferState::Terminated;
      } else {
        ++b.missed;
      }
    } else {
      throw std::runtime_error("memory bank: mark_missed on a buffer that is not alive");
    }
  }

  void set_terminated_at(int id, int t) { at(id).terminated_at = t; }

  BufferState state(int id) const { return at(id).state; }
  int missed_count(int id) const { return at(id).missed; }
  const Buffer& buffer(int id) const { return at(id); }

  // Alive (Active or Dormant) buffer ids, ascending; the rollout row order.
  std::vector<int> live_ids() const {
    std::vector<int> ids;
    for (size_t i = 0; i < buffers_.size(); ++i)
      if (buffers_[i].state == BufferState::Active || buffers_[i].state == BufferState::Dormant)
        ids.push_back(static_cast<int>(i));
    return ids;
  }

  int active_count() const {
    int n = 0;
    for (const auto& b : buffers_)
      if (b.state != BufferState::Free && b.state != BufferState::Terminated) ++n;
    return n;
  }

  // Most recent stored entry per live buffer (the "last tracks" query).
  core::Tensor<T> last_entries() const {
    std::vector<core::Tensor<T>> rows;
    for (int id : live_ids()) rows.push_back(at(id).ring.back().repr);
    return core::concat_rows(rows);
  }

 private:
  void check_repr(const core::Tensor<T>& r) const {
    if (r.rows() != 1) throw std::invalid_argument("memory bank: entry must be a single row");
    if (dim_ == 0) dim_ = r.cols();
    if (r.cols() != dim_) throw std::invalid_argument("memory bank: entry width mismatch");
  }

  Buffer& at(int id) {
    if (id < 0 || id >= capacity()) throw std::invalid_argument("memory bank: bad buffer id");
    return buffers_[id];
  }
  const Buffer& at(int id) const {
    if (id < 0 || id >= capacity()) throw std::invalid_argument("memory bank: bad buffer id");
    return buffers_[id];
  }

  int t_max_;
  int tau_out_;
  mutable int dim_ = 0;
  std::vector<Buffer> buffers_;
};

}  // namespace slottrack::mem
