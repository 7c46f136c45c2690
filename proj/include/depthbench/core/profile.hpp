#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace depthbench {

/// Multiply-accumulate tally collected while a MacProfileScope is active.
/// Only convolutions report; activations, BN, pooling and resampling count 0.
struct MacEntry {
  std::string label;
  std::uint64_t macs = 0;
};

struct MacProfile {
  std::vector<MacEntry> entries;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& e : entries) t += e.macs;
    return t;
  }
};

namespace detail {
inline MacProfile*& active_profile() {
  thread_local MacProfile* profile = nullptr;
  return profile;
}
inline std::string& current_label() {
  thread_local std::string label;
  return label;
}
}  // namespace detail

class MacProfileScope {
 public:
  explicit MacProfileScope(MacProfile& profile) : previous_(detail::active_profile()) {
    detail::active_profile() = &profile;
  }
  ~MacProfileScope() { detail::active_profile() = previous_; }
  MacProfileScope(const MacProfileScope&) = delete;
  MacProfileScope& operator=(const MacProfileScope&) = delete;

 private:
  MacProfile* previous_;
};

/// Names the layer that subsequent op-level MAC records belong to.
class LayerLabel {
 public:
  explicit LayerLabel(std::string label) : previous_(std::exchange(detail::current_label(), std::move(label))) {}
  ~LayerLabel() { detail::current_label() = std::move(previous_); }
  LayerLabel(const LayerLabel&) = delete;
  LayerLabel& operator=(const LayerLabel&) = delete;

 private:
  std::string previous_;
};

inline void record_macs(const char* op, std::uint64_t macs) {
  if (auto* p = detail::active_profile()) {
    const auto& label = detail::current_label();
    p->entries.push_back({label.empty() ? std::string(op) : label, macs});
  }
}

}  // namespace depthbench
