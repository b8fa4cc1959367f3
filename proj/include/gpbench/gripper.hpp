#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gpbench {

// Per-frame gripper closure fraction: 0 = fully open, 1 = fully closed.
struct GripperSignal {
  std::vector<double> values;
  double fps = 30.0;
};

void validate_signal(const GripperSignal& sig);

// Half-open in spirit: s = first sustained-closed frame, e = first
// fully-reopened frame after it.
struct Segment {
  std::size_t s = 0;
  std::size_t e = 0;
};

struct SegmentationConfig {
  double theta_close = 0.7;
  double theta_open = 0.3;
  std::size_t min_dwell = 3;  // frames a level must persist to count
  std::size_t min_gap = 2;    // segments closer than this are merged

  void validate() const {
    if (!(0.0 <= theta_open && theta_open < theta_close && theta_close <= 1.0))
      throw std::invalid_argument("SegmentationConfig: need 0 <= theta_open < theta_close <= 1");
    if (min_dwell < 1)
      throw std::invalid_argument("SegmentationConfig: min_dwell >= 1");
  }
};

// Hysteresis state machine over the closure signal. A segment opens at the
// first frame of a run of >= min_dwell frames at or above theta_close and
// closes at the first frame of a subsequent run of >= min_dwell frames at or
// below theta_open. A trailing close with no reopen is discarded. A partial
// reopen that never reaches theta_open continues the current segment.
std::vector<Segment> segment_signal(const GripperSignal& sig,
                                    const SegmentationConfig& cfg);

}  // namespace gpbench
