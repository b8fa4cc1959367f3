#include "gpbench/gripper.hpp"

#include <cmath>

namespace gpbench {

void validate_signal(const GripperSignal& sig) {
  if (sig.values.empty())
    throw std::invalid_argument("GripperSignal: empty");
  if (!(sig.fps > 0.0))
    throw std::invalid_argument("GripperSignal: fps must be positive");
  for (double v : sig.values)
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::invalid_argument("GripperSignal: value outside [0,1]");
}

namespace {

// Length of the run of frames from i satisfying the predicate.
template <typename Pred>
std::size_t run_length(const std::vector<double>& v, std::size_t i, Pred pred) {
  std::size_t n = 0;
  while (i + n < v.size() && pred(v[i + n])) ++n;
  return n;
}

}  // namespace

std::vector<Segment> segment_signal(const GripperSignal& sig,
                                    const SegmentationConfig& cfg) {
  validate_signal(sig);
  cfg.validate();
  const std::vector<double>& v = sig.values;
  const auto closed = [&](double x) { return x >= cfg.theta_close; };
  const auto open = [&](double x) { return x <= cfg.theta_open; };

  std::vector<Segment> segments;
  std::size_t i = 0;
  bool in_segment = false;
  std::size_t start = 0;
  while (i < v.size()) {
    if (!in_segment) {
      if (closed(v[i]) && run_length(v, i, closed) >= cfg.min_dwell) {
        start = i;
        in_segment = true;
        i += run_length(v, i, closed);
      } else {
        ++i;
      }
    } else {
      if (open(v[i]) && run_length(v, i, open) >= cfg.min_dwell) {
        segments.push_back({start, i});
        in_segment = false;
        i += run_length(v, i, open);
      } else {
        ++i;
      }
    }
  }
  // trailing close with no reopen: dropped

  if (cfg.min_gap > 0 && segments.size() > 1) {
    std::vector<Segment> merged;
    merged.push_back(segments[0]);
    for (std::size_t k = 1; k < segments.size(); ++k) {
      if (segments[k].s - merged.back().e < cfg.min_gap)
        merged.back().e = segments[k].e;
      else
        merged.push_back(segments[k]);
    }
    return merged;
  }
  return segments;
}

}  // namespace gpbench
