#pragma once

#include <functional>
#include <vector>

#include "slle/errors.hpp"

namespace slle {

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double max_change = 0.0;  // largest absolute parameter change in this iteration
};

/// Per-iteration record of an EM run; iteration indices strictly increase.
struct EMTrace {
  std::vector<TraceEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  const TraceEntry& back() const { return entries.back(); }
};

using IterationObserver = std::function<void(const TraceEntry&)>;

/// The objective became non-finite; carries the iterations completed so far.
class DivergedError : public NumericalError {
 public:
  DivergedError(const std::string& what, EMTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}

  const EMTrace& trace() const { return trace_; }

 private:
  EMTrace trace_;
};

/// Relative objective change used as the EM stopping rule.
inline double relative_change(double previous, double current) {
  const double denom = previous < 0 ? -previous : previous;
  const double diff = current - previous;
  return (diff < 0 ? -diff : diff) / (denom > 1.0 ? denom : 1.0);
}

}  // namespace slle
