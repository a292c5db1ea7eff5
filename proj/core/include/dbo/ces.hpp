#pragma once

#include <vector>

#include "dbo/time.hpp"
#include "dbo/types.hpp"

namespace dbo {

/// Batch window stretch: window width is (1 + kappa) * delta.
struct BatchingParams {
  Duration delta;
  double kappa = 0.25;
  /// Emit zero-point batches for empty windows so delivery clocks keep
  /// advancing in quiet markets.
  bool keepalive = false;

  /// Window width rounded to the nearest nanosecond.
  Duration window() const;
};

/// Market data generated at G(x) = x * interval for every G(x) < horizon.
/// Points carry batch id 0 until assigned.
std::vector<MarketDataPoint> generate_points(Duration interval, Duration horizon);

/// Groups points into fixed generation-time windows keyed from t = 0:
/// point x belongs to window floor(G(x) / W). Assigns `batch` on each point.
/// Throws std::invalid_argument unless delta > 0 and kappa > 0.
std::vector<Batch> assign_batches(std::vector<MarketDataPoint>& points, const BatchingParams& params);

/// One batch per point (used by schemes that deliver without batching).
std::vector<Batch> singleton_batches(std::vector<MarketDataPoint>& points);

}  // namespace dbo
