#include "dbo/ces.hpp"

#include <cmath>
#include <stdexcept>

namespace dbo {

Duration BatchingParams::window() const {
  return Duration(std::llround(static_cast<double>(delta.count()) * (1.0 + kappa)));
}

std::vector<MarketDataPoint> generate_points(Duration interval, Duration horizon) {
  if (interval <= Duration::zero()) throw std::invalid_argument("generate_points: interval must be positive");
  std::vector<MarketDataPoint> points;
  if (horizon <= Duration::zero()) return points;
  points.reserve(static_cast<std::size_t>((horizon.count() + interval.count() - 1) / interval.count()));
  for (std::uint64_t x = 0;; ++x) {
    const Duration g = interval * static_cast<std::int64_t>(x);
    if (g >= horizon) break;
    points.push_back({PointId(x), TimePoint::origin() + g, BatchId(0)});
  }
  return points;
}

std::vector<Batch> assign_batches(std::vector<MarketDataPoint>& points, const BatchingParams& params) {
  if (params.delta <= Duration::zero()) throw std::invalid_argument("assign_batches: delta must be positive");
  if (!(params.kappa > 0.0)) throw std::invalid_argument("assign_batches: kappa must be positive");
  const std::int64_t w = params.window().count();
  std::vector<Batch> batches;
  std::vector<MarketDataPoint> out;
  out.reserve(points.size());
  auto open_window = [&](std::uint64_t index) {
    const auto start = static_cast<std::int64_t>(index) * w;
    batches.push_back(Batch{BatchId(index), {}, TimePoint(start), TimePoint(start + w)});
  };
  auto append = [&](MarketDataPoint p) {
    if (params.keepalive) p.id = PointId(out.size());
    p.batch = batches.back().id;
    out.push_back(p);
    batches.back().points.push_back(p);
  };
  for (const auto& p : points) {
    const auto index = static_cast<std::uint64_t>(p.generated_at.count() / w);
    if (params.keepalive) {
      // Markers sit at their window start and take the next point id, so
      // ids stay dense and increasing in generation time.
      const std::uint64_t next = batches.empty() ? 0 : batches.back().id.value + 1;
      for (std::uint64_t k = next; k < index; ++k) {
        open_window(k);
        append(MarketDataPoint{PointId(0), batches.back().window_start, BatchId(k), true});
      }
    }
    if (batches.empty() || batches.back().id.value != index) open_window(index);
    append(p);
  }
  points = std::move(out);
  return batches;
}

std::vector<Batch> singleton_batches(std::vector<MarketDataPoint>& points) {
  std::vector<Batch> batches;
  batches.reserve(points.size());
  for (auto& p : points) {
    p.batch = BatchId(p.id.value);
    batches.push_back(Batch{p.batch, {p}, p.generated_at, p.generated_at + Duration::ns(1)});
  }
  return batches;
}

}  // namespace dbo
