#include "dbo/types.hpp"

#include <stdexcept>

namespace dbo {

std::ostream& operator<<(std::ostream& os, const DeliveryClock& dc) {
  os << '<';
  if (dc.last_point) {
    os << *dc.last_point;
  } else {
    os << "pre";
  }
  return os << ", " << format_us(dc.elapsed.count()) << "us>";
}

DcOrdering dc_compare(const DeliveryClock& a, const DeliveryClock& b) {
  const auto c = a <=> b;
  if (c < 0) return DcOrdering::Less;
  if (c > 0) return DcOrdering::Greater;
  return DcOrdering::Equal;
}

Duration apply_drift(Duration elapsed, DriftPpm drift) {
  if (drift.value == 0) return elapsed;
  if (drift.value <= -1'000'000) throw std::invalid_argument("drift must exceed -100%");
  // Integer division truncates toward zero; for non-negative elapsed the
  // result stays non-decreasing in elapsed.
  return elapsed + Duration(detail::checked_mul(elapsed.count(), drift.value) / 1'000'000);
}

DeliveryClock dc_read(PointId last_point, TimePoint delivered_at, TimePoint now, DriftPpm drift) {
  if (now < delivered_at) throw std::invalid_argument("dc_read: now precedes last delivery");
  return DeliveryClock{last_point, apply_drift(now - delivered_at, drift)};
}

TradeView project(const TaggedTrade& t, TimePoint stamped_at) {
  if (!t.dc_tag) throw std::invalid_argument("project: trade has no delivery clock tag");
  return TradeView{t.owner, t.seq, *t.dc_tag, stamped_at};
}

}  // namespace dbo
