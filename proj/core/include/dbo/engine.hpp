#pragma once

#include "dbo/config.hpp"
#include "dbo/trade_log.hpp"

namespace dbo {

/// Runs one simulation to completion. Deterministic for a fixed config.
///
/// Events at equal times are processed in a fixed priority order: point
/// arrivals, batch deliveries, hand-offs to participants, submissions,
/// heartbeat emission, arrivals at the exchange, then ordering-buffer ticks.
TradeLog run(const RunConfig& config);

}  // namespace dbo
