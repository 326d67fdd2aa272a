#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hydra {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Injectable wall clock so tests can pin "now".
using Clock = std::function<Timestamp()>;

Timestamp system_now();
Clock system_clock();

// "20200827T031500Z"
std::string format_iso_basic(Timestamp t);
// "2020-08-27T03:15:00Z"
std::string format_iso_extended(Timestamp t);

// Accepts the basic form only; returns nullopt on any deviation.
std::optional<Timestamp> parse_iso_basic(std::string_view s);

}  // namespace hydra
