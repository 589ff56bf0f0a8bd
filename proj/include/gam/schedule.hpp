#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gam {

enum class ScheduleKind { kConstant, kInvSqrt, kCosine };

// t is 1-based; horizon T is only consulted by the cosine schedule, which
// anneals base -> 0 across [1, T].
inline double schedule_value(ScheduleKind kind, double base, std::int64_t t,
                             std::int64_t horizon) {
  if (t < 1) {
    throw std::invalid_argument("schedule_value: t must be >= 1, got " +
                                std::to_string(t));
  }
  switch (kind) {
    case ScheduleKind::kConstant:
      return base;
    case ScheduleKind::kInvSqrt:
      return base / std::sqrt(static_cast<double>(t));
    case ScheduleKind::kCosine:
      if (horizon < t) {
        throw std::invalid_argument(
            "schedule_value: cosine horizon " + std::to_string(horizon) +
            " is before t " + std::to_string(t));
      }
      return base * 0.5 *
             (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) /
                             static_cast<double>(horizon)));
  }
  throw std::logic_error("schedule_value: unknown kind");
}

}  // namespace gam
