#pragma once

#include <string>

namespace copan {

// Shortest text that reads back to the same double ("6.5", "12", "0.1").
std::string format_number(double value);

// Half-away-from-zero rounding to two decimals, used by the reporting layer only.
double round2(double value);

}  // namespace copan
