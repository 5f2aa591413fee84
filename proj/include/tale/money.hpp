#pragma once

#include <cstdint>
#include <string>

#include <boost/rational.hpp>
#include <json.hpp>

namespace tale::money {

/// Costs are computed in exact rational arithmetic; floating point only
/// appears at display time.
using Rational = boost::rational<std::int64_t>;

/// Parses a non-negative decimal string such as "0.15" into an exact
/// rational. Throws std::invalid_argument on anything else.
Rational parse_decimal(const std::string& text);

/// Rounds up to `decimals` places and renders with a fixed number of digits
/// ("$0.00090" keeps its trailing zero). Displayed costs never round down.
std::string format_money_ceil(const Rational& value, int decimals);

double to_double(const Rational& value);

nlohmann::json rational_to_json(const Rational& value);
Rational rational_from_json(const nlohmann::json& j);

}  // namespace tale::money
