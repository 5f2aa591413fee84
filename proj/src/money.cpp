#include "tale/money.hpp"

#include <cctype>
#include <stdexcept>

namespace tale::money {

Rational parse_decimal(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty decimal string");
    std::int64_t numerator = 0;
    std::int64_t denominator = 1;
    bool seen_digit = false;
    bool seen_point = false;
    for (char c : text) {
        if (c == '.') {
            if (seen_point) throw std::invalid_argument("malformed decimal: " + text);
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            seen_digit = true;
            numerator = numerator * 10 + (c - '0');
            if (seen_point) denominator *= 10;
            if (denominator > 1'000'000'000'000'000'000LL / 10) {
                throw std::invalid_argument("decimal has too many places: " + text);
            }
        } else {
            throw std::invalid_argument("malformed decimal: " + text);
        }
    }
    if (!seen_digit) throw std::invalid_argument("malformed decimal: " + text);
    return Rational(numerator, denominator);
}

std::string format_money_ceil(const Rational& value, int decimals) {
    if (value < Rational(0)) throw std::invalid_argument("negative cost");
    std::int64_t scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const Rational scaled = value * scale;
    // Integer ceiling on the exact rational; never goes through a double.
    std::int64_t units = scaled.numerator() / scaled.denominator();
    if (scaled.numerator() % scaled.denominator() != 0) ++units;

    std::string digits = std::to_string(units % scale);
    while (static_cast<int>(digits.size()) < decimals) digits.insert(digits.begin(), '0');
    std::string out = "$" + std::to_string(units / scale);
    if (decimals > 0) out += "." + digits;
    return out;
}

double to_double(const Rational& value) {
    return static_cast<double>(value.numerator()) / static_cast<double>(value.denominator());
}

nlohmann::json rational_to_json(const Rational& value) {
    return nlohmann::json{{"num", value.numerator()}, {"den", value.denominator()}};
}

Rational rational_from_json(const nlohmann::json& j) {
    return Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

}  // namespace tale::money
