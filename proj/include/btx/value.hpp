#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "btx/errors.hpp"

namespace btx {

enum class status : std::uint8_t { success, failure, running, invalid };

std::string to_string(status s);
status status_from_string(const std::string& s);

/// A single value of a state variable or explanation-model variable.
/// Booleans and numbers cover state variables; symbols cover categorical
/// values and actions; statuses cover node return values.
class value {
public:
    value() : v_(false) {}
    value(bool b) : v_(b) {}
    value(double d) : v_(d) {}
    value(int d) : v_(static_cast<double>(d)) {}
    value(std::string s) : v_(std::move(s)) {}
    value(const char* s) : v_(std::string(s)) {}
    value(status st) : v_(st) {}

    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_number() const { return std::holds_alternative<double>(v_); }
    bool is_symbol() const { return std::holds_alternative<std::string>(v_); }
    bool is_status() const { return std::holds_alternative<status>(v_); }

    bool as_bool() const;
    double as_number() const;
    const std::string& as_symbol() const;
    status as_status() const;

    bool operator==(const value& o) const { return v_ == o.v_; }
    bool operator!=(const value& o) const { return v_ != o.v_; }
    bool operator<(const value& o) const { return v_ < o.v_; }

    std::string to_string() const;

private:
    std::variant<bool, double, std::string, status> v_;
};

/// Ordered mapping from variable name to value. std::map keeps iteration
/// order stable, which the deterministic-output contracts rely on.
using assignment = std::map<std::string, value>;

enum class range_kind { boolean, categorical, continuous };

/// Declared domain of a state variable.
struct var_range {
    range_kind kind = range_kind::boolean;
    std::vector<std::string> symbols; // categorical only
    double lo = 0.0;                  // continuous only
    double hi = 1.0;

    static var_range boolean() { return {}; }
    static var_range categorical(std::vector<std::string> syms);
    static var_range continuous(double lo, double hi);

    bool contains(const value& v) const;
    /// Finite candidate list for counterfactual search. Continuous ranges are
    /// split into `bins` half-open intervals [lo + j*w, lo + (j+1)*w) and
    /// represented by their midpoints; the bin holding `actual` is dropped.
    std::vector<value> candidates(const std::optional<value>& actual, int bins) const;
};

} // namespace btx
