#include "btx/value.hpp"

#include <cmath>
#include <sstream>

namespace btx {

std::string to_string(status s) {
    switch (s) {
        case status::success: return "Success";
        case status::failure: return "Failure";
        case status::running: return "Running";
        case status::invalid: return "Invalid";
    }
    return "Invalid";
}

status status_from_string(const std::string& s) {
    if (s == "Success") return status::success;
    if (s == "Failure") return status::failure;
    if (s == "Running") return status::running;
    if (s == "Invalid") return status::invalid;
    fail(errc::parse, "unknown status '" + s + "'");
}

bool value::as_bool() const {
    if (!is_bool()) fail(errc::validation, "value is not a boolean: " + to_string());
    return std::get<bool>(v_);
}

double value::as_number() const {
    if (!is_number()) fail(errc::validation, "value is not a number: " + to_string());
    return std::get<double>(v_);
}

const std::string& value::as_symbol() const {
    if (!is_symbol()) fail(errc::validation, "value is not a symbol: " + to_string());
    return std::get<std::string>(v_);
}

status value::as_status() const {
    if (!is_status()) fail(errc::validation, "value is not a status: " + to_string());
    return std::get<status>(v_);
}

std::string value::to_string() const {
    if (is_bool()) return as_bool() ? "true" : "false";
    if (is_symbol()) return as_symbol();
    if (is_status()) return btx::to_string(as_status());
    std::ostringstream os;
    os << as_number();
    return os.str();
}

var_range var_range::categorical(std::vector<std::string> syms) {
    var_range r;
    r.kind = range_kind::categorical;
    r.symbols = std::move(syms);
    return r;
}

var_range var_range::continuous(double lo, double hi) {
    if (!(lo < hi)) fail(errc::validation, "continuous range requires lo < hi");
    var_range r;
    r.kind = range_kind::continuous;
    r.lo = lo;
    r.hi = hi;
    return r;
}

bool var_range::contains(const value& v) const {
    switch (kind) {
        case range_kind::boolean:
            return v.is_bool();
        case range_kind::categorical: {
            if (!v.is_symbol()) return false;
            for (const auto& s : symbols)
                if (s == v.as_symbol()) return true;
            return false;
        }
        case range_kind::continuous:
            return v.is_number() && v.as_number() >= lo && v.as_number() <= hi;
    }
    return false;
}

std::vector<value> var_range::candidates(const std::optional<value>& actual, int bins) const {
    std::vector<value> out;
    switch (kind) {
        case range_kind::boolean:
            for (bool b : {false, true})
                if (!actual || value(b) != *actual) out.push_back(value(b));
            break;
        case range_kind::categorical:
            for (const auto& s : symbols)
                if (!actual || value(s) != *actual) out.push_back(value(s));
            break;
        case range_kind::continuous: {
            if (bins < 2) fail(errc::validation, "discretisation needs at least 2 bins");
            const double w = (hi - lo) / bins;
            int skip = -1;
            if (actual) {
                double a = actual->as_number();
                skip = static_cast<int>(std::floor((a - lo) / w));
                if (skip >= bins) skip = bins - 1; // hi itself falls in the last bin
                if (skip < 0) skip = 0;
            }
            for (int j = 0; j < bins; ++j) {
                if (j == skip) continue;
                out.push_back(value(lo + (j + 0.5) * w));
            }
            break;
        }
    }
    return out;
}

} // namespace btx
