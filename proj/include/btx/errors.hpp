#pragma once

#include <stdexcept>
#include <string>

namespace btx {

enum class errc {
    parse,
    validation,
    range_violation,
    missing_variable,
    unknown_node,
    unknown_variable,
    index_mismatch,
    out_of_range,
    missing_parent_value,
    invalid_query,
    no_explanation_found,
    no_previous_tick,
    io,
};

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

} // namespace btx
