#pragma once

#include <stdexcept>
#include <string>

namespace treedp {

// Node budget exceeded during tree construction or enumeration.
class capacity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite state or cost encountered; message carries level/control context.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Relative-error denominator vanished on some tree level.
class degenerate_norm_error : public std::runtime_error {
public:
    degenerate_norm_error(int level, const std::string& what)
        : std::runtime_error(what), level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

} // namespace treedp
