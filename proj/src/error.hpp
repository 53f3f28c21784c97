#ifndef MAPOS_ERROR_HPP
#define MAPOS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mapos {

// Error categories map 1:1 onto CLI exit codes and C API status codes.
enum class ErrorCategory : int {
    Config = 2,      // bad configuration file, key, or value
    Io = 3,          // missing/corrupt/unwritable files
    Numeric = 4,     // NaN, divergence, ill-conditioned input
    Infeasible = 5,  // constraint set admits no solution
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, std::string msg)
        : std::runtime_error(std::move(msg)), category_(cat) {}

    ErrorCategory category() const { return category_; }
    int code() const { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

inline Error config_error(std::string msg) { return Error(ErrorCategory::Config, std::move(msg)); }
inline Error io_error(std::string msg) { return Error(ErrorCategory::Io, std::move(msg)); }
inline Error numeric_error(std::string msg) { return Error(ErrorCategory::Numeric, std::move(msg)); }
inline Error infeasible_error(std::string msg) { return Error(ErrorCategory::Infeasible, std::move(msg)); }

} // namespace mapos

#endif
