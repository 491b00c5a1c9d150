#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ot {

/// Error taxonomy shared by the library and the CLI. Every failure carries a
/// stable machine-readable kind and the process exit code the CLI maps it to
/// (2 infeasible, 3 invalid input, 4 resource limit).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message, int exit_code)
        : std::runtime_error(message), kind_(std::move(kind)), exit_code_(exit_code) {}

    const std::string& kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string kind_;
    int exit_code_;
};

namespace err {

inline Error invalid_parameter(const std::string& msg) { return Error("invalid-parameter", msg, 3); }
inline Error invalid_argument(const std::string& msg) { return Error("invalid-argument", msg, 3); }
inline Error invalid_action(const std::string& msg) { return Error("invalid-action", msg, 3); }
inline Error invalid_comparison(const std::string& msg) { return Error("invalid-comparison", msg, 3); }
inline Error not_found(const std::string& msg) { return Error("not-found", msg, 3); }
inline Error infeasible(const std::string& msg) { return Error("infeasible", msg, 2); }
inline Error infeasible_class(const std::string& msg) { return Error("infeasible-class", msg, 2); }
inline Error glue_mismatch(const std::string& msg) { return Error("glue-mismatch", msg, 2); }
inline Error coverage_failure(const std::string& msg) { return Error("coverage-failure", msg, 2); }
inline Error missing_conditional(const std::string& msg) { return Error("missing-conditional", msg, 2); }
inline Error resource_limit(const std::string& msg) { return Error("resource-limit", msg, 4); }

/// Load failures point at the offending file and JSON location.
inline Error load_error(const std::string& file, const std::string& pointer, const std::string& msg) {
    return Error("load-error", file + ":" + pointer + ": " + msg, 3);
}

} // namespace err
} // namespace ot
