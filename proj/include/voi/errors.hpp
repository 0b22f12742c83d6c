#ifndef VOI_ERRORS_HPP
#define VOI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace voi {

// Exit codes used by the CLI. Library code throws; the CLI maps to these.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitConvergenceFailure = 3,
    kExitModelEvalError = 4,
};

// Bad or inconsistent configuration, schema violations in input files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation that a distribution kind does not support (density of an
// empirical pool, bias adjustment of a simplex, ...).
class UnsupportedOperation : public std::runtime_error {
public:
    explicit UnsupportedOperation(const std::string& msg) : std::runtime_error(msg) {}
};

// Model evaluation failed for a concrete draw; carries the row when raised
// inside the Monte Carlo loop.
class ModelEvalError : public std::runtime_error {
public:
    explicit ModelEvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// MCMC finished but diagnostics are unacceptable. Carries the worst values
// so the caller can decide to raise the iteration count.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double worst_rhat, double worst_ess)
        : std::runtime_error(msg), worst_rhat(worst_rhat), worst_ess(worst_ess) {}
    double worst_rhat;
    double worst_ess;
};

} // namespace voi

#endif // VOI_ERRORS_HPP
