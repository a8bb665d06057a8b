#ifndef LINKCERT_ERRORS_HPP
#define LINKCERT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace linkcert {

/// Exit codes shared by the library's error taxonomy and the CLI.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,         ///< bad input, schema violation, violated precondition
    exit_size_bound = 2,    ///< instance below a theorem's vertex bound
    exit_degeneracy = 3,    ///< geometric degeneracy survived the resample budget
    exit_verify_mismatch = 4, ///< certificate replay disagreed with a claim
    exit_falsification = 5  ///< a search guaranteed to succeed came up empty
};

/// Base class; every library error carries the exit code the CLI maps it to.
class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

/// Violated operation precondition or malformed input.
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(exit_usage, what) {}
};

/// Instance size below the bound a theorem requires.
class SizeBoundError : public Error {
public:
    explicit SizeBoundError(const std::string& what) : Error(exit_size_bound, what) {}
};

/// Geometric degeneracy that survived the deterministic resample budget.
class DegeneracyError : public Error {
public:
    explicit DegeneracyError(const std::string& what) : Error(exit_degeneracy, what) {}
};

/// A certificate claim failed independent replay.
class VerifyError : public Error {
public:
    explicit VerifyError(const std::string& what) : Error(exit_verify_mismatch, what) {}
};

/// A construction step whose success is mathematically guaranteed failed.
/// Seeing one of these means either a bug in this library or a genuine
/// counterexample; either way it must surface loudly, never be papered over.
class FalsificationAlert : public Error {
public:
    explicit FalsificationAlert(const std::string& what) : Error(exit_falsification, what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw PreconditionError(what);
}

} // namespace linkcert

#endif
