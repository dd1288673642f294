#pragma once

#include <stdexcept>
#include <string>

namespace tsslab {

// Error taxonomy. Config parsing distinguishes file / syntax / semantic problems
// (the CLI maps them to distinct exit codes); numerical modules throw
// InvalidModelError for specs that fail validation, PreconditionError for calls
// outside an op's contract, and InstabilityError when an integrator or estimator
// detects non-finite state.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FileError : Error {
    using Error::Error;
};

struct ConfigSyntaxError : Error {
    int line = 0;
    ConfigSyntaxError(const std::string& msg, int line_no)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct ConfigSemanticError : Error {
    int line = 0;  // 0 when the offence has no single source line
    explicit ConfigSemanticError(const std::string& msg) : Error(msg) {}
    ConfigSemanticError(const std::string& msg, int line_no)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct InvalidModelError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct InstabilityError : Error {
    using Error::Error;
};

struct InconsistentStateError : Error {
    using Error::Error;
};

}  // namespace tsslab
