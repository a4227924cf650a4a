#pragma once

#include <stdexcept>
#include <string>

namespace nez {

class Error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a grammar is structurally unusable (bad references, duplicate
/// productions, unsupported constructs for a given backend).
class GrammarError : public Error {
    using Error::Error;
};

class DuplicateProduction : public GrammarError {
    using GrammarError::GrammarError;
};

class EmptyRepetitionBody : public GrammarError {
    using GrammarError::GrammarError;
};

class UnsupportedConstruct : public GrammarError {
    using GrammarError::GrammarError;
};

/// A checkpoint mark was consumed out of LIFO order.
class StaleMark : public Error {
    using Error::Error;
};

class AstError : public Error {
    using Error::Error;
};

class FoldWithoutLeft : public AstError {
    using AstError::AstError;
};

class CommitWithoutRoot : public AstError {
    using AstError::AstError;
};

class StepBudgetExceeded : public Error {
    using Error::Error;
};

class MachineTrap : public Error {
    using Error::Error;
};

class AsmSyntaxError : public Error {
public:
    AsmSyntaxError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace nez
