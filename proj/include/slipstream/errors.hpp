// Error taxonomy shared across the library. Precondition violations and
// malformed inputs throw; failures the orchestrator handles as policy
// (compaction failed, judge unparseable) are returned as values instead.
#pragma once

#include <stdexcept>
#include <string>

namespace slipstream {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Out-of-order append, duplicate lifecycle, and similar sequencing bugs.
class SequenceError : public Error {
public:
    using Error::Error;
};

// Transport failures, injected timeouts, exhausted scripts.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& what, bool retryable = false)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

// Malformed JSON traces, verdicts, scripts, configs.
class ParseError : public Error {
public:
    using Error::Error;
};

// Corruption spec does not apply to the candidate it targets.
class InjectionError : public Error {
public:
    using Error::Error;
};

// A lifecycle invariant (single-flight, outcome totality) was broken.
class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace slipstream
