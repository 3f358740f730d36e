#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gramvec {

// Root of the library's error hierarchy.  Every throw site prefixes the
// message with the subsystem that raised it ("ngram: ...", "mlm: ...") so a
// caller that only prints what() still produces an actionable diagnostic.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A file could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Ingestion produced zero usable documents.
class EmptyCorpusError : public Error {
public:
    using Error::Error;
};

// A function was called with arguments that violate its preconditions.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A score was requested for an n-gram (or one of its parts) that never
// occurred in the counted document.
class NotObservedError : public Error {
public:
    using Error::Error;
};

// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A token or sequence is missing from a vocabulary that has no fallback.
class VocabError : public Error {
public:
    using Error::Error;
};

// Optimization produced a non-finite loss or gradient.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, long step)
        : Error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

// A structured input file does not match its expected layout.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, std::size_t line = 0)
        : Error(what), line_(line) {}
    // 1-based line of the offending record, 0 when not line-oriented.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// An analogy template is missing a slot, a form, or a level it needs.
class TemplateError : public Error {
public:
    using Error::Error;
};

// The data cannot support the number of requested components.
class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& what, int usable_rank)
        : Error(what), usable_rank_(usable_rank) {}
    // How many components could be extracted before variance ran out.
    int usable_rank() const noexcept { return usable_rank_; }

private:
    int usable_rank_;
};

}  // namespace gramvec
