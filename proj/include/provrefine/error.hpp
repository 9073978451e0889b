#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace provrefine {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

#define PROVREFINE_ERROR(Name)        \
    class Name : public Error {       \
    public:                           \
        using Error::Error;           \
    }

PROVREFINE_ERROR(OracleLimitExceeded);
PROVREFINE_ERROR(EmptyLoop);
PROVREFINE_ERROR(UnknownParameter);
PROVREFINE_ERROR(DomainOverflow);
PROVREFINE_ERROR(NotSubgraph);
PROVREFINE_ERROR(SelfLoopArc);
PROVREFINE_ERROR(ObservationOutOfRange);
PROVREFINE_ERROR(DegenerateTrainingSet);
PROVREFINE_ERROR(CorpusTooSmall);
PROVREFINE_ERROR(WeightOverflow);
PROVREFINE_ERROR(QueryNotInProvenance);
PROVREFINE_ERROR(NotAModel);
PROVREFINE_ERROR(InvalidArgument);

#undef PROVREFINE_ERROR

}  // namespace provrefine
