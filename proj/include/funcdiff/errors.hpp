#pragma once

#include <stdexcept>
#include <string>

namespace funcdiff {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotPositiveDefinite : Error {
    explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string& msg) : Error(msg) {}
};

struct GridTooSmall : Error {
    explicit GridTooSmall(const std::string& msg) : Error(msg) {}
};

struct NonMonotoneGrid : Error {
    explicit NonMonotoneGrid(const std::string& msg) : Error(msg) {}
};

struct NonDifferentiableKernel : Error {
    explicit NonDifferentiableKernel(const std::string& msg) : Error(msg) {}
};

struct InvalidSchedule : Error {
    explicit InvalidSchedule(const std::string& msg) : Error(msg) {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& msg) : Error(msg) {}
};

struct SingularOperator : Error {
    explicit SingularOperator(const std::string& msg) : Error(msg) {}
};

struct DuplicateConditioningPoint : Error {
    explicit DuplicateConditioningPoint(const std::string& msg) : Error(msg) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct DivergedTraining : Error {
    explicit DivergedTraining(const std::string& msg) : Error(msg) {}
};

struct CheckpointError : Error {
    explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

}  // namespace funcdiff
