#pragma once

#include <stdexcept>
#include <string>

namespace gromov {

enum class ErrorCode {
    MODEL_MISMATCH,
    INVALID_POINT,
    DEGENERATE,
    OUT_OF_RANGE,
    BAD_AXIS,
    SPACE_MISMATCH,
    EQUALS_XI,
    NOT_FIXED,
    NOT_ULTRAMETRIC,
    CONSISTENCY_VIOLATION,
    CYCLE_NOT_CONTRACTIBLE,
    EMPTY_FACTOR,
    P_NOT_IN_Y,
    DIVISIBILITY_VIOLATION,
    BAD_FACTOR,
    BUDGET_EXCEEDED,
    INCONCLUSIVE,
    NOT_SEPARATED,
    TAIL_TOO_LARGE,
    NOT_TREE_METRIC,
    SIGNATURE_FAIL,
    NOT_ISOMETRY,
    EMPTY_ORBIT,
    INSUFFICIENT_RANGE,
    EMPTY,
    FACTOR_SERIES_UNKNOWN,
    MISMATCHED_GROUP,
    DELTA_INFINITE,
    SERIES_DIVERGES,
    NOT_DIVERGENCE_TYPE,
    EMPTY_SHADOW,
    NOT_LIMIT_POINT,
    SANDWICH_FAIL,
    TAIL_UNKNOWN,
    NOT_THICK,
    BOUND_FAIL,
    CONFIG_INVALID,
};

const char* code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace gromov
