#include "gromov/error.hpp"

namespace gromov {

const char* code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::MODEL_MISMATCH: return "MODEL_MISMATCH";
        case ErrorCode::INVALID_POINT: return "INVALID_POINT";
        case ErrorCode::DEGENERATE: return "DEGENERATE";
        case ErrorCode::OUT_OF_RANGE: return "OUT_OF_RANGE";
        case ErrorCode::BAD_AXIS: return "BAD_AXIS";
        case ErrorCode::SPACE_MISMATCH: return "SPACE_MISMATCH";
        case ErrorCode::EQUALS_XI: return "EQUALS_XI";
        case ErrorCode::NOT_FIXED: return "NOT_FIXED";
        case ErrorCode::NOT_ULTRAMETRIC: return "NOT_ULTRAMETRIC";
        case ErrorCode::CONSISTENCY_VIOLATION: return "CONSISTENCY_VIOLATION";
        case ErrorCode::CYCLE_NOT_CONTRACTIBLE: return "CYCLE_NOT_CONTRACTIBLE";
        case ErrorCode::EMPTY_FACTOR: return "EMPTY_FACTOR";
        case ErrorCode::P_NOT_IN_Y: return "P_NOT_IN_Y";
        case ErrorCode::DIVISIBILITY_VIOLATION: return "DIVISIBILITY_VIOLATION";
        case ErrorCode::BAD_FACTOR: return "BAD_FACTOR";
        case ErrorCode::BUDGET_EXCEEDED: return "BUDGET_EXCEEDED";
        case ErrorCode::INCONCLUSIVE: return "INCONCLUSIVE";
        case ErrorCode::NOT_SEPARATED: return "NOT_SEPARATED";
        case ErrorCode::TAIL_TOO_LARGE: return "TAIL_TOO_LARGE";
        case ErrorCode::NOT_TREE_METRIC: return "NOT_TREE_METRIC";
        case ErrorCode::SIGNATURE_FAIL: return "SIGNATURE_FAIL";
        case ErrorCode::NOT_ISOMETRY: return "NOT_ISOMETRY";
        case ErrorCode::EMPTY_ORBIT: return "EMPTY_ORBIT";
        case ErrorCode::INSUFFICIENT_RANGE: return "INSUFFICIENT_RANGE";
        case ErrorCode::EMPTY: return "EMPTY";
        case ErrorCode::FACTOR_SERIES_UNKNOWN: return "FACTOR_SERIES_UNKNOWN";
        case ErrorCode::MISMATCHED_GROUP: return "MISMATCHED_GROUP";
        case ErrorCode::DELTA_INFINITE: return "DELTA_INFINITE";
        case ErrorCode::SERIES_DIVERGES: return "SERIES_DIVERGES";
        case ErrorCode::NOT_DIVERGENCE_TYPE: return "NOT_DIVERGENCE_TYPE";
        case ErrorCode::EMPTY_SHADOW: return "EMPTY_SHADOW";
        case ErrorCode::NOT_LIMIT_POINT: return "NOT_LIMIT_POINT";
        case ErrorCode::SANDWICH_FAIL: return "SANDWICH_FAIL";
        case ErrorCode::TAIL_UNKNOWN: return "TAIL_UNKNOWN";
        case ErrorCode::NOT_THICK: return "NOT_THICK";
        case ErrorCode::BOUND_FAIL: return "BOUND_FAIL";
        case ErrorCode::CONFIG_INVALID: return "CONFIG_INVALID";
    }
    return "UNKNOWN";
}

}  // namespace gromov
