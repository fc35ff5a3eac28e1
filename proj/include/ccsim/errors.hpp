#pragma once

#include <stdexcept>

namespace ccsim {

struct NotStronglyConnected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalRankFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoSpanningTree : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingFilterState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleParams : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonpositiveMu : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssumptionViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ccsim
