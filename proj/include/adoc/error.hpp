#pragma once

#include <stdexcept>
#include <string>

namespace adoc {

enum class ErrorCode {
    invalid_matrix,
    invalid_parameter,
    would_empty_mixture,
    infeasible_marginals,
    plan_infeasible,
    path_infeasible,
    out_of_range,
    infeasible_initial_distribution,
    invalid_scenario,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by the planner when the sparsified control LP has no feasible point.
/// `component` is the index of the current mixture component that cannot be routed.
class PlanInfeasible : public Error {
public:
    PlanInfeasible(std::size_t component, const std::string& what)
        : Error(ErrorCode::plan_infeasible, what), component_(component) {}

    [[nodiscard]] std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

}  // namespace adoc
