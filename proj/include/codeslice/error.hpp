#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace codeslice {

enum class ErrorCode {
    InvalidArgument,
    InvalidConfig,
    UnknownProvider,
    EmptyBody,
    EmptyRationale,
    BudgetExceeded,
    PoolTooSmall,
    InvalidBounds,
    UnsupportedLanguage,
    EmptyReference,
    UnparseableReference,
    RateLimited,
    Timeout,
    AuthFailure,
    ReplayMiss,
    TransportError,
    CassetteCollision,
    SchemaMismatch,
    AlreadySplit,
    BadRatios,
    EmptySplit,
    IoFailure,
    AccessViolation,
    ModelUnavailable,
    NotApplicable,
    RewriteBrokeSyntax,
    BadBudget,
    MisalignedCorpora,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library. `phase` names the pipeline stage
// (e.g. "stage1", "collect/send") when the error crossed a stage boundary.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string &phase() const noexcept { return phase_; }

    // Set while unwinding through a stage boundary, then `throw;` keeps the
    // dynamic type (e.g. BudgetExceeded).
    void set_phase(std::string phase) {
        if (phase_.empty()) {
            phase_ = std::move(phase);
        }
    }

  private:
    ErrorCode code_;
    std::string phase_;
};

class BudgetExceeded : public Error {
  public:
    BudgetExceeded(long long estimated, long long budget)
        : Error(ErrorCode::BudgetExceeded,
                "prompt needs " + std::to_string(estimated) + " tokens, budget is " +
                    std::to_string(budget)),
          estimated_(estimated), budget_(budget) {}

    long long estimated() const noexcept { return estimated_; }
    long long budget() const noexcept { return budget_; }

  private:
    long long estimated_;
    long long budget_;
};

} // namespace codeslice
