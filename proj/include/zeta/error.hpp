#pragma once

#include <stdexcept>
#include <string>

namespace zeta {

// Every domain failure carries a stable machine-readable code. The HTTP
// frontend and the CLI map codes to status/exit values.
class error : public std::runtime_error {
public:
    error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define ZETA_DEFINE_ERROR(name)                                             \
    class name : public error {                                             \
    public:                                                                 \
        explicit name(const std::string& message) : error(#name, message) {} \
    }

ZETA_DEFINE_ERROR(ParseError);
ZETA_DEFINE_ERROR(ValidationError);
ZETA_DEFINE_ERROR(UnknownId);
ZETA_DEFINE_ERROR(InvalidFormula);
ZETA_DEFINE_ERROR(NoBalancedSecret);
ZETA_DEFINE_ERROR(LimitsTooLarge);
ZETA_DEFINE_ERROR(PlanTooSmall);
ZETA_DEFINE_ERROR(DomainError);
ZETA_DEFINE_ERROR(LengthMismatch);
ZETA_DEFINE_ERROR(PreconditionError);
ZETA_DEFINE_ERROR(DuplicateUser);
ZETA_DEFINE_ERROR(UnknownUser);
ZETA_DEFINE_ERROR(UnknownSession);
ZETA_DEFINE_ERROR(OutOfOrder);
ZETA_DEFINE_ERROR(SessionClosed);
ZETA_DEFINE_ERROR(StorageError);
ZETA_DEFINE_ERROR(EmptyHypothesisSet);

#undef ZETA_DEFINE_ERROR

} // namespace zeta
