#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nudge {

// Base for every error the library raises. code() is a stable machine-readable
// tag; the CLI and HTTP layers surface it verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define NUDGE_DEFINE_ERROR(Name, tag)                                   \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& message) : Error(tag, message) {} \
    }

NUDGE_DEFINE_ERROR(ParameterError, "parameter_error");
NUDGE_DEFINE_ERROR(ProtocolError, "protocol_error");
NUDGE_DEFINE_ERROR(ContractError, "contract_error");
NUDGE_DEFINE_ERROR(ConfigError, "config_error");
NUDGE_DEFINE_ERROR(DataError, "data_error");
NUDGE_DEFINE_ERROR(NumericError, "numeric_error");
NUDGE_DEFINE_ERROR(TrainingError, "training_error");
NUDGE_DEFINE_ERROR(ReferenceError, "reference_error");
NUDGE_DEFINE_ERROR(IndexError, "index_error");
NUDGE_DEFINE_ERROR(ValidationError, "validation_error");
NUDGE_DEFINE_ERROR(StateError, "state_error");
NUDGE_DEFINE_ERROR(ConflictError, "conflict_error");
NUDGE_DEFINE_ERROR(NotFoundError, "not_found");

#undef NUDGE_DEFINE_ERROR

// Missing model artifacts; carries the file names so callers can report them.
class MissingArtifactError : public Error {
public:
    MissingArtifactError(const std::string& message, std::vector<std::string> missing)
        : Error("missing_artifacts", message), missing_(std::move(missing)) {}

    [[nodiscard]] const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

} // namespace nudge
