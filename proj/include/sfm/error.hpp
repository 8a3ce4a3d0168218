#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sfm {

enum class Errc {
    // data errors
    MalformedFile,
    EmptyDataset,
    SingleClass,
    ClassTooSmall,
    DimensionMismatch,
    LengthMismatch,
    InvalidConfig,
    InvalidCounts,
    KTooLarge,
    KExceedsClassSize,
    MissingEmbedding,
    EmptyClass,
    TooFewSamples,
    InvalidDistribution,
    NoPositives,
    Io,
    // usage errors
    Usage,
    // numerical failures
    NonFinite,
    PerplexityInfeasible,
};

/// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorClass { Usage, Data, Numerical };

std::string_view errc_name(Errc code) noexcept;
ErrorClass classify(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace sfm
