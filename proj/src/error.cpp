#include "sfm/error.hpp"

namespace sfm {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::MalformedFile: return "MalformedFile";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::SingleClass: return "SingleClass";
        case Errc::ClassTooSmall: return "ClassTooSmall";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::InvalidCounts: return "InvalidCounts";
        case Errc::KTooLarge: return "KTooLarge";
        case Errc::KExceedsClassSize: return "KExceedsClassSize";
        case Errc::MissingEmbedding: return "MissingEmbedding";
        case Errc::EmptyClass: return "EmptyClass";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::InvalidDistribution: return "InvalidDistribution";
        case Errc::NoPositives: return "NoPositives";
        case Errc::Io: return "Io";
        case Errc::Usage: return "Usage";
        case Errc::NonFinite: return "NonFinite";
        case Errc::PerplexityInfeasible: return "PerplexityInfeasible";
    }
    return "Unknown";
}

ErrorClass classify(Errc code) noexcept {
    switch (code) {
        case Errc::Usage: return ErrorClass::Usage;
        case Errc::NonFinite:
        case Errc::PerplexityInfeasible: return ErrorClass::Numerical;
        default: return ErrorClass::Data;
    }
}

}  // namespace sfm
