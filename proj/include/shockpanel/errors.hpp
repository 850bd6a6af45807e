#pragma once

#include <stdexcept>
#include <string>

namespace shockpanel {

/// Error categories surfaced by the library. The CLI maps all of these to
/// exit code 1 (data error); usage problems never reach this type.
enum class Errc {
    DuplicateKey,
    GapInPanel,
    ParseError,
    UnknownSeries,
    TooFewObservations,
    SingularLocalFit,
    DegenerateDenominator,
    AlignmentError,
    CollinearDesign,
    TooFewClusters,
    UnknownCoefficient,
    SingularRestriction,
    NotConverged,
    ReportSchemaError,
    BadConfig,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::DuplicateKey: return "DuplicateKey";
        case Errc::GapInPanel: return "GapInPanel";
        case Errc::ParseError: return "ParseError";
        case Errc::UnknownSeries: return "UnknownSeries";
        case Errc::TooFewObservations: return "TooFewObservations";
        case Errc::SingularLocalFit: return "SingularLocalFit";
        case Errc::DegenerateDenominator: return "DegenerateDenominator";
        case Errc::AlignmentError: return "AlignmentError";
        case Errc::CollinearDesign: return "CollinearDesign";
        case Errc::TooFewClusters: return "TooFewClusters";
        case Errc::UnknownCoefficient: return "UnknownCoefficient";
        case Errc::SingularRestriction: return "SingularRestriction";
        case Errc::NotConverged: return "NotConverged";
        case Errc::ReportSchemaError: return "ReportSchemaError";
        case Errc::BadConfig: return "BadConfig";
    }
    return "Error";
}

}  // namespace shockpanel
