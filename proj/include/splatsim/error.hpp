#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace splatsim {

// Error taxonomy shared across the engine. Numerical aborts (the kinds a
// running simulation can hit) are distinguished from user/input errors so
// the CLI can map them to distinct exit codes.
enum class ErrorCode {
    ParseError,            // malformed input file
    SchemaError,           // config violates the published schema
    DegenerateGradient,    // det(F) <= 0 or unusable SVD
    DegenerateCovariance,  // non-SPD splat covariance
    PressureOverflow,      // J_E radicand <= 0
    OutOfDomain,           // particle outside the grid interior margin
    InsufficientNeighbors, // k-NN query cannot be satisfied
    CoincidentLight,       // light source at the surface point
    RangeError,            // scalar argument outside its documented range
    IoError,               // filesystem failure
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::ParseError: return "parse_error";
        case ErrorCode::SchemaError: return "schema_error";
        case ErrorCode::DegenerateGradient: return "degenerate_gradient";
        case ErrorCode::DegenerateCovariance: return "degenerate_covariance";
        case ErrorCode::PressureOverflow: return "pressure_overflow";
        case ErrorCode::OutOfDomain: return "out_of_domain";
        case ErrorCode::InsufficientNeighbors: return "insufficient_neighbors";
        case ErrorCode::CoincidentLight: return "coincident_light";
        case ErrorCode::RangeError: return "range_error";
        case ErrorCode::IoError: return "io_error";
    }
    return "unknown";
}

class SimError : public std::runtime_error {
  public:
    SimError(ErrorCode code, std::string message, std::int64_t index = -1,
             std::int64_t byte_offset = -1)
        : std::runtime_error(std::move(message)), code_(code), index_(index),
          byte_offset_(byte_offset) {}

    ErrorCode code() const { return code_; }
    // Particle / element index the error is attributed to, -1 if n/a.
    std::int64_t index() const { return index_; }
    // Byte offset into the offending file, -1 if n/a.
    std::int64_t byte_offset() const { return byte_offset_; }

    // True for errors that arise from simulation state rather than bad input.
    bool is_numerical() const {
        switch (code_) {
            case ErrorCode::DegenerateGradient:
            case ErrorCode::PressureOverflow:
            case ErrorCode::OutOfDomain:
                return true;
            default:
                return false;
        }
    }

  private:
    ErrorCode code_;
    std::int64_t index_;
    std::int64_t byte_offset_;
};

} // namespace splatsim
