#pragma once

#include <stdexcept>
#include <string>

namespace sflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// lattice_core
class NonHermitianInput : public Error { using Error::Error; };
class ConvergenceFailure : public Error { using Error::Error; };

// boundary_ops
class InvalidTruncation : public Error { using Error::Error; };
class TruncationTooTight : public Error { using Error::Error; };
class NearSingularF : public Error { using Error::Error; };
class InvalidGauge : public Error { using Error::Error; };

// cylinder_ops
class NonHermitianAssembly : public Error { using Error::Error; };
class InvalidConfig : public Error { using Error::Error; };

// sf_engine
class RefinementExhausted : public Error { using Error::Error; };
class CutoffOnEigenvalue : public Error { using Error::Error; };
class WindowNotCalibrated : public Error { using Error::Error; };
class IndexMismatch : public Error { using Error::Error; };

// invariants
class PhaseJumpTooLarge : public Error { using Error::Error; };

// harness
class IoError : public Error { using Error::Error; };

}  // namespace sflow
