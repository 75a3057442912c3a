#pragma once

#include <stdexcept>
#include <string>

namespace mdest {

/// Base class for all library errors.
struct MdError : std::runtime_error {
  explicit MdError(const std::string& what) : std::runtime_error(what) {}
};

// Domain construction
struct CouplingDimensionError : MdError { using MdError::MdError; };
struct MissingDirichletError : MdError { using MdError::MdError; };
struct NonSpdError : MdError { using MdError::MdError; };
struct GeometryMismatchError : MdError { using MdError::MdError; };

// Grids and meshing
struct EmptyBoundaryError : MdError { using MdError::MdError; };
struct InvalidPerturbationError : MdError { using MdError::MdError; };
struct MeshGenerationError : MdError { using MdError::MdError; };
struct InconsistentBundleError : MdError { using MdError::MdError; };

// Transfer grids
struct CoverageMismatchError : MdError { using MdError::MdError; };
struct DegenerateClipError : MdError { using MdError::MdError; };
struct OutOfDomainError : MdError { using MdError::MdError; };

// Projections
struct GridMismatchError : MdError { using MdError::MdError; };
struct SingularMassMatrixError : MdError { using MdError::MdError; };

// Solver and evaluation
struct SingularSystemError : MdError { using MdError::MdError; };
struct OutOfCellError : MdError { using MdError::MdError; };

// Estimation
struct MissingReferenceError : MdError { using MdError::MdError; };

// Configuration (CLI, file formats)
struct ConfigError : MdError { using MdError::MdError; };

// A computed quantity violated a guaranteed property (conservation bound,
// effectivity >= 1, aggregation identity).
struct InvariantViolationError : MdError { using MdError::MdError; };

} // namespace mdest
