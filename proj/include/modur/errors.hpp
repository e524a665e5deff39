#pragma once

#include <stdexcept>
#include <string>

namespace modur {

/// A requested configuration cannot be realized (unfold angle out of range,
/// no branch satisfying the chirality predicate, unreachable waypoint, ...).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The six unfold angles are inconsistent with the module's five degrees of
/// freedom beyond the configured tolerance.
struct ClosureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An elevation reached the +/-90 degree pole where the azimuth solve
/// degenerates.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Points collapsed so that a geometric construction (cross product, tangent,
/// centroid test) is undefined.
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A deflection-formula branch received an argument outside its domain by
/// more than the clamp band.
struct BranchDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Assembly topology violation: unknown endpoints, double-connected
/// connectors, or a cycle whose composed transform fails to close.
struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace modur
