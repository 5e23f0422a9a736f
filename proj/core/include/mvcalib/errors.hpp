#pragma once

#include <stdexcept>
#include <string>

namespace mvcalib {

/// Base class for every recoverable failure raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- geometry ---------------------------------------------------------------

struct PointBehindCamera : Error {
  explicit PointBehindCamera(const std::string& w = "point has non-positive depth") : Error(w) {}
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& w = "iterative undistortion did not converge") : Error(w) {}
};

// -- minimal solvers ---------------------------------------------------------

struct DegenerateSample : Error {
  explicit DegenerateSample(const std::string& w = "degenerate minimal sample") : Error(w) {}
};

struct AmbiguousCheirality : Error {
  explicit AmbiguousCheirality(const std::string& w = "no factorization has a positive-depth majority") : Error(w) {}
};

struct NoRealSolution : Error {
  explicit NoRealSolution(const std::string& w = "no real solution") : Error(w) {}
};

// -- robust estimation -------------------------------------------------------

struct NotEnoughMatches : Error {
  explicit NotEnoughMatches(const std::string& w = "fewer matches than the minimal sample size") : Error(w) {}
};

struct NoConsensus : Error {
  explicit NoConsensus(const std::string& w = "no model reached the required inlier count") : Error(w) {}
};

// -- triangulation -----------------------------------------------------------

struct ParallelRays : Error {
  explicit ParallelRays(const std::string& w = "rays are parallel or share an origin") : Error(w) {}
};

struct BehindCamera : Error {
  explicit BehindCamera(const std::string& w = "triangulated point is behind a camera") : Error(w) {}
};

// -- bundle adjustment -------------------------------------------------------

struct SingularNormalEquations : Error {
  explicit SingularNormalEquations(const std::string& w = "normal equations singular after damping exhaustion") : Error(w) {}
};

struct InvalidProblem : Error {
  explicit InvalidProblem(const std::string& w = "invalid bundle-adjustment problem") : Error(w) {}
};

// -- evaluation --------------------------------------------------------------

struct ZeroVector : Error {
  explicit ZeroVector(const std::string& w = "angle of a zero vector is undefined") : Error(w) {}
};

struct DegenerateCloud : Error {
  explicit DegenerateCloud(const std::string& w = "point cloud has zero spread") : Error(w) {}
};

struct DegenerateBaseline : Error {
  explicit DegenerateBaseline(const std::string& w = "first two ground-truth centers coincide") : Error(w) {}
};

struct MissingGroundTruth : Error {
  explicit MissingGroundTruth(const std::string& w = "a registered image has no ground-truth pose") : Error(w) {}
};

// -- pipeline ----------------------------------------------------------------

struct InitFailed : Error {
  explicit InitFailed(const std::string& w = "two-view initialization failed") : Error(w) {}
};

struct RegistrationFailed : Error {
  explicit RegistrationFailed(const std::string& w = "image registration failed") : Error(w) {}
};

// -- i/o ---------------------------------------------------------------------

struct ParseError : Error {
  explicit ParseError(const std::string& w = "malformed input file") : Error(w) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& w = "unexpected descriptor dimension") : Error(w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w = "i/o failure") : Error(w) {}
};

}  // namespace mvcalib
