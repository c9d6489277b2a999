#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace weylkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonHermitianCoefficient : Error {
  int k;
  double t;
  NonHermitianCoefficient(int k_, double t_, double defect)
      : Error("coefficient p_" + std::to_string(k_) + " non-Hermitian at t=" +
              std::to_string(t_) + " (relative defect " + std::to_string(defect) + ")"),
        k(k_), t(t_) {}
};

struct SingularLeadingCoefficient : Error {
  double t;
  explicit SingularLeadingCoefficient(double t_, double smin)
      : Error("leading coefficient p_0 numerically singular at t=" + std::to_string(t_) +
              " (sigma_min " + std::to_string(smin) + ")"),
        t(t_) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct StepSizeUnderflow : Error {
  double t;
  explicit StepSizeUnderflow(double t_)
      : Error("integrator step size underflow near t=" + std::to_string(t_)), t(t_) {}
};

struct RankCollapse : Error {
  double t;
  explicit RankCollapse(double t_)
      : Error("propagated frame columns lost rank near t=" + std::to_string(t_)), t(t_) {}
};

struct PointOutsideGrid : Error {
  double t;
  explicit PointOutsideGrid(double t_)
      : Error("query point t=" + std::to_string(t_) + " outside stored grid"), t(t_) {}
};

struct LambdaInSpectrumOfA0 : Error {
  std::complex<double> lambda;
  explicit LambdaInSpectrumOfA0(std::complex<double> l)
      : Error("c^(2)(b,lambda) not invertible: lambda in the spectrum of the reference extension"),
        lambda(l) {}
};

struct LimitCircleDetected : Error {
  double disc_radius;
  double last_diff;
  LimitCircleDetected(double r, double d)
      : Error("Weyl discs did not contract along the cutoff schedule (radius " +
              std::to_string(r) + ", last iterate diff " + std::to_string(d) + ")"),
        disc_radius(r), last_diff(d) {}
};

struct RealLambdaUnsupported : Error {
  RealLambdaUnsupported() : Error("operation requires a nonreal spectral parameter") {}
};

struct BoundaryResonance : Error {
  std::complex<double> lambda;
  explicit BoundaryResonance(std::complex<double> l)
      : Error("C0 - C1*M(lambda) is singular: boundary resonance at this lambda"), lambda(l) {}
};

struct DiagonalPoint : Error {
  double x;
  explicit DiagonalPoint(double x_)
      : Error("Green kernel evaluated exactly on the diagonal x=t=" + std::to_string(x_)),
        x(x_) {}
};

struct QuadratureNotConverged : Error {
  double tail;
  explicit QuadratureNotConverged(double tail_)
      : Error("quadrature tail estimate " + std::to_string(tail_) + " above tolerance"),
        tail(tail_) {}
};

struct RankDeficientPair : Error {
  RankDeficientPair() : Error("(C0 C1) is row rank deficient") {}
};

struct NevanlinnaViolation : Error {
  std::string which;
  std::complex<double> lambda;
  NevanlinnaViolation(std::string which_, std::complex<double> l)
      : Error("Nevanlinna pair condition violated: " + which_), which(std::move(which_)),
        lambda(l) {}
};

struct SchemaError : Error {
  std::string path;
  SchemaError(std::string path_, const std::string& what_)
      : Error("problem file: " + path_ + ": " + what_), path(std::move(path_)) {}
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace weylkit
