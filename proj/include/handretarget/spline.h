#pragma once

#include "handretarget/serialize.h"

#include <vector>

namespace hr {

/// Clamped B-spline of one scalar DOF over time.
struct DofSpline {
  int degree = 3;
  std::vector<double> knots; // size control.size() + degree + 1
  std::vector<double> control;

  int numControl() const {
    return static_cast<int>(control.size());
  }
  double start() const {
    return knots.front();
  }
  double end() const {
    return knots.back();
  }
  /// Value (order 0) or derivative at t, clamped to the domain. `fromLeft`
  /// selects the span ending at t when t sits on a knot.
  double evaluate(double t, int order = 0, bool fromLeft = false) const;
  /// Greville abscissae: the time location of each control value.
  std::vector<double> controlTimes() const;
};

/// Nonzero basis functions N_{span-degree..span}(t) of a knot vector.
int findSpan(const std::vector<double>& knots, int degree, int numControl, double t, bool fromLeft = false);
void basisFunctions(const std::vector<double>& knots, int degree, int span, double t, double* out);

/// Clamped cubic knot vector with uniformly spaced interior knots.
std::vector<double> uniformKnots(double t0, double t1, int numControl, int degree = 3);

/// Least-squares control values for fixed knots over the samples with
/// valid[i] (all when empty). Returns the sum of squared residuals.
double fitControl(
    DofSpline& spline,
    const std::vector<double>& times,
    const std::vector<double>& values,
    const std::vector<bool>& valid = {});

struct SplineFitOptions {
  int controlPoints = 4;
  double minKnotGap = 0.0; // smallest allowed distance between distinct knots
  int knotSweeps = 3; // 0 keeps the uniform knots
};

/// Cubic fit alternating linear least squares on control values with a
/// bounded coordinate search on interior knot locations. Throws when fewer
/// valid samples than control points are given.
DofSpline fitSpline(
    const std::vector<double>& times,
    const std::vector<double>& values,
    const std::vector<bool>& valid,
    const SplineFitOptions& options);

/// Control count scaled as frames / 1000 * 100, at least 4.
int defaultControlPoints(int frames);

Json toJson(const DofSpline& spline);
DofSpline splineFromJson(const Json& j, const std::string& path);

} // namespace hr
