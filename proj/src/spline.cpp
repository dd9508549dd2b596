#include "handretarget/spline.h"

#include "handretarget/error.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace hr {

int findSpan(const std::vector<double>& knots, int degree, int numControl, double t, bool fromLeft) {
  const int lo = degree;
  const int hi = numControl - 1;
  if (fromLeft) {
    // Last span whose interval (u_s, u_{s+1}] contains t.
    for (int s = lo; s <= hi; ++s) {
      if (t <= knots[s + 1] && knots[s + 1] > knots[s]) {
        return s;
      }
    }
    return hi;
  }
  if (t >= knots[hi + 1]) {
    return hi;
  }
  const auto it = std::upper_bound(knots.begin() + lo, knots.begin() + hi + 1, t);
  return std::max(lo, static_cast<int>(it - knots.begin()) - 1);
}

void basisFunctions(const std::vector<double>& knots, int degree, int span, double t, double* out) {
  double left[8];
  double right[8];
  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = denom != 0.0 ? out[r] / denom : 0.0;
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

double DofSpline::evaluate(double t, int order, bool fromLeft) const {
  if (control.empty()) {
    throw Error(ErrorKind::InvalidInput, "empty spline");
  }
  t = std::clamp(t, start(), end());
  if (order > degree) {
    return 0.0;
  }
  // Differentiate by building the derivative spline's control points.
  std::vector<double> ctrl = control;
  std::vector<double> kn = knots;
  int p = degree;
  for (int k = 0; k < order; ++k) {
    std::vector<double> d(ctrl.size() - 1);
    for (size_t i = 0; i + 1 < ctrl.size(); ++i) {
      const double span = kn[i + p + 1] - kn[i + 1];
      d[i] = span > 0.0 ? p * (ctrl[i + 1] - ctrl[i]) / span : 0.0;
    }
    ctrl = std::move(d);
    kn = std::vector<double>(kn.begin() + 1, kn.end() - 1);
    --p;
  }
  const int n = static_cast<int>(ctrl.size());
  const int s = findSpan(kn, p, n, t, fromLeft);
  double b[8];
  basisFunctions(kn, p, s, t, b);
  double v = 0.0;
  for (int j = 0; j <= p; ++j) {
    v += b[j] * ctrl[s - p + j];
  }
  return v;
}

std::vector<double> DofSpline::controlTimes() const {
  std::vector<double> t(control.size());
  for (size_t i = 0; i < control.size(); ++i) {
    double sum = 0.0;
    for (int k = 1; k <= degree; ++k) {
      sum += knots[i + k];
    }
    t[i] = sum / degree;
  }
  return t;
}

std::vector<double> uniformKnots(double t0, double t1, int numControl, int degree) {
  std::vector<double> knots;
  const int interior = numControl - degree - 1;
  for (int i = 0; i <= degree; ++i) {
    knots.push_back(t0);
  }
  for (int i = 1; i <= interior; ++i) {
    knots.push_back(t0 + (t1 - t0) * i / (interior + 1));
  }
  for (int i = 0; i <= degree; ++i) {
    knots.push_back(t1);
  }
  return knots;
}

double fitControl(DofSpline& spline, const std::vector<double>& times, const std::vector<double>& values, const std::vector<bool>& valid) {
  const int k = static_cast<int>(spline.knots.size()) - spline.degree - 1;
  const int p = spline.degree;
  // Banded normal equations; the B-spline basis keeps them well conditioned.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(k);
  double basis[8];
  for (size_t i = 0; i < times.size(); ++i) {
    if (!valid.empty() && !valid[i]) {
      continue;
    }
    const int s = findSpan(spline.knots, p, k, times[i]);
    basisFunctions(spline.knots, p, s, times[i], basis);
    for (int a = 0; a <= p; ++a) {
      atb[s - p + a] += basis[a] * values[i];
      for (int b = 0; b <= p; ++b) {
        ata(s - p + a, s - p + b) += basis[a] * basis[b];
      }
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  Eigen::VectorXd x;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 1e-12 * ldlt.vectorD().maxCoeff()) {
    x = ldlt.solve(atb);
  } else {
    x = ata.completeOrthogonalDecomposition().solve(atb);
  }
  spline.control.assign(x.data(), x.data() + x.size());
  double sse = 0.0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (!valid.empty() && !valid[i]) {
      continue;
    }
    const int s = findSpan(spline.knots, p, k, times[i]);
    basisFunctions(spline.knots, p, s, times[i], basis);
    double v = 0.0;
    for (int a = 0; a <= p; ++a) {
      v += basis[a] * x[s - p + a];
    }
    sse += (v - values[i]) * (v - values[i]);
  }
  return sse;
}

DofSpline fitSpline(const std::vector<double>& times, const std::vector<double>& values, const std::vector<bool>& valid, const SplineFitOptions& options) {
  const int k = options.controlPoints;
  if (k < 4) {
    throw Error(ErrorKind::InvalidInput, "a cubic spline needs at least 4 control points", "control_points");
  }
  if (times.size() != values.size() || (!valid.empty() && valid.size() != times.size())) {
    throw Error(ErrorKind::InvalidInput, "sample arrays differ in length");
  }
  const int count = valid.empty() ? static_cast<int>(times.size()) : static_cast<int>(std::count(valid.begin(), valid.end(), true));
  if (count < k) {
    throw Error(ErrorKind::InvalidInput,
        "fewer valid samples (" + std::to_string(count) + ") than control points (" + std::to_string(k) + ")", "control_points");
  }
  const double t0 = *std::min_element(times.begin(), times.end());
  const double t1 = *std::max_element(times.begin(), times.end());
  DofSpline spline;
  spline.knots = uniformKnots(t0, t1, k);
  double best = fitControl(spline, times, values, valid);
  const int p = spline.degree;
  const double gap = options.minKnotGap;
  for (int sweep = 0; sweep < options.knotSweeps && best > 0.0; ++sweep) {
    bool moved = false;
    for (int j = p + 1; j < k; ++j) {
      const double lo = spline.knots[j - 1] + gap;
      const double hi = spline.knots[j + 1] - gap;
      if (!(lo < hi)) {
        continue;
      }
      const double base = spline.knots[j];
      double step = 0.25 * (spline.knots[j + 1] - spline.knots[j - 1]);
      double bestPos = base;
      for (int level = 0; level < 4; ++level, step *= 0.5) {
        for (double cand : {bestPos - step, bestPos + step}) {
          if (cand < lo || cand > hi) {
            continue;
          }
          DofSpline trial = spline;
          trial.knots[j] = cand;
          const double r = fitControl(trial, times, values, valid);
          if (r < best * (1 - 1e-12)) {
            best = r;
            bestPos = cand;
          }
        }
      }
      if (bestPos != base) {
        spline.knots[j] = bestPos;
        moved = true;
      }
    }
    if (!moved) {
      break;
    }
  }
  fitControl(spline, times, values, valid);
  return spline;
}

int defaultControlPoints(int frames) {
  return std::max(4, static_cast<int>(std::lround(frames / 1000.0 * 100.0)));
}

Json toJson(const DofSpline& spline) {
  Json control = Json::array();
  const std::vector<double> t = spline.controlTimes();
  for (size_t i = 0; i < spline.control.size(); ++i) {
    control.push_back({{"t", t[i]}, {"v", spline.control[i]}});
  }
  return {{"degree", spline.degree}, {"knots", spline.knots}, {"control", std::move(control)}};
}

DofSpline splineFromJson(const Json& j, const std::string& path) {
  DofSpline s;
  s.degree = readInt(field(j, "degree", path), path + ".degree");
  const Json& knots = field(j, "knots", path);
  const Json& control = field(j, "control", path);
  if (!knots.is_array() || !control.is_array()) {
    throw Error(ErrorKind::Schema, "knots and control must be arrays", path);
  }
  for (size_t i = 0; i < knots.size(); ++i) {
    s.knots.push_back(readNumber(knots[i], path + ".knots[" + std::to_string(i) + "]"));
  }
  for (size_t i = 0; i < control.size(); ++i) {
    const std::string cp = path + ".control[" + std::to_string(i) + "]";
    s.control.push_back(readNumber(field(control[i], "v", cp), cp + ".v"));
  }
  if (s.degree < 1 || s.degree > 7 || s.knots.size() != s.control.size() + s.degree + 1) {
    throw Error(ErrorKind::Schema, "inconsistent spline degree, knot and control counts", path);
  }
  return s;
}

} // namespace hr
