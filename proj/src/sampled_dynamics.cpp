#include "dtsp/sampled_dynamics.hpp"

#include <cmath>
#include <sstream>

#include "dtsp/errors.hpp"

namespace dtsp {

std::string to_string(const Vec& v) {
  std::ostringstream os;
  os.precision(10);
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i)
    os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

bool IntervalBox::contains(const Vec& p) const noexcept {
  for (std::size_t i = 0; i < center.size(); ++i)
    if (p[i] < lower(i) || p[i] > upper(i))
      return false;
  return true;
}

void VectorFieldSpec::validate() const {
  if (state_dim == 0 || state_dim > kMaxDim || input_dim == 0 || input_dim > kMaxDim)
    throw UsageError("VectorFieldSpec: bad dimensions");
  if (!rhs)
    throw UsageError("VectorFieldSpec: missing right-hand side");
  if (w_lower.size() != state_dim || w_upper.size() != state_dim)
    throw UsageError("VectorFieldSpec: disturbance box has wrong dimension");
  for (std::size_t i = 0; i < state_dim; ++i)
    if (!(w_lower[i] <= w_upper[i]))
      throw UsageError("VectorFieldSpec: disturbance bounds not ordered in component " +
                       std::to_string(i));
  if (!(tau > 0))
    throw UsageError("VectorFieldSpec: sampling period must be positive");
  if (substeps < 1)
    throw UsageError("VectorFieldSpec: need at least one integration substep");
}

Vec VectorFieldSpec::w_center() const {
  Vec c(state_dim);
  for (std::size_t i = 0; i < state_dim; ++i)
    c[i] = 0.5 * (w_lower[i] + w_upper[i]);
  return c;
}

Vec VectorFieldSpec::w_half_width() const {
  Vec h(state_dim);
  for (std::size_t i = 0; i < state_dim; ++i)
    h[i] = 0.5 * (w_upper[i] - w_lower[i]);
  return h;
}

namespace {

template <class F>
Vec rk4(F&& field, Vec x, double tau, int substeps) {
  const double h = tau / substeps;
  for (int s = 0; s < substeps; ++s) {
    const Vec k1 = field(x);
    const Vec k2 = field(axpy(x, 0.5 * h, k1));
    const Vec k3 = field(axpy(x, 0.5 * h, k2));
    const Vec k4 = field(axpy(x, h, k3));
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return x;
}

}  // namespace

Vec integrate(const VectorFieldSpec& spec, const Vec& x, const Vec& u, const Vec& w) {
  auto field = [&](const Vec& y) {
    Vec d = spec.rhs(y, u);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] += w[i];
      if (!std::isfinite(d[i]))
        throw NumericError("non-finite derivative at state " + to_string(y) + " under input " +
                           to_string(u));
    }
    return d;
  };
  return rk4(field, x, spec.tau, spec.substeps);
}

Vec integrate_nominal(const VectorFieldSpec& spec, const Vec& x, const Vec& u) {
  return integrate(spec, x, u, spec.w_center());
}

Vec propagate_radius(const GrowthBoundModel& model, const Vec& r0, const Vec& u, const Vec& w_half,
                     double tau, int substeps) {
  return propagate_radius(model.matrix(u, IntervalBox{Vec(r0.size()), r0}), r0, w_half, tau, substeps);
}

Vec propagate_radius(const std::vector<double>& L, const Vec& r0, const Vec& w_half, double tau,
                     int substeps) {
  const std::size_t n = r0.size();
  if (w_half.size() != n)
    throw UsageError("propagate_radius: dimension mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (!(r0[i] >= 0) || !(w_half[i] >= 0))
      throw UsageError("propagate_radius: radius and disturbance half-width must be nonnegative");
  if (L.size() != n * n)
    throw UsageError("propagate_radius: growth bound matrix has wrong size");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && L[i * n + j] < 0)
        throw UsageError("propagate_radius: growth bound has negative off-diagonal entry");

  auto field = [&](const Vec& r) {
    Vec d(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = w_half[i];
      for (std::size_t j = 0; j < n; ++j)
        s += L[i * n + j] * r[j];
      d[i] = s;
    }
    return d;
  };
  Vec r = rk4(field, r0, tau, substeps);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = std::max(r[i], 0.0);
  return r;
}

IntervalBox overapprox_successor(const VectorFieldSpec& spec, const GrowthBoundModel& model,
                                 const IntervalBox& cell, const Vec& u) {
  return {integrate_nominal(spec, cell.center, u),
          propagate_radius(model.matrix(u, cell), cell.radius, spec.w_half_width(), spec.tau, spec.substeps)};
}

}  // namespace dtsp
