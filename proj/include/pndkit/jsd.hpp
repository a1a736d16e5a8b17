#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "pndkit/error.hpp"
#include "pndkit/pnd.hpp"

namespace pndkit {

using Complex = std::complex<double>;

/// Sample points start + k * step, k = 0 .. size-1.
struct UniformAxis {
  double start = 0.0;
  double step = 1.0;
  Eigen::Index size = 0;

  double operator[](Eigen::Index k) const { return start + step * static_cast<double>(k); }

  bool same_as(const UniformAxis& o) const {
    const double tol = 1e-9 * std::abs(step);
    return size == o.size && std::abs(step - o.step) <= tol && std::abs(start - o.start) <= tol;
  }

  /// Axis through sorted sample points. Successive differences must agree with
  /// the mean step to 1e-12 relative (plus a few ulps of the coordinate magnitude).
  static UniformAxis from_points(std::span<const double> pts) {
    require(pts.size() >= 2, "axis needs at least two points");
    const auto n = static_cast<Eigen::Index>(pts.size());
    const double step = (pts.back() - pts.front()) / static_cast<double>(n - 1);
    require(step > 0.0, "axis points must be strictly increasing");
    double scale = 0.0;
    for (double v : pts) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * step + 8.0 * std::numeric_limits<double>::epsilon() * scale;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      require(std::abs((pts[k] - pts[k - 1]) - step) <= tol, "axis is not uniform");
    }
    return {pts.front(), step, n};
  }

  /// n cell midpoints covering [lo, hi].
  static UniformAxis midpoints(double lo, double hi, Eigen::Index n) {
    require(n >= 1 && hi > lo, "midpoints: need n >= 1 and hi > lo");
    const double step = (hi - lo) / static_cast<double>(n);
    return {lo + 0.5 * step, step, n};
  }
};

/// Joint spectral amplitude f(omega_s, omega_i) sampled on a uniform lattice.
/// Row index runs along the signal axis, column index along the idler axis.
/// Integrals are midpoint sums, so "normalized" means sum |f|^2 ds di = 1 exactly
/// at grid resolution.
class JsdGrid {
 public:
  enum class Scale { normalize, as_is };

  JsdGrid(UniformAxis axis_s, UniformAxis axis_i, Eigen::MatrixXcd values, Scale scale = Scale::normalize)
      : axis_s_(axis_s), axis_i_(axis_i), values_(std::move(values)) {
    require(values_.rows() == axis_s_.size && values_.cols() == axis_i_.size,
            "JSD values do not match the axis sizes");
    require(axis_s_.step > 0.0 && axis_i_.step > 0.0, "JSD axes need positive steps");
    require(values_.allFinite(), "JSD values must be finite");
    if (scale == Scale::normalize) {
      const double n2 = norm_sq();
      require(n2 > 0.0, "JSD is identically zero");
      values_ /= std::sqrt(n2);
    }
  }

  const UniformAxis& axis_s() const { return axis_s_; }
  const UniformAxis& axis_i() const { return axis_i_; }
  const Eigen::MatrixXcd& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  double cell_area() const { return axis_s_.step * axis_i_.step; }
  double norm_sq() const { return values_.squaredNorm() * cell_area(); }
  bool is_normalized(double tol = 1e-10) const { return std::abs(norm_sq() - 1.0) <= tol; }

  bool shares_axes(const JsdGrid& o) const { return axis_s_.same_as(o.axis_s_) && axis_i_.same_as(o.axis_i_); }

 private:
  UniformAxis axis_s_;
  UniformAxis axis_i_;
  Eigen::MatrixXcd values_;
};

/// Correlated two-dimensional Gaussian amplitude. sigma_plus / sigma_minus are
/// the intensity standard deviations along the principal axes; the sigma_plus
/// axis is rotated by theta_deg from the signal axis.
struct GaussianJsdSpec {
  double sigma_plus = 1.0;
  double sigma_minus = 1.0;
  double theta_deg = 45.0;
  Eigen::Index n_s = 128;
  Eigen::Index n_i = 128;
  double center_s = 0.0;
  double center_i = 0.0;
  /// Half-width of each axis; 0 picks six marginal standard deviations.
  double half_width_s = 0.0;
  double half_width_i = 0.0;
};

inline JsdGrid gaussian_jsd(const GaussianJsdSpec& spec) {
  require(spec.sigma_plus > 0.0 && spec.sigma_minus > 0.0, "gaussian: widths must be positive");
  require(spec.n_s >= 2 && spec.n_i >= 2, "gaussian: need at least 2 points per axis");
  const double th = spec.theta_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th);
  const double s = std::sin(th);
  const double sp2 = spec.sigma_plus * spec.sigma_plus;
  const double sm2 = spec.sigma_minus * spec.sigma_minus;
  const double hw_s = spec.half_width_s > 0.0 ? spec.half_width_s : 6.0 * std::sqrt(sp2 * c * c + sm2 * s * s);
  const double hw_i = spec.half_width_i > 0.0 ? spec.half_width_i : 6.0 * std::sqrt(sp2 * s * s + sm2 * c * c);
  const auto ax_s = UniformAxis::midpoints(spec.center_s - hw_s, spec.center_s + hw_s, spec.n_s);
  const auto ax_i = UniformAxis::midpoints(spec.center_i - hw_i, spec.center_i + hw_i, spec.n_i);
  Eigen::MatrixXcd f(spec.n_s, spec.n_i);
  for (Eigen::Index a = 0; a < spec.n_s; ++a) {
    const double x = ax_s[a] - spec.center_s;
    for (Eigen::Index b = 0; b < spec.n_i; ++b) {
      const double y = ax_i[b] - spec.center_i;
      const double u = c * x + s * y;
      const double v = -s * x + c * y;
      f(a, b) = std::exp(-u * u / (4.0 * sp2) - v * v / (4.0 * sm2));
    }
  }
  return JsdGrid(ax_s, ax_i, std::move(f));
}

/// Real amplitude transmittance t(omega) of a bandpass filter on one axis,
/// with reflectance r = sqrt(1 - t^2).
class FilterProfile {
 public:
  enum class Kind { amplitude, intensity };

  FilterProfile(UniformAxis axis, Eigen::VectorXd values, Kind kind = Kind::amplitude)
      : axis_(axis), t_(std::move(values)) {
    require(t_.size() == axis_.size, "filter values do not match the axis size");
    for (Eigen::Index k = 0; k < t_.size(); ++k) {
      require(std::isfinite(t_(k)) && t_(k) >= 0.0 && t_(k) <= 1.0, "filter transmittance outside [0, 1]");
      if (kind == Kind::intensity) t_(k) = std::sqrt(t_(k));
    }
  }

  static FilterProfile all_pass(UniformAxis axis) { return {axis, Eigen::VectorXd::Ones(axis.size)}; }

  /// Ideal bandpass: t = 1 on |omega - center| <= width/2, else 0.
  static FilterProfile rect(UniformAxis axis, double center, double width) {
    require(width > 0.0, "rect filter width must be positive");
    Eigen::VectorXd t(axis.size);
    const double half = 0.5 * width * (1.0 + 1e-12);
    for (Eigen::Index k = 0; k < axis.size; ++k) t(k) = std::abs(axis[k] - center) <= half ? 1.0 : 0.0;
    return {axis, std::move(t)};
  }

  /// Gaussian intensity transmittance with the given FWHM and unit peak.
  static FilterProfile gauss(UniformAxis axis, double center, double fwhm) {
    require(fwhm > 0.0, "gauss filter FWHM must be positive");
    Eigen::VectorXd t(axis.size);
    const double a = 4.0 * std::numbers::ln2 / (fwhm * fwhm);
    for (Eigen::Index k = 0; k < axis.size; ++k) {
      const double d = axis[k] - center;
      t(k) = std::exp(-a * d * d);
    }
    return {axis, std::move(t), Kind::intensity};
  }

  const UniformAxis& axis() const { return axis_; }
  const Eigen::VectorXd& transmission() const { return t_; }
  Eigen::VectorXd reflection() const {
    return (1.0 - t_.array().square()).max(0.0).sqrt().matrix();
  }

 private:
  UniformAxis axis_;
  Eigen::VectorXd t_;
};

/// Effective mode number from the Schmidt coefficients of the grid,
/// K = 1 / sum c_k^4 with c_k the singular values of f scaled by sqrt(ds di).
inline double schmidt_number_svd(const JsdGrid& jsd) {
  require(jsd.is_normalized(), "schmidt_number_svd: JSD is not normalized");
  const Eigen::MatrixXcd a = jsd.values() * std::sqrt(jsd.cell_area());
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(a);
  const Eigen::VectorXd c2 = svd.singularValues().array().square().matrix();
  return 1.0 / c2.squaredNorm();
}

enum class Contraction { gram, direct };
enum class Axis { x, y };

namespace detail {

// Literal quadruple sums; O(n^4), kept for cross-checking the contractions.
inline Complex direct_pair_overlap(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& g, Axis axis) {
  const Eigen::Index nx = h.rows();
  const Eigen::Index ny = h.cols();
  Complex acc = 0.0;
  for (Eigen::Index x1 = 0; x1 < nx; ++x1)
    for (Eigen::Index x2 = 0; x2 < nx; ++x2)
      for (Eigen::Index y1 = 0; y1 < ny; ++y1)
        for (Eigen::Index y2 = 0; y2 < ny; ++y2) {
          const Complex pre = std::conj(h(x1, y1)) * std::conj(g(x2, y2));
          acc += axis == Axis::x ? pre * h(x2, y1) * g(x1, y2) : pre * h(x1, y2) * g(x2, y1);
        }
  return acc;
}

inline Complex direct_complex_overlap(const Eigen::MatrixXcd& f1, const Eigen::MatrixXcd& f2,
                                      const Eigen::MatrixXcd& f3, const Eigen::MatrixXcd& f4) {
  const Eigen::Index nx = f1.rows();
  const Eigen::Index ny = f1.cols();
  Complex acc = 0.0;
  for (Eigen::Index x1 = 0; x1 < nx; ++x1)
    for (Eigen::Index x2 = 0; x2 < nx; ++x2)
      for (Eigen::Index y1 = 0; y1 < ny; ++y1)
        for (Eigen::Index y2 = 0; y2 < ny; ++y2)
          acc += std::conj(f1(x1, y1)) * std::conj(f2(x2, y2)) * f3(x1, y2) * f4(x2, y1);
  return acc;
}

}  // namespace detail

/// Partial overlap of two normalized amplitudes with the signal (x) or idler (y)
/// arguments exchanged:
///   O_x(h, g) = sum h*(x1,y1) g*(x2,y2) h(x2,y1) g(x1,y2)
///   O_y(h, g) = sum h*(x1,y1) g*(x2,y2) h(x1,y2) g(x2,y1)
/// Both reduce to squared Frobenius norms of a single matrix product:
/// O_x = |h^H g|_F^2 and O_y = |h g^H|_F^2 (times the squared cell area).
inline double pair_overlap(const JsdGrid& h, const JsdGrid& g, Axis axis,
                           Contraction method = Contraction::gram) {
  require(h.shares_axes(g), "pair_overlap: grids do not share axes");
  const double area2 = h.cell_area() * h.cell_area();
  if (method == Contraction::direct) {
    return detail::direct_pair_overlap(h.values(), g.values(), axis).real() * area2;
  }
  if (axis == Axis::x) return (h.values().adjoint() * g.values()).squaredNorm() * area2;
  return (h.values() * g.values().adjoint()).squaredNorm() * area2;
}

inline double pair_overlap(const std::optional<JsdGrid>& h, const std::optional<JsdGrid>& g, Axis axis,
                           Contraction method = Contraction::gram) {
  if (!h || !g) return 0.0;
  return pair_overlap(*h, *g, axis, method);
}

/// Schmidt number from the quadruple integral of f, evaluated as
/// 1/K = tr((A A^H)^2) (ds di)^2 using the smaller Gram matrix.
inline double schmidt_number_analytic(const JsdGrid& jsd) {
  require(jsd.is_normalized(), "schmidt_number_analytic: JSD is not normalized");
  const auto& a = jsd.values();
  const Eigen::MatrixXcd gram = a.rows() <= a.cols() ? Eigen::MatrixXcd(a * a.adjoint())
                                                     : Eigen::MatrixXcd(a.adjoint() * a);
  const double area = jsd.cell_area();
  return 1.0 / (gram.squaredNorm() * area * area);
}

/// O_c = sum F1*(x1,y1) F2*(x2,y2) F3(x1,y2) F4(x2,y1); zero if any segment is empty.
inline Complex complex_overlap(const std::optional<JsdGrid>& f1, const std::optional<JsdGrid>& f2,
                               const std::optional<JsdGrid>& f3, const std::optional<JsdGrid>& f4,
                               Contraction method = Contraction::gram) {
  if (!f1 || !f2 || !f3 || !f4) return 0.0;
  require(f1->shares_axes(*f2) && f1->shares_axes(*f3) && f1->shares_axes(*f4),
          "complex_overlap: grids do not share axes");
  const double area2 = f1->cell_area() * f1->cell_area();
  if (method == Contraction::direct) {
    return detail::direct_complex_overlap(f1->values(), f2->values(), f3->values(), f4->values()) * area2;
  }
  // Contract the idler index first: B(x1,x2) = sum_y F1*(x1,y) F4(x2,y), C(x1,x2) = sum_y F3(x1,y) F2*(x2,y).
  const Eigen::MatrixXcd b = f1->values().conjugate() * f4->values().transpose();
  const Eigen::MatrixXcd c = f3->values() * f2->values().adjoint();
  return b.cwiseProduct(c).sum() * area2;
}

/// Filter split of a JSD into transmitted/reflected quadrants.
/// Index 0..3 holds F1 (t_s r_i), F2 (r_s t_i), F3 (t_s t_i), F4 (r_s r_i).
struct Segmentation {
  static constexpr double kEmptyThreshold = 1e-15;

  std::array<double, 4> q{};
  std::array<std::optional<JsdGrid>, 4> F;
  std::array<double, 4> kappa{1.0, 1.0, 1.0, 1.0};
  double ox13 = 0.0;
  double ox24 = 0.0;
  double oy14 = 0.0;
  double oy23 = 0.0;
  Complex oc = 0.0;

  bool empty(int j) const { return !F[static_cast<std::size_t>(j)].has_value(); }
};

inline Segmentation segment(const JsdGrid& jsd, const FilterProfile& filt_s, const FilterProfile& filt_i) {
  require(jsd.is_normalized(), "segment: JSD is not normalized");
  require(filt_s.axis().same_as(jsd.axis_s()), "segment: signal filter axis does not match the JSD");
  require(filt_i.axis().same_as(jsd.axis_i()), "segment: idler filter axis does not match the JSD");

  const Eigen::VectorXd ts = filt_s.transmission();
  const Eigen::VectorXd rs = filt_s.reflection();
  const Eigen::VectorXd ti = filt_i.transmission();
  const Eigen::VectorXd ri = filt_i.reflection();
  const std::array<std::pair<const Eigen::VectorXd*, const Eigen::VectorXd*>, 4> weights{{
      {&ts, &ri}, {&rs, &ti}, {&ts, &ti}, {&rs, &ri}}};

  Segmentation seg;
  for (std::size_t j = 0; j < 4; ++j) {
    const auto& [ws, wi] = weights[j];
    Eigen::MatrixXcd part = ws->asDiagonal() * jsd.values() * wi->asDiagonal();
    const double qj = part.squaredNorm() * jsd.cell_area();
    if (qj < Segmentation::kEmptyThreshold) {
      seg.q[j] = 0.0;
      continue;
    }
    seg.q[j] = qj;
    seg.F[j].emplace(jsd.axis_s(), jsd.axis_i(), std::move(part));
    seg.kappa[j] = schmidt_number_analytic(*seg.F[j]);
  }
  seg.ox13 = pair_overlap(seg.F[0], seg.F[2], Axis::x);
  seg.ox24 = pair_overlap(seg.F[1], seg.F[3], Axis::x);
  seg.oy14 = pair_overlap(seg.F[0], seg.F[3], Axis::y);
  seg.oy23 = pair_overlap(seg.F[1], seg.F[2], Axis::y);
  seg.oc = complex_overlap(seg.F[0], seg.F[1], seg.F[2], seg.F[3]);
  return seg;
}

/// Squared pair-generation strength |xi|^2; the two-pair truncation needs it small.
struct PumpGain {
  double xi_sq;

  explicit PumpGain(double v) : xi_sq(v) {
    require(v > 0.0 && v < 0.1, "pump gain |xi|^2 must lie in (0, 0.1)");
  }
};

/// Single-pair contribution |xi|^2 (q4 q2; q1 q3), embedded in a 3x3 matrix.
inline Eigen::Matrix3d single_pair_pnd(const Segmentation& seg, PumpGain gain) {
  const auto& q = seg.q;
  Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
  p(0, 0) = q[3];
  p(0, 1) = q[1];
  p(1, 0) = q[0];
  p(1, 1) = q[2];
  return gain.xi_sq * p;
}

/// Exact two-pair contribution including mode numbers and segment overlaps.
inline Eigen::Matrix3d two_pair_pnd(const Segmentation& seg, PumpGain gain) {
  const double q1 = seg.q[0], q2 = seg.q[1], q3 = seg.q[2], q4 = seg.q[3];
  auto same = [&](std::size_t j) { return seg.q[j] * seg.q[j] * (1.0 + 1.0 / seg.kappa[j]) / 2.0; };
  Eigen::Matrix3d p;
  p(0, 0) = same(3);
  p(0, 1) = q2 * q4 * (1.0 + seg.ox24);
  p(0, 2) = same(1);
  p(1, 0) = q1 * q4 * (1.0 + seg.oy14);
  p(1, 1) = q1 * q2 + q3 * q4 + 2.0 * std::sqrt(q1 * q2 * q3 * q4) * seg.oc.real();
  p(1, 2) = q2 * q3 * (1.0 + seg.oy23);
  p(2, 0) = same(0);
  p(2, 1) = q1 * q3 * (1.0 + seg.ox13);
  p(2, 2) = same(2);
  return gain.xi_sq * gain.xi_sq * p;
}

/// P = P0 + P1 + P2 up to two pairs, with P_00 fixed by normalization.
inline PndMatrix synthesize_pnd(const Segmentation& seg, PumpGain gain) {
  Eigen::MatrixXd p = single_pair_pnd(seg, gain) + two_pair_pnd(seg, gain);
  p(0, 0) = 0.0;
  p(0, 0) = 1.0 - p.sum();
  require(p(0, 0) >= 0.0, "synthesize_pnd: pump gain too large to normalize");
  return PndMatrix(std::move(p));
}

inline PndMatrix synthesize_pnd(const JsdGrid& jsd, const FilterProfile& filt_s, const FilterProfile& filt_i,
                                PumpGain gain) {
  return synthesize_pnd(segment(jsd, filt_s, filt_i), gain);
}

}  // namespace pndkit
