#include "wvlab/pointer.hpp"

#include <algorithm>
#include <cmath>

#include <fftw3.h>

namespace wvlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Phi(q) for shift s.
double gauss_amp(double q, double shift, double sigma) {
  const double x = q - shift;
  return std::pow(2.0 * kPi * sigma * sigma, -0.25) * std::exp(-x * x / (4.0 * sigma * sigma));
}

// Momentum-space profile |Phi~(p)| = (2 s^2 / pi)^(1/4) exp(-s^2 p^2).
double gauss_amp_momentum(double p, double sigma) {
  return std::pow(2.0 * sigma * sigma / kPi, 0.25) * std::exp(-sigma * sigma * p * p);
}

void check_grid(const BranchedPointer& bp, const Grid& grid) {
  if (!is_power_of_two(grid.points))
    throw Error(ErrorKind::GridError, "grid point count must be a power of two");
  if (grid.max <= grid.min) throw Error(ErrorKind::GridError, "grid max must exceed min");
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bp.branches) {
    lo = std::min(lo, b.shift);
    hi = std::max(hi, b.shift);
  }
  if (grid.min > lo - 8.0 * bp.sigma || grid.max < hi + 8.0 * bp.sigma)
    throw Error(ErrorKind::GridError, "grid must span at least 8 sigma beyond the extreme shifts");
}

Vec grid_wavefunction(const BranchedPointer& bp, const Grid& grid) {
  const double dq = (grid.max - grid.min) / grid.points;
  Vec psi = Vec::Zero(grid.points);
  for (int j = 0; j < grid.points; ++j) {
    const double q = grid.min + j * dq;
    cplx amp = 0.0;
    for (const auto& b : bp.branches) amp += b.coef * gauss_amp(q, b.shift, bp.sigma);
    psi(j) = amp;
  }
  return psi;
}

} // namespace

double gaussian_overlap(double a, double b, double sigma) {
  const double d = a - b;
  return std::exp(-d * d / (8.0 * sigma * sigma));
}

double BranchedPointer::norm_squared() const {
  double total = 0.0;
  const int n = static_cast<int>(branches.size());
  for (int m = 0; m < n; ++m) {
    total += std::norm(branches[m].coef);
    for (int k = m + 1; k < n; ++k)
      total += 2.0 * (std::conj(branches[m].coef) * branches[k].coef).real() *
               gaussian_overlap(branches[m].shift, branches[k].shift, sigma);
  }
  return total;
}

std::vector<CouplingBranch> couple(const PureState& state, const Observable& A, int target) {
  if (target < 0 || target >= static_cast<int>(state.dims().size()))
    throw Error(ErrorKind::InvalidArgument, "couple: subsystem index out of range");
  std::vector<CouplingBranch> out;
  out.reserve(A.spectrum().size());
  for (const auto& es : A.spectrum()) {
    Mat proj = embed(es.projector, state.dims(), target);
    out.push_back({es.value, PureState(state.dims(), proj * state.amps(), false)});
  }
  return out;
}

std::pair<BranchedPointer, double> postselect(const std::vector<CouplingBranch>& branches,
                                              double g, const GaussianPointer& pointer,
                                              const PureState& final_state) {
  BranchedPointer bp{pointer.sigma, {}};
  bp.branches.reserve(branches.size());
  double max_coef = 0.0;
  for (const auto& br : branches) {
    if (final_state.dim() != br.projected.dim())
      throw Error(ErrorKind::InvalidArgument, "postselect: dimension mismatch");
    const cplx coef = final_state.amps().dot(br.projected.amps());
    max_coef = std::max(max_coef, std::abs(coef));
    bp.branches.push_back({coef, g * br.eigenvalue});
  }
  if (max_coef <= 1e-14)
    throw Error(ErrorKind::ImpossiblePostselection,
                "postselection annihilates every coupling branch");
  return {bp, bp.norm_squared()};
}

PointerMoments moments_closed(const BranchedPointer& bp) {
  const double norm2 = bp.norm_squared();
  if (norm2 <= 0.0)
    throw Error(ErrorKind::InvalidArgument, "moments of a zero-norm pointer state");

  // Matrix elements between shifted Gaussians:
  //   <a|Q|b>   = O(a,b) (a+b)/2
  //   <a|Q^2|b> = O(a,b) (s^2 + ((a+b)/2)^2)
  //   <a|P|b>   = O(a,b) i (a-b) / (4 s^2)
  double q1 = 0.0, q2 = 0.0, p1 = 0.0;
  const double s2 = bp.sigma * bp.sigma;
  for (const auto& m : bp.branches)
    for (const auto& n : bp.branches) {
      const double ov = gaussian_overlap(m.shift, n.shift, bp.sigma);
      const cplx w = std::conj(m.coef) * n.coef * ov;
      const double mid = 0.5 * (m.shift + n.shift);
      q1 += (w * mid).real();
      q2 += (w * (s2 + mid * mid)).real();
      p1 += (w * cplx(0.0, (m.shift - n.shift) / (4.0 * s2))).real();
    }
  q1 /= norm2;
  q2 /= norm2;
  p1 /= norm2;
  return {q1, p1, q2 - q1 * q1};
}

PointerMoments moments_grid(const BranchedPointer& bp, const Grid& grid) {
  check_grid(bp, grid);
  const int n = grid.points;
  const double dq = (grid.max - grid.min) / n;
  Vec psi = grid_wavefunction(bp, grid);

  double norm2 = 0.0, q1 = 0.0, q2 = 0.0, boundary = 0.0;
  for (int j = 0; j < n; ++j) {
    const double q = grid.min + j * dq;
    const double d = std::norm(psi(j)) * dq;
    norm2 += d;
    q1 += d * q;
    q2 += d * q * q;
  }
  boundary = (std::norm(psi(0)) + std::norm(psi(n - 1))) * dq;
  if (norm2 <= 0.0) throw Error(ErrorKind::GridError, "zero probability mass on the grid");
  if (boundary > 1e-10 * norm2)
    throw Error(ErrorKind::GridError, "probability mass within 1e-10 of the grid boundary");

  // Spectral derivative on the periodic grid: P psi = IFFT(k * FFT(psi)).
  std::vector<cplx> freq(n), deriv(n);
  fftw_plan fwd = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(psi.data()),
                                   reinterpret_cast<fftw_complex*>(freq.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  const double dk = 2.0 * kPi / (grid.max - grid.min);
  for (int j = 0; j < n; ++j) {
    const int m = j <= n / 2 ? j : j - n;
    freq[j] *= (j == n / 2) ? 0.0 : m * dk; // drop the unmatched Nyquist mode
  }
  fftw_plan bwd = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(freq.data()),
                                   reinterpret_cast<fftw_complex*>(deriv.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  double p1 = 0.0;
  for (int j = 0; j < n; ++j)
    p1 += (std::conj(psi(j)) * deriv[j] / static_cast<double>(n)).real() * dq;

  q1 /= norm2;
  q2 /= norm2;
  p1 /= norm2;
  return {q1, p1, q2 - q1 * q1};
}

std::vector<double> position_density(const BranchedPointer& bp, const Grid& grid) {
  check_grid(bp, grid);
  Vec psi = grid_wavefunction(bp, grid);
  std::vector<double> density(grid.points);
  double total = 0.0;
  for (int j = 0; j < grid.points; ++j) {
    density[j] = std::norm(psi(j));
    total += density[j];
  }
  for (auto& d : density) d /= total;
  return density;
}

std::vector<double> momentum_density(const BranchedPointer& bp, const Grid& grid) {
  if (!is_power_of_two(grid.points))
    throw Error(ErrorKind::GridError, "grid point count must be a power of two");
  std::vector<double> density(grid.points);
  const double dp = (grid.max - grid.min) / grid.points;
  double total = 0.0;
  for (int j = 0; j < grid.points; ++j) {
    const double p = grid.min + j * dp;
    cplx amp = 0.0;
    for (const auto& b : bp.branches)
      amp += b.coef * std::polar(1.0, -p * b.shift);
    density[j] = std::norm(amp) * std::pow(gauss_amp_momentum(p, bp.sigma), 2);
    total += density[j];
  }
  if (total <= 0.0) throw Error(ErrorKind::GridError, "zero probability mass on the grid");
  for (auto& d : density) d /= total;
  return density;
}

SweepPoint sweep_point(const WeakMeasurement& wm, double g) {
  auto branches = couple(wm.psi_in, wm.observable, wm.target);
  auto [bp, prob] = postselect(branches, g, wm.pointer, wm.psi_fin);
  return {g, moments_closed(bp), prob};
}

double extrapolate_even(std::span<const double> g_list, std::span<const double> values) {
  const int n = static_cast<int>(g_list.size());
  if (n < 3 || static_cast<int>(values.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "extrapolation needs >= 3 sample points");
  // Least-squares fit of value = c0 + c1 x + c2 x^2 in x = g^2, scaled by the
  // largest node for conditioning; returns c0.
  const double xmax = g_list[0] * g_list[0];
  Eigen::MatrixXd vand(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double x = g_list[i] * g_list[i] / xmax;
    vand(i, 0) = 1.0;
    vand(i, 1) = x;
    vand(i, 2) = x * x;
    rhs(i) = values[i];
  }
  Eigen::VectorXd c = vand.colPivHouseholderQr().solve(rhs);
  return c(0);
}

namespace {

void check_g_list(std::span<const double> g_list) {
  if (g_list.size() < 3)
    throw Error(ErrorKind::InvalidArgument, "g sweep needs at least 3 values");
  for (size_t i = 0; i < g_list.size(); ++i) {
    if (g_list[i] <= 0.0)
      throw Error(ErrorKind::InvalidArgument, "g sweep values must be positive");
    if (i > 0 && g_list[i] >= g_list[i - 1])
      throw Error(ErrorKind::InvalidArgument, "g sweep values must be strictly descending");
  }
  if (g_list.front() / g_list.back() < 100.0)
    throw Error(ErrorKind::InvalidArgument, "g sweep must span at least two decades");
}

} // namespace

cplx estimate_weak_value(const WeakMeasurement& wm, std::span<const double> g_list) {
  check_g_list(g_list);
  const double s2 = wm.pointer.sigma * wm.pointer.sigma;
  std::vector<double> re(g_list.size()), im(g_list.size());
  for (size_t i = 0; i < g_list.size(); ++i) {
    const auto pt = sweep_point(wm, g_list[i]);
    re[i] = pt.moments.mean_q / pt.g;
    im[i] = 2.0 * s2 * pt.moments.mean_p / pt.g;
  }
  return {extrapolate_even(g_list, re), extrapolate_even(g_list, im)};
}

Ensemble Ensemble::from_density(const DensityOp& rho) {
  Eigen::SelfAdjointEigenSolver<Mat> es(rho.mat());
  Ensemble out;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (p <= 1e-14) continue;
    out.components.emplace_back(p, PureState(rho.dims(), es.eigenvectors().col(k)));
  }
  return out;
}

cplx estimate_weak_value_mixed(const Ensemble& rho_i, const Ensemble& rho_f,
                               const Observable& A, const GaussianPointer& pointer,
                               std::span<const double> g_list) {
  check_g_list(g_list);
  if (rho_i.components.empty() || rho_f.components.empty())
    throw Error(ErrorKind::InvalidArgument, "empty ensemble");

  const double s2 = pointer.sigma * pointer.sigma;
  std::vector<double> re(g_list.size()), im(g_list.size());
  for (size_t gi = 0; gi < g_list.size(); ++gi) {
    const double g = g_list[gi];
    double wq = 0.0, wp = 0.0, wtot = 0.0;
    for (const auto& [pl, ket_l] : rho_i.components) {
      auto branches = couple(ket_l, A, 0);
      for (const auto& [qk, ket_k] : rho_f.components) {
        BranchedPointer bp{pointer.sigma, {}};
        double max_coef = 0.0;
        for (const auto& br : branches) {
          const cplx coef = ket_k.amps().dot(br.projected.amps());
          max_coef = std::max(max_coef, std::abs(coef));
          bp.branches.push_back({coef, g * br.eigenvalue});
        }
        if (max_coef <= 1e-14) continue; // this (l,k) pair never fires
        const double prob = bp.norm_squared();
        const auto mom = moments_closed(bp);
        const double w = pl * qk * prob;
        wq += w * mom.mean_q;
        wp += w * mom.mean_p;
        wtot += w;
      }
    }
    if (wtot <= tolerances().overlap)
      throw Error(ErrorKind::OrthogonalPostselection,
                  "ensemble postselection weight below the guard");
    re[gi] = (wq / wtot) / g;
    im[gi] = 2.0 * s2 * (wp / wtot) / g;
  }
  return {extrapolate_even(g_list, re), extrapolate_even(g_list, im)};
}

} // namespace wvlab
