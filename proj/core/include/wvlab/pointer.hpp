#ifndef WVLAB_POINTER_HPP
#define WVLAB_POINTER_HPP

#include <span>
#include <utility>
#include <vector>

#include "wvlab/qmath.hpp"

namespace wvlab {

// Apparatus wavefunction: the unit-normalized real Gaussian
// Phi(q) = (2 pi s^2)^(-1/4) exp(-q^2 / (4 s^2)), so Var(Q) = s^2 and
// Var(P) = 1/(4 s^2).
struct GaussianPointer {
  double sigma = 1.0;
};

struct PointerBranch {
  cplx coef;
  double shift;
};

// Conditional pointer state after postselection: sum_n coef_n Phi(q - shift_n),
// generally unnormalized (norm^2 is the postselection probability).
struct BranchedPointer {
  double sigma = 1.0;
  std::vector<PointerBranch> branches;

  double norm_squared() const;
};

// Overlap of two shifted copies of Phi: integral Phi(q-a) Phi(q-b) dq
// = exp(-(a-b)^2 / (8 s^2)).
double gaussian_overlap(double a, double b, double sigma);

// One eigenspace branch of the impulsive coupling exp(-i g A (x) P): the
// system is projected and the pointer translated by g * eigenvalue.
struct CouplingBranch {
  double eigenvalue;
  PureState projected; // unnormalized
};

// Projects `state` onto the eigenspaces of A acting on subsystem `target`.
std::vector<CouplingBranch> couple(const PureState& state, const Observable& A, int target);

// Applies <final| to every branch; shift_n = g * a_n.  Second element is the
// postselection success probability (the squared norm).
std::pair<BranchedPointer, double> postselect(const std::vector<CouplingBranch>& branches,
                                              double g, const GaussianPointer& pointer,
                                              const PureState& final_state);

struct PointerMoments {
  double mean_q;
  double mean_p;
  double var_q;
};

// Exact conditional moments from the shifted-Gaussian overlap integrals.
PointerMoments moments_closed(const BranchedPointer& bp);

struct Grid {
  double min;
  double max;
  int points; // power of two
};

// Independent oracle: discretize the wavefunction on the grid, first moments
// by direct summation, mean momentum by spectral differentiation (FFT).
PointerMoments moments_grid(const BranchedPointer& bp, const Grid& grid);

// |psi(q)|^2 sampled on a uniform grid, normalized to sum 1.  Used to draw
// position readouts in Monte Carlo mode.
std::vector<double> position_density(const BranchedPointer& bp, const Grid& grid);
// Same in the momentum representation.
std::vector<double> momentum_density(const BranchedPointer& bp, const Grid& grid);

// A single weak measurement: couple A (on `target` of psi_in) to the pointer,
// postselect on psi_fin, read the conditional moments.
struct WeakMeasurement {
  PureState psi_in;
  PureState psi_fin;
  Observable observable;
  int target = 0;
  GaussianPointer pointer;
};

// Moments of the conditional pointer state at coupling strength g, plus the
// success probability.
struct SweepPoint {
  double g;
  PointerMoments moments;
  double success_prob;
};

SweepPoint sweep_point(const WeakMeasurement& wm, double g);

// Re ~ meanQ/g, Im ~ 2 s^2 meanP / g, extrapolated to g -> 0 by a
// least-squares polynomial in g^2 (degree 2).  g_list must be descending,
// positive, >= 3 values spanning at least two decades.
cplx estimate_weak_value(const WeakMeasurement& wm, std::span<const double> g_list);

// Spectral ensemble of a density operator: sum_l p_l |l><l| with p_l > 0.
struct Ensemble {
  std::vector<std::pair<double, PureState>> components;

  static Ensemble from_density(const DensityOp& rho);
};

// Mixed pre/postselection by eigen-ensemble averaging: moments are
// probability-weighted over preparation l and accepted outcome k.  Converges
// to Tr[rho_f A rho_i] / Tr[rho_f rho_i].
cplx estimate_weak_value_mixed(const Ensemble& rho_i, const Ensemble& rho_f,
                               const Observable& A, const GaussianPointer& pointer,
                               std::span<const double> g_list);

// g -> 0 limit of a quantity sampled at the g_list nodes, assuming an even
// power series in g (exact for the estimators above).
double extrapolate_even(std::span<const double> g_list, std::span<const double> values);

} // namespace wvlab

#endif
