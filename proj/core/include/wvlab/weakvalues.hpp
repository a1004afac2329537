#ifndef WVLAB_WEAKVALUES_HPP
#define WVLAB_WEAKVALUES_HPP

#include <array>

#include "wvlab/resources.hpp"

namespace wvlab {

// Weak value as a guarded ratio.  Numerator and denominator are kept because
// the interesting prefactors (-1/2, 1/4, n*N^2) live on the pieces, not on
// the quotient.
struct WeakValueResult {
  cplx value;
  cplx numerator;
  cplx denominator;
};

// Unitaries V_m of the Bell re-expansion of |psi-><psi-| (x) rho_f used by
// the noisy-resource formula.  Frozen as
//
//   V1 = sx*sz, V2 = sx, V3 = -sz, V4 = I,
//
// which satisfy sum_m V_m rho V_m^+ = 2 Tr(rho) I and the contraction
// identity <psi-|_12 (|x>_1 (x) |B_m>_23) = -(1/2) eta_m V_m |x>_3 with
// eta = (-1, +1, +1, +1).
struct CorrectionSet {
  std::array<Mat, 4> V;
  std::array<double, 4> eta;
};

const CorrectionSet& correction_unitaries();

// <psi_f|A|psi_i> / <psi_f|psi_i>.
WeakValueResult weak_value_pure(const Observable& A, const PureState& psi_i,
                                const PureState& psi_f);

// <Psi_fin|A_full|Psi_in> / <Psi_fin|Psi_in> on the full tripartite space.
WeakValueResult weak_value_composite(const Observable& A_full, const PureState& Psi_in,
                                     const PureState& Psi_fin);

struct TransitionAmplitude {
  cplx amplitude; // <Psi_fin| A (x) I (x) I |Psi_in>
  cplx overlap;   // <Psi_fin|Psi_in>
};

// Explicit tripartite contraction with the resource's own postselection
// convention: Singlet -> psi-_12 (x) psi_f, NonMax -> phi_n-_12 (x) sz psi_f.
// Evaluates to -(1/2) <psi_f|A|psi_i> resp. n*N^2 <psi_f|A|psi_i>.
TransitionAmplitude transition_amplitude(const Observable& A, const PureState& psi_i,
                                         const PureState& psi_f, const EntangledResource& r);

// Tr[rho_f A rho_i] / Tr[rho_f rho_i].
WeakValueResult weak_value_mixed(const Observable& A, const DensityOp& rho_i,
                                 const DensityOp& rho_f);

// Tr[chi_fin A_full chi_in] / Tr[chi_fin chi_in] on the full space.
WeakValueResult weak_value_trace_composite(const Observable& A_full, const DensityOp& chi_in,
                                           const DensityOp& chi_fin);

// rho_i (x) |psi-><psi-| and |psi-><psi-| (x) rho_f.
DensityOp make_chi_in(const DensityOp& rho_i);
DensityOp make_chi_fin(const DensityOp& rho_f);

// Noisy shared resource xi:
//   sum_mn Tr[V_m rho_f V_n^+ A rho_i] xi_nm / sum_mn Tr[V_m rho_f V_n^+ rho_i] xi_nm
// with xi_nm = <B_n|xi|B_m>.  Agrees with the direct tripartite trace ratio.
WeakValueResult weak_value_general(const Observable& A, const DensityOp& rho_i,
                                   const DensityOp& rho_f, const DensityOp& xi);

// Werner closed form:
//   (p Tr[rho_f A rho_i] + (1-p)/2 Tr[A rho_i]) / (p Tr[rho_f rho_i] + (1-p)/2).
WeakValueResult weak_value_werner(const Observable& A, const DensityOp& rho_i,
                                  const DensityOp& rho_f, double p);

// weak_value_general at xi = |B_k><B_k| for k = 1..4.  Only k=4 (the singlet)
// reproduces weak_value_mixed; the others come out as the weak value with the
// V_k-rotated postselection V_k rho_f V_k^+.
std::array<WeakValueResult, 4> bell_resource_weak_values(const Observable& A,
                                                         const DensityOp& rho_i,
                                                         const DensityOp& rho_f);

// Re weak_value_pure(|phi><phi|, psi, psi) = |<phi|psi>|^2: transition
// probability read out without collapsing psi.
double transition_probability_weak(const PureState& psi, const PureState& phi);

} // namespace wvlab

#endif
