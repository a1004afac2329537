#include "wvlab/weakvalues.hpp"

#include <cmath>

namespace wvlab {

namespace {

WeakValueResult guarded_ratio(cplx num, cplx den) {
  if (std::abs(den) <= tolerances().overlap)
    throw Error(ErrorKind::OrthogonalPostselection,
                "pre/postselection overlap below the guard; weak value undefined");
  return {num / den, num, den};
}

} // namespace

const CorrectionSet& correction_unitaries() {
  static const CorrectionSet set = [] {
    Mat v1(2, 2), v2(2, 2), v3(2, 2), v4(2, 2);
    v1 << 0, -1, 1, 0;  // sx*sz
    v2 << 0, 1, 1, 0;   // sx
    v3 << -1, 0, 0, 1;  // -sz
    v4 << 1, 0, 0, 1;   // I
    return CorrectionSet{{v1, v2, v3, v4}, {-1.0, 1.0, 1.0, 1.0}};
  }();
  return set;
}

WeakValueResult weak_value_pure(const Observable& A, const PureState& psi_i,
                                const PureState& psi_f) {
  if (psi_i.dim() != A.dim() || psi_f.dim() != A.dim())
    throw Error(ErrorKind::InvalidArgument, "state dimension does not match observable");
  const cplx num = psi_f.amps().dot(A.mat() * psi_i.amps());
  const cplx den = psi_f.amps().dot(psi_i.amps());
  return guarded_ratio(num, den);
}

WeakValueResult weak_value_composite(const Observable& A_full, const PureState& Psi_in,
                                     const PureState& Psi_fin) {
  return weak_value_pure(A_full, Psi_in, Psi_fin);
}

TransitionAmplitude transition_amplitude(const Observable& A, const PureState& psi_i,
                                         const PureState& psi_f, const EntangledResource& r) {
  PureState resource = make_pure_resource(r); // rejects NonMax(0) and mixed kinds

  PureState psi_in = tensor(psi_i, resource);
  PureState psi_fin = [&] {
    if (std::holds_alternative<NonMax>(r)) {
      const auto& nm = std::get<NonMax>(r);
      GeneralizedBellBasis gb(nm.n);
      PureState rotated({2}, pauli_z() * psi_f.amps());
      return tensor(gb.states[1], rotated); // phi_n- (x) sz|psi_f>
    }
    return tensor(BellBasis::standard().states[3], psi_f); // psi- (x) |psi_f>
  }();

  const Mat a_full = embed(A.mat(), {2, 2, 2}, 0);
  return {psi_fin.amps().dot(a_full * psi_in.amps()),
          psi_fin.amps().dot(psi_in.amps())};
}

WeakValueResult weak_value_mixed(const Observable& A, const DensityOp& rho_i,
                                 const DensityOp& rho_f) {
  if (rho_i.dim() != A.dim() || rho_f.dim() != A.dim())
    throw Error(ErrorKind::InvalidArgument, "density operator dimension does not match observable");
  const cplx num = (rho_f.mat() * A.mat() * rho_i.mat()).trace();
  const cplx den = (rho_f.mat() * rho_i.mat()).trace();
  return guarded_ratio(num, den);
}

WeakValueResult weak_value_trace_composite(const Observable& A_full, const DensityOp& chi_in,
                                           const DensityOp& chi_fin) {
  if (chi_in.dim() != A_full.dim() || chi_fin.dim() != A_full.dim())
    throw Error(ErrorKind::InvalidArgument, "composite operator dimensions disagree");
  const cplx num = (chi_fin.mat() * A_full.mat() * chi_in.mat()).trace();
  const cplx den = (chi_fin.mat() * chi_in.mat()).trace();
  return guarded_ratio(num, den);
}

DensityOp make_chi_in(const DensityOp& rho_i) {
  return tensor(rho_i, DensityOp::from_pure(BellBasis::standard().states[3]));
}

DensityOp make_chi_fin(const DensityOp& rho_f) {
  return tensor(DensityOp::from_pure(BellBasis::standard().states[3]), rho_f);
}

WeakValueResult weak_value_general(const Observable& A, const DensityOp& rho_i,
                                   const DensityOp& rho_f, const DensityOp& xi) {
  if (xi.dim() != 4)
    throw Error(ErrorKind::InvalidArgument, "shared resource xi must be a two-qubit state");
  const auto& bell = BellBasis::standard();
  const auto& vs = correction_unitaries().V;

  // xi_nm = <B_n|xi|B_m>
  std::array<std::array<cplx, 4>, 4> xi_nm;
  for (int n = 0; n < 4; ++n)
    for (int m = 0; m < 4; ++m)
      xi_nm[n][m] = bell.states[n].amps().dot(xi.mat() * bell.states[m].amps());

  cplx num = 0.0, den = 0.0;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      const Mat rot = vs[m] * rho_f.mat() * vs[n].adjoint();
      num += (rot * A.mat() * rho_i.mat()).trace() * xi_nm[n][m];
      den += (rot * rho_i.mat()).trace() * xi_nm[n][m];
    }
  return guarded_ratio(num, den);
}

WeakValueResult weak_value_werner(const Observable& A, const DensityOp& rho_i,
                                  const DensityOp& rho_f, double p) {
  if (p < 0.0 || p > 1.0)
    throw Error(ErrorKind::InvalidArgument, "Werner parameter p must lie in [0,1]");
  const cplx t_fai = (rho_f.mat() * A.mat() * rho_i.mat()).trace();
  const cplx t_ai = (A.mat() * rho_i.mat()).trace();
  const cplx t_fi = (rho_f.mat() * rho_i.mat()).trace();
  const cplx num = p * t_fai + 0.5 * (1.0 - p) * t_ai;
  const cplx den = p * t_fi + 0.5 * (1.0 - p);
  return guarded_ratio(num, den);
}

std::array<WeakValueResult, 4> bell_resource_weak_values(const Observable& A,
                                                         const DensityOp& rho_i,
                                                         const DensityOp& rho_f) {
  const auto& bell = BellBasis::standard();
  return {weak_value_general(A, rho_i, rho_f, DensityOp::from_pure(bell.states[0])),
          weak_value_general(A, rho_i, rho_f, DensityOp::from_pure(bell.states[1])),
          weak_value_general(A, rho_i, rho_f, DensityOp::from_pure(bell.states[2])),
          weak_value_general(A, rho_i, rho_f, DensityOp::from_pure(bell.states[3]))};
}

double transition_probability_weak(const PureState& psi, const PureState& phi) {
  Observable proj(Mat(phi.amps() * phi.amps().adjoint()));
  return weak_value_pure(proj, psi, psi).value.real();
}

} // namespace wvlab
