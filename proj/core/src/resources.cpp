#include "wvlab/resources.hpp"

#include <cmath>

namespace wvlab {

namespace {

PureState two_qubit(cplx a00, cplx a01, cplx a10, cplx a11, bool normalized = true) {
  Vec v(4);
  v << a00, a01, a10, a11;
  return PureState({2, 2}, std::move(v), normalized);
}

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

} // namespace

const BellBasis& BellBasis::standard() {
  static const BellBasis basis = [] {
    Mat u1(2, 2), u2(2, 2), u3(2, 2), u4(2, 2);
    u1 << 0, -1, 1, 0;  // -sz*sx
    u2 << 0, 1, 1, 0;   // sx
    u3 << -1, 0, 0, 1;  // -sz
    u4 << -1, 0, 0, -1; // -I
    return BellBasis{
        {two_qubit(kInvSqrt2, 0, 0, kInvSqrt2),   // phi+
         two_qubit(kInvSqrt2, 0, 0, -kInvSqrt2),  // phi-
         two_qubit(0, kInvSqrt2, kInvSqrt2, 0),   // psi+
         two_qubit(0, kInvSqrt2, -kInvSqrt2, 0)}, // psi-
        {u1, u2, u3, u4}};
  }();
  return basis;
}

GeneralizedBellBasis::GeneralizedBellBasis(cplx n_)
    : n(n_),
      norm_factor(1.0 / std::sqrt(1.0 + std::norm(n_))),
      states{two_qubit(norm_factor, 0, 0, norm_factor * n),             // phi_n+
             two_qubit(norm_factor * std::conj(n), 0, 0, -norm_factor), // phi_n-
             two_qubit(0, norm_factor, norm_factor * std::conj(n), 0),  // psi_n+
             two_qubit(0, norm_factor * n, -norm_factor, 0)} {}         // psi_n-

bool resource_is_pure(const EntangledResource& r) {
  if (std::holds_alternative<Singlet>(r) || std::holds_alternative<NonMax>(r)) return true;
  if (const auto* w = std::get_if<Werner>(&r)) return w->p == 1.0;
  return false;
}

PureState make_pure_resource(const EntangledResource& r) {
  if (std::holds_alternative<Singlet>(r)) return BellBasis::standard().states[3];
  if (const auto* nm = std::get_if<NonMax>(&r)) {
    if (nm->n == cplx(0.0))
      throw Error(ErrorKind::DegenerateResource,
                  "NonMax(0) is a product state; the protocol amplitude n*N^2 vanishes");
    return GeneralizedBellBasis(nm->n).states[0];
  }
  if (const auto* w = std::get_if<Werner>(&r); w && w->p == 1.0)
    return BellBasis::standard().states[3];
  throw Error(ErrorKind::InvalidArgument, "resource is not pure");
}

DensityOp make_resource(const EntangledResource& r) {
  if (const auto* w = std::get_if<Werner>(&r)) {
    if (w->p < 0.0 || w->p > 1.0)
      throw Error(ErrorKind::InvalidArgument, "Werner parameter p must lie in [0,1]");
    const PureState& singlet = BellBasis::standard().states[3];
    Mat m = w->p * (singlet.amps() * singlet.amps().adjoint()) +
            (1.0 - w->p) / 4.0 * Mat::Identity(4, 4);
    return DensityOp({2, 2}, std::move(m));
  }
  if (const auto* c = std::get_if<CustomResource>(&r)) return c->xi;
  return DensityOp::from_pure(make_pure_resource(r));
}

PureState ResourceDecomposition::reconstruct() const {
  Vec sum = Vec::Zero(8);
  for (const auto& br : branches)
    sum += kron(br.basis12.amps(), br.branch3.amps());
  return PureState({2, 2, 2}, weight * sum, false);
}

ResourceDecomposition resource_decomposition(const PureState& a, const EntangledResource& r) {
  if (a.dim() != 2)
    throw Error(ErrorKind::InvalidArgument, "resource_decomposition expects a qubit state");

  if (std::holds_alternative<Singlet>(r)) {
    const auto& bell = BellBasis::standard();
    std::array<DecompBranch, 4> branches = {
        DecompBranch{bell.states[0], PureState({2}, bell.unitaries[0] * a.amps(), a.normalized())},
        DecompBranch{bell.states[1], PureState({2}, bell.unitaries[1] * a.amps(), a.normalized())},
        DecompBranch{bell.states[2], PureState({2}, bell.unitaries[2] * a.amps(), a.normalized())},
        DecompBranch{bell.states[3], PureState({2}, bell.unitaries[3] * a.amps(), a.normalized())}};
    return ResourceDecomposition{0.5, std::move(branches)};
  }

  if (const auto* nm = std::get_if<NonMax>(&r)) {
    const cplx n = nm->n;
    if (n == cplx(0.0))
      throw Error(ErrorKind::DegenerateResource,
                  "NonMax(0) is a product state; the protocol amplitude n*N^2 vanishes");
    GeneralizedBellBasis gb(n);
    const cplx c = a.amps()(0), d = a.amps()(1);
    const double n2 = std::norm(n);
    // Branch kets as printed, unnormalized on purpose: renormalizing breaks
    // the reconstruction identity.
    auto branch = [](cplx b0, cplx b1) {
      Vec v(2);
      v << b0, b1;
      return PureState({2}, std::move(v), false);
    };
    std::array<DecompBranch, 4> branches = {
        DecompBranch{gb.states[0], branch(c, d * n2)},
        DecompBranch{gb.states[1], branch(n * c, -n * d)},
        DecompBranch{gb.states[2], branch(n * d, n * c)},
        DecompBranch{gb.states[3], branch(-d, c * n2)}};
    return ResourceDecomposition{gb.norm_factor * gb.norm_factor, std::move(branches)};
  }

  throw Error(ErrorKind::InvalidArgument, "resource_decomposition requires a pure resource");
}

} // namespace wvlab
