#ifndef WVLAB_RESOURCES_HPP
#define WVLAB_RESOURCES_HPP

#include <array>
#include <variant>

#include "wvlab/qmath.hpp"

namespace wvlab {

// Standard Bell basis, indexed 1..4 as B1=phi+, B2=phi-, B3=psi+, B4=psi-,
// together with the unitaries of the singlet re-expansion
//
//   |a>_1 (x) |psi->_23 = (1/2) sum_i |B_i>_12 (x) U_i |a>_3,
//
// U1 = -sz*sx, U2 = sx, U3 = -sz, U4 = -I.  The signs are part of the frozen
// phase convention; changing any of them breaks the -1/2 transition amplitude.
struct BellBasis {
  std::array<PureState, 4> states;
  std::array<Mat, 4> unitaries;

  static const BellBasis& standard();
};

// Generalized Bell basis for the non-maximal resource |phi_n+> = N(|00>+n|11>),
// N = 1/sqrt(1+|n|^2).  Orthonormal for every complex n; reduces to the
// standard basis at n=1.
struct GeneralizedBellBasis {
  cplx n;
  double norm_factor; // N
  std::array<PureState, 4> states;

  explicit GeneralizedBellBasis(cplx n);
};

struct Singlet {};
struct NonMax { cplx n; };
struct Werner { double p; };
struct CustomResource { DensityOp xi; };

using EntangledResource = std::variant<Singlet, NonMax, Werner, CustomResource>;

bool resource_is_pure(const EntangledResource& r);

// Pure kinds only (Singlet, NonMax); anything else is an error.
PureState make_pure_resource(const EntangledResource& r);

// Any kind, as a two-qubit density operator.
DensityOp make_resource(const EntangledResource& r);

// One term of a product-state re-expansion in a Bell-type basis.  branch3 is
// unnormalized for NonMax (the flag on the PureState says so).
struct DecompBranch {
  PureState basis12;
  PureState branch3;
};

struct ResourceDecomposition {
  double weight; // 1/2 for the singlet, N^2 for NonMax
  std::array<DecompBranch, 4> branches;

  // weight * sum_i basis12_i (x) branch3_i, for the reconstruction check.
  PureState reconstruct() const;
};

// Re-expands |a>_1 (x) resource_23 over the matching Bell-type basis on
// particles 1-2.  The resource must be pure.
ResourceDecomposition resource_decomposition(const PureState& a, const EntangledResource& r);

} // namespace wvlab

#endif
