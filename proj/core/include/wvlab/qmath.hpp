#ifndef WVLAB_QMATH_HPP
#define WVLAB_QMATH_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "wvlab/errors.hpp"

namespace wvlab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Single knob for every numerical guard in the library.  hbar = 1 throughout;
// the coupling exp(-i g A (x) P) carries no extra unit factor.
struct Tolerances {
  double algebraic = 1e-10;     // operator identities, spectral reconstruction
  double normalization = 1e-12; // state norms, trace-one, orthonormality
  double overlap = 1e-9;        // weak-value denominator guard
  double cluster = 1e-9;        // eigenvalue clustering for degenerate spectra
};

Tolerances& tolerances();

// Pure state over a tensor-factored Hilbert space.  Subsystem 0 is the
// leftmost (most significant) Kronecker factor.  Unnormalized states are
// legal only as intermediate decomposition results and carry the flag.
class PureState {
public:
  PureState(std::vector<int> dims, Vec amps, bool normalized = true);

  static PureState qubit(cplx a0, cplx a1);
  static PureState basis(std::vector<int> dims, int index);

  const std::vector<int>& dims() const { return dims_; }
  const Vec& amps() const { return amps_; }
  bool normalized() const { return normalized_; }
  int dim() const { return static_cast<int>(amps_.size()); }

private:
  std::vector<int> dims_;
  Vec amps_;
  bool normalized_;
};

// Density operator: Hermitian, unit trace, positive within tolerance.
class DensityOp {
public:
  DensityOp(std::vector<int> dims, Mat mat);

  static DensityOp from_pure(const PureState& psi);

  const std::vector<int>& dims() const { return dims_; }
  const Mat& mat() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

private:
  std::vector<int> dims_;
  Mat mat_;
};

struct EigenSpace {
  double value;  // eigenvalue
  Mat projector; // projector onto the eigenspace (rank >= 1 when degenerate)
};

// Hermitian observable with cached spectral decomposition, eigenvalues
// ascending, degenerate eigenvalues merged into one eigenspace projector.
class Observable {
public:
  explicit Observable(Mat hermitian);

  const Mat& mat() const { return mat_; }
  const std::vector<EigenSpace>& spectrum() const { return spectrum_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

private:
  Mat mat_;
  std::vector<EigenSpace> spectrum_;
};

// --- composition ---

Mat kron(const Mat& a, const Mat& b);
Vec kron(const Vec& a, const Vec& b);
PureState tensor(const PureState& a, const PureState& b);
DensityOp tensor(const DensityOp& a, const DensityOp& b);

// Places op (acting on subsystem `target` of `dims`) into the full space.
Mat embed(const Mat& op, const std::vector<int>& dims, int target);

// Reduced density operator on the kept subsystems (0-based, ascending).
DensityOp partial_trace(const DensityOp& rho, const std::vector<int>& keep);

Observable spectral(const Mat& hermitian);

// <a|b>; Eigen's dot conjugates the left argument.
inline cplx inner(const PureState& a, const PureState& b) {
  return a.amps().dot(b.amps());
}

// --- stock vectors and matrices ---

Mat identity(int d);
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
PureState ket0();
PureState ket1();
PureState ket_plus();
PureState ket_minus();

} // namespace wvlab

#endif
