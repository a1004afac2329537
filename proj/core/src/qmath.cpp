#include "wvlab/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wvlab {

Tolerances& tolerances() {
  static Tolerances tol;
  return tol;
}

namespace {

int product(const std::vector<int>& dims) {
  int p = 1;
  for (int d : dims) {
    if (d <= 0) throw Error(ErrorKind::InvalidArgument, "subsystem dimension must be positive");
    p *= d;
  }
  return p;
}

} // namespace

PureState::PureState(std::vector<int> dims, Vec amps, bool normalized)
    : dims_(std::move(dims)), amps_(std::move(amps)), normalized_(normalized) {
  if (product(dims_) != amps_.size())
    throw Error(ErrorKind::InvalidArgument, "amplitude length does not match subsystem dimensions");
  if (normalized_ && std::abs(amps_.norm() - 1.0) > tolerances().normalization)
    throw Error(ErrorKind::InvalidArgument, "state is not normalized");
}

PureState PureState::qubit(cplx a0, cplx a1) {
  Vec v(2);
  v << a0, a1;
  return PureState({2}, std::move(v));
}

PureState PureState::basis(std::vector<int> dims, int index) {
  Vec v = Vec::Zero(product(dims));
  if (index < 0 || index >= v.size())
    throw Error(ErrorKind::InvalidArgument, "basis index out of range");
  v(index) = 1.0;
  return PureState(std::move(dims), std::move(v));
}

DensityOp::DensityOp(std::vector<int> dims, Mat mat)
    : dims_(std::move(dims)), mat_(std::move(mat)) {
  const auto& tol = tolerances();
  if (mat_.rows() != mat_.cols() || product(dims_) != mat_.rows())
    throw Error(ErrorKind::InvalidArgument, "density matrix shape does not match dimensions");
  if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > tol.normalization * 10)
    throw Error(ErrorKind::InvalidArgument, "density matrix is not Hermitian");
  if (std::abs(mat_.trace().real() - 1.0) > tol.normalization ||
      std::abs(mat_.trace().imag()) > tol.normalization)
    throw Error(ErrorKind::InvalidArgument, "density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(mat_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw Error(ErrorKind::InvalidArgument, "density matrix has a negative eigenvalue");
}

DensityOp DensityOp::from_pure(const PureState& psi) {
  if (!psi.normalized())
    throw Error(ErrorKind::InvalidArgument, "cannot form a density operator from an unnormalized state");
  return DensityOp(psi.dims(), psi.amps() * psi.amps().adjoint());
}

Observable::Observable(Mat hermitian) : mat_(std::move(hermitian)) {
  const auto& tol = tolerances();
  if (mat_.rows() != mat_.cols())
    throw Error(ErrorKind::InvalidArgument, "observable must be square");
  if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > tol.algebraic)
    throw Error(ErrorKind::InvalidArgument, "observable is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Mat> es(mat_);
  const auto& vals = es.eigenvalues();   // ascending
  const auto& vecs = es.eigenvectors();

  // Cluster near-degenerate eigenvalues into a single eigenspace projector.
  int i = 0;
  const int n = static_cast<int>(vals.size());
  while (i < n) {
    int j = i + 1;
    while (j < n && vals(j) - vals(j - 1) <= tol.cluster) ++j;
    Mat proj = Mat::Zero(n, n);
    double mean = 0.0;
    for (int k = i; k < j; ++k) {
      proj += vecs.col(k) * vecs.col(k).adjoint();
      mean += vals(k);
    }
    spectrum_.push_back({mean / (j - i), std::move(proj)});
    i = j;
  }
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vec kron(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

PureState tensor(const PureState& a, const PureState& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return PureState(std::move(dims), kron(a.amps(), b.amps()), a.normalized() && b.normalized());
}

DensityOp tensor(const DensityOp& a, const DensityOp& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return DensityOp(std::move(dims), kron(a.mat(), b.mat()));
}

Mat embed(const Mat& op, const std::vector<int>& dims, int target) {
  if (target < 0 || target >= static_cast<int>(dims.size()))
    throw Error(ErrorKind::InvalidArgument, "embed: subsystem index out of range");
  if (op.rows() != dims[target])
    throw Error(ErrorKind::InvalidArgument, "embed: operator does not match subsystem dimension");
  Mat out = Mat::Identity(1, 1);
  for (int s = 0; s < static_cast<int>(dims.size()); ++s)
    out = kron(out, s == target ? op : Mat(Mat::Identity(dims[s], dims[s])));
  return out;
}

DensityOp partial_trace(const DensityOp& rho, const std::vector<int>& keep) {
  const auto& dims = rho.dims();
  const int ns = static_cast<int>(dims.size());
  if (keep.empty())
    throw Error(ErrorKind::InvalidArgument, "partial_trace: keep set must not be empty");
  std::vector<bool> kept(ns, false);
  for (int k : keep) {
    if (k < 0 || k >= ns)
      throw Error(ErrorKind::InvalidArgument, "partial_trace: subsystem index out of range");
    if (kept[k]) throw Error(ErrorKind::InvalidArgument, "partial_trace: duplicate subsystem index");
    kept[k] = true;
  }

  std::vector<int> keep_dims, trace_dims;
  std::vector<int> keep_idx, trace_idx;
  for (int s = 0; s < ns; ++s) {
    if (kept[s]) { keep_dims.push_back(dims[s]); keep_idx.push_back(s); }
    else { trace_dims.push_back(dims[s]); trace_idx.push_back(s); }
  }

  const int dk = std::accumulate(keep_dims.begin(), keep_dims.end(), 1, std::multiplies<>());
  const int dt = std::accumulate(trace_dims.begin(), trace_dims.end(), 1, std::multiplies<>());

  // Strides of each subsystem in the row-major composite index.
  std::vector<int> stride(ns, 1);
  for (int s = ns - 2; s >= 0; --s) stride[s] = stride[s + 1] * dims[s + 1];

  auto compose = [&](int kpart, int tpart) {
    int idx = 0, rk = kpart, rt = tpart;
    for (int s = static_cast<int>(keep_idx.size()) - 1; s >= 0; --s) {
      idx += (rk % keep_dims[s]) * stride[keep_idx[s]];
      rk /= keep_dims[s];
    }
    for (int s = static_cast<int>(trace_idx.size()) - 1; s >= 0; --s) {
      idx += (rt % trace_dims[s]) * stride[trace_idx[s]];
      rt /= trace_dims[s];
    }
    return idx;
  };

  Mat out = Mat::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      cplx sum = 0.0;
      for (int t = 0; t < dt; ++t) sum += rho.mat()(compose(i, t), compose(j, t));
      out(i, j) = sum;
    }
  return DensityOp(std::move(keep_dims), std::move(out));
}

Observable spectral(const Mat& hermitian) { return Observable(hermitian); }

Mat identity(int d) { return Mat::Identity(d, d); }

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_y() {
  Mat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

PureState ket0() { return PureState::qubit(1, 0); }
PureState ket1() { return PureState::qubit(0, 1); }
PureState ket_plus() { return PureState::qubit(1 / std::sqrt(2.0), 1 / std::sqrt(2.0)); }
PureState ket_minus() { return PureState::qubit(1 / std::sqrt(2.0), -1 / std::sqrt(2.0)); }

} // namespace wvlab
