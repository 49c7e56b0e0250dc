#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "qnet/common.hpp"

namespace qnet {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Ordered list of local dimensions of a tensor-product space.
/// Subsystem 0 is the most significant index factor (row-major layout),
/// so for qubits the flat index reads as the bit string q0 q1 ... qn-1.
struct SubsystemShape {
  std::vector<int> local_dims;

  SubsystemShape() = default;
  explicit SubsystemShape(std::vector<int> dims) : local_dims(std::move(dims)) {
    if (local_dims.empty()) throw argument_error("SubsystemShape: empty dimension list");
    for (int d : local_dims)
      if (d < 1) throw argument_error("SubsystemShape: local dimension must be >= 1");
  }

  static SubsystemShape qubits(int n) {
    if (n < 1) throw argument_error("SubsystemShape::qubits: need n >= 1");
    return SubsystemShape(std::vector<int>(static_cast<std::size_t>(n), 2));
  }
  static SubsystemShape single(int dim) { return SubsystemShape({dim}); }

  int count() const { return static_cast<int>(local_dims.size()); }
  int total_dim() const {
    long long p = 1;
    for (int d : local_dims) p *= d;
    return static_cast<int>(p);
  }
  int dim(int i) const { return local_dims.at(static_cast<std::size_t>(i)); }

  bool operator==(const SubsystemShape& o) const { return local_dims == o.local_dims; }

  /// Stride of subsystem i in the flat index.
  long long stride(int i) const {
    long long s = 1;
    for (int k = count() - 1; k > i; --k) s *= local_dims[static_cast<std::size_t>(k)];
    return s;
  }
};

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline double hermiticity_error(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double frobenius_distance(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  if (!all_finite(out)) throw internal_error("kron: non-finite result");
  return out;
}

/// Normalized state vector with a subsystem shape.
class PureState {
public:
  PureState(CVector amps, SubsystemShape shape) : amps_(std::move(amps)), shape_(std::move(shape)) {
    if (shape_.total_dim() != static_cast<int>(amps_.size()))
      throw argument_error("PureState: amplitude count does not match shape");
    if (!all_finite(amps_)) throw argument_error("PureState: non-finite amplitude");
    double n2 = amps_.squaredNorm();
    if (std::abs(n2 - 1.0) > 1e-12)
      throw argument_error("PureState: squared norm deviates from 1 by " + std::to_string(n2 - 1.0));
  }

  static PureState basis(const SubsystemShape& shape, int index) {
    CVector v = CVector::Zero(shape.total_dim());
    v(index) = 1.0;
    return PureState(std::move(v), shape);
  }

  const CVector& amplitudes() const { return amps_; }
  const SubsystemShape& shape() const { return shape_; }
  int dim() const { return static_cast<int>(amps_.size()); }

  /// Same amplitudes viewed under a compatible shape (merge/split of factors).
  PureState reshaped(SubsystemShape s) const {
    if (s.total_dim() != dim()) throw argument_error("PureState::reshaped: dimension mismatch");
    return PureState(amps_, std::move(s));
  }

private:
  static bool all_finite(const CVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) return false;
    return true;
  }

  CVector amps_;
  SubsystemShape shape_;
};

/// Hermitian, unit-trace, positive-semidefinite matrix with a subsystem shape.
/// Construction always checks Hermiticity, trace and finiteness; the
/// eigenvalue floor is checked by validate_positive(), which builders call at
/// public boundaries (it costs an eigensolve, so hot paths skip it).
class DensityMatrix {
public:
  DensityMatrix(CMatrix m, SubsystemShape shape) : m_(std::move(m)), shape_(std::move(shape)) {
    if (m_.rows() != m_.cols()) throw argument_error("DensityMatrix: matrix not square");
    if (shape_.total_dim() != static_cast<int>(m_.rows()))
      throw argument_error("DensityMatrix: shape does not match matrix dimension");
    if (!all_finite(m_)) throw argument_error("DensityMatrix: non-finite entry");
    if (hermiticity_error(m_) > 1e-10)
      throw argument_error("DensityMatrix: not Hermitian within 1e-10");
    if (std::abs(m_.trace().real() - 1.0) > 1e-10 || std::abs(m_.trace().imag()) > 1e-10)
      throw argument_error("DensityMatrix: trace deviates from 1");
  }

  static DensityMatrix from_pure(const PureState& psi) {
    CMatrix m = psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityMatrix(std::move(m), psi.shape());
  }

  const CMatrix& matrix() const { return m_; }
  const SubsystemShape& shape() const { return shape_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  DensityMatrix reshaped(SubsystemShape s) const {
    if (s.total_dim() != dim()) throw argument_error("DensityMatrix::reshaped: dimension mismatch");
    return DensityMatrix(m_, std::move(s));
  }

  /// Throws unless the minimum eigenvalue is >= -1e-9.
  void validate_positive() const;

private:
  CMatrix m_;
  SubsystemShape shape_;
};

namespace detail {

inline void check_subsystem_indices(const SubsystemShape& shape, const std::vector<int>& idx,
                                    const char* who) {
  std::vector<bool> seen(static_cast<std::size_t>(shape.count()), false);
  for (int i : idx) {
    if (i < 0 || i >= shape.count()) throw argument_error(std::string(who) + ": subsystem index out of range");
    if (seen[static_cast<std::size_t>(i)]) throw argument_error(std::string(who) + ": repeated subsystem index");
    seen[static_cast<std::size_t>(i)] = true;
  }
}

// Enumerates flat index offsets of all multi-indices over the given subsystems.
inline std::vector<long long> subsystem_offsets(const SubsystemShape& shape, const std::vector<int>& subs) {
  std::vector<long long> offsets{0};
  for (int s : subs) {
    long long stride = shape.stride(s);
    int d = shape.dim(s);
    std::vector<long long> next;
    next.reserve(offsets.size() * static_cast<std::size_t>(d));
    for (long long base : offsets)
      for (int v = 0; v < d; ++v) next.push_back(base + v * stride);
    offsets = std::move(next);
  }
  return offsets;
}

}  // namespace detail

/// Trace out every subsystem not listed in `keep`; kept subsystems stay in
/// their original relative order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep) {
  const SubsystemShape& shape = rho.shape();
  detail::check_subsystem_indices(shape, keep, "partial_trace");
  std::sort(keep.begin(), keep.end());

  std::vector<int> traced;
  for (int i = 0; i < shape.count(); ++i)
    if (!std::binary_search(keep.begin(), keep.end(), i)) traced.push_back(i);

  std::vector<int> kept_dims;
  for (int k : keep) kept_dims.push_back(shape.dim(k));
  if (keep.empty()) throw argument_error("partial_trace: must keep at least one subsystem");

  auto keep_off = detail::subsystem_offsets(shape, keep);
  auto tr_off = detail::subsystem_offsets(shape, traced);

  const CMatrix& m = rho.matrix();
  const auto dk = static_cast<Eigen::Index>(keep_off.size());
  CMatrix out = CMatrix::Zero(dk, dk);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j) {
      Complex s = 0.0;
      for (long long t : tr_off) s += m(keep_off[static_cast<std::size_t>(i)] + t,
                                        keep_off[static_cast<std::size_t>(j)] + t);
      out(i, j) = s;
    }
  // enforce exact Hermitian symmetry against accumulated rounding
  out = 0.5 * (out + out.adjoint().eval());
  return DensityMatrix(std::move(out), SubsystemShape(kept_dims));
}

/// Transpose the listed subsystems only. The result is Hermitian but in
/// general not positive, so it is returned as a plain matrix.
inline CMatrix partial_transpose(const DensityMatrix& rho, const std::vector<int>& flip) {
  const SubsystemShape& shape = rho.shape();
  detail::check_subsystem_indices(shape, flip, "partial_transpose");

  auto flip_off = detail::subsystem_offsets(shape, flip);
  std::vector<int> rest;
  for (int i = 0; i < shape.count(); ++i)
    if (std::find(flip.begin(), flip.end(), i) == flip.end()) rest.push_back(i);
  auto rest_off = detail::subsystem_offsets(shape, rest);

  const CMatrix& m = rho.matrix();
  CMatrix out(m.rows(), m.cols());
  for (long long ra : rest_off)
    for (long long rb : rest_off)
      for (long long fa : flip_off)
        for (long long fb : flip_off) out(ra + fa, rb + fb) = m(ra + fb, rb + fa);
  return out;
}

/// Reorder subsystems: new position i holds old subsystem order[i].
inline PureState permute_subsystems(const PureState& psi, const std::vector<int>& order) {
  const SubsystemShape& shape = psi.shape();
  if (static_cast<int>(order.size()) != shape.count())
    throw argument_error("permute_subsystems: order must list every subsystem");
  detail::check_subsystem_indices(shape, order, "permute_subsystems");

  std::vector<int> new_dims;
  for (int o : order) new_dims.push_back(shape.dim(o));
  SubsystemShape out_shape{new_dims};

  const int n = shape.count();
  CVector out(psi.dim());
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  for (int flat = 0; flat < psi.dim(); ++flat) {
    // digits of the *new* index, most significant first
    int rem = flat;
    for (int i = 0; i < n; ++i) {
      long long st = out_shape.stride(i);
      digits[static_cast<std::size_t>(i)] = static_cast<int>(rem / st);
      rem = static_cast<int>(rem % st);
    }
    long long src = 0;
    for (int i = 0; i < n; ++i) src += digits[static_cast<std::size_t>(i)] * shape.stride(order[static_cast<std::size_t>(i)]);
    out(flat) = psi.amplitudes()(src);
  }
  return PureState(std::move(out), out_shape);
}

inline DensityMatrix permute_subsystems(const DensityMatrix& rho, const std::vector<int>& order) {
  const SubsystemShape& shape = rho.shape();
  if (static_cast<int>(order.size()) != shape.count())
    throw argument_error("permute_subsystems: order must list every subsystem");
  detail::check_subsystem_indices(shape, order, "permute_subsystems");

  std::vector<int> new_dims;
  for (int o : order) new_dims.push_back(shape.dim(o));
  SubsystemShape out_shape{new_dims};

  const int n = shape.count();
  const int D = rho.dim();
  std::vector<long long> src_of(static_cast<std::size_t>(D));
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  for (int flat = 0; flat < D; ++flat) {
    int rem = flat;
    for (int i = 0; i < n; ++i) {
      long long st = out_shape.stride(i);
      digits[static_cast<std::size_t>(i)] = static_cast<int>(rem / st);
      rem = static_cast<int>(rem % st);
    }
    long long src = 0;
    for (int i = 0; i < n; ++i) src += digits[static_cast<std::size_t>(i)] * shape.stride(order[static_cast<std::size_t>(i)]);
    src_of[static_cast<std::size_t>(flat)] = src;
  }
  const CMatrix& m = rho.matrix();
  CMatrix out(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) out(i, j) = m(src_of[static_cast<std::size_t>(i)], src_of[static_cast<std::size_t>(j)]);
  return DensityMatrix(std::move(out), out_shape);
}

struct EigResult {
  RVector eigenvalues;  // ascending
  CMatrix eigenvectors; // columns match eigenvalues; empty if not requested
};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Contract: || h - V diag(w) V^dag ||_F <= 1e-9 * dim.
inline EigResult eig_hermitian(const CMatrix& h, bool with_vectors = true) {
  if (h.rows() != h.cols()) throw argument_error("eig_hermitian: matrix not square");
  if (hermiticity_error(h) > 1e-8) throw argument_error("eig_hermitian: input not Hermitian within 1e-8");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver;
  solver.compute(0.5 * (h + h.adjoint().eval()),
                 with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw internal_error("eig_hermitian: solver failed");
  EigResult r;
  r.eigenvalues = solver.eigenvalues();
  if (with_vectors) r.eigenvectors = solver.eigenvectors();
  return r;
}

inline RVector eigvals_hermitian(const CMatrix& h) { return eig_hermitian(h, false).eigenvalues; }

inline void DensityMatrix::validate_positive() const {
  RVector w = eigvals_hermitian(m_);
  if (w(0) < -1e-9)
    throw argument_error("DensityMatrix: minimum eigenvalue " + std::to_string(w(0)) + " below -1e-9");
}

/// Von Neumann entropy in bits, with 0 log 0 = 0.
inline double entropy(const CMatrix& hermitian_psd) {
  RVector w = eigvals_hermitian(hermitian_psd);
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > 1e-14) s -= w(i) * std::log2(w(i));
  return std::max(s, 0.0);
}

inline double entropy(const DensityMatrix& rho) { return entropy(rho.matrix()); }

inline double fidelity_pure(const PureState& psi, const DensityMatrix& rho) {
  if (psi.dim() != rho.dim()) throw argument_error("fidelity_pure: dimension mismatch");
  double f = std::real(psi.amplitudes().dot(rho.matrix() * psi.amplitudes()));
  if (f < -1e-10 || f > 1.0 + 1e-10) throw internal_error("fidelity_pure: value outside [0,1]");
  return std::clamp(f, 0.0, 1.0);
}

/// Purification on system (x) ancilla, ancilla dimension = numerical rank
/// (eigenvalues above 1e-10). Tracing the ancilla recovers rho.
inline PureState purify(const DensityMatrix& rho) {
  EigResult e = eig_hermitian(rho.matrix());
  std::vector<int> kept;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
    if (e.eigenvalues(i) > 1e-10) kept.push_back(static_cast<int>(i));
  if (kept.empty()) throw internal_error("purify: matrix has no positive spectrum");
  const int rank = static_cast<int>(kept.size());
  const int D = rho.dim();

  CVector amps = CVector::Zero(static_cast<Eigen::Index>(D) * rank);
  double norm2 = 0.0;
  for (int k = 0; k < rank; ++k) {
    double lam = e.eigenvalues(kept[static_cast<std::size_t>(k)]);
    norm2 += lam;
    double sq = std::sqrt(lam);
    for (int i = 0; i < D; ++i) amps(static_cast<Eigen::Index>(i) * rank + k) = sq * e.eigenvectors(i, kept[static_cast<std::size_t>(k)]);
  }
  amps /= std::sqrt(norm2);  // absorb truncated weight so the state stays normalized

  std::vector<int> dims = rho.shape().local_dims;
  dims.push_back(rank);
  return PureState(std::move(amps), SubsystemShape(dims));
}

/// Deterministic random source. Uniform doubles are produced from raw
/// mt19937_64 output so streams are identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 1e-300);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Complex complex_normal() { return {normal(), normal()}; }

  CVector random_state(int dim) {
    CVector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = complex_normal();
    v /= v.norm();
    return v;
  }

  /// Haar-ish random unitary via QR of a Gaussian matrix.
  CMatrix random_unitary(int dim) {
    CMatrix g(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) g(i, j) = complex_normal();
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
      Complex d = r(i, i);
      double a = std::abs(d);
      q.col(i) *= (a > 0) ? d / a : Complex(1.0, 0.0);
    }
    return q;
  }

private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qnet
