#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qnet/linalg.hpp"

namespace qnet {

/// Which cross terms the 1->3 transformation carries. DoubleFlip keeps only
/// index pairs with both j,k different from the input index (the literal
/// reading of the displayed sum); FullSymmetric also includes the pairs where
/// one of j,k equals the input index, which is the variant whose machine can
/// reach the optimal input-independent cloner. For qubit input the double-flip
/// sector alone has no input-independent point, so M=2 defaults to
/// FullSymmetric; larger M defaults to DoubleFlip.
enum class Eq3Sector { DoubleFlip, FullSymmetric };

inline Eq3Sector default_sector(int input_dim) {
  return input_dim == 2 ? Eq3Sector::FullSymmetric : Eq3Sector::DoubleFlip;
}

/// Machine register dimension. The 1->2 machine reuses one ket per basis
/// index (the cross ket for (i,j) is the direct ket of j), the 1->3 machine
/// is labeled by ordered index pairs.
inline int machine_dim(int input_dim, int copies) {
  if (input_dim < 2) throw argument_error("machine_dim: input dimension must be >= 2");
  if (copies == 2) return input_dim;
  if (copies == 3) return input_dim * input_dim;
  throw argument_error("machine_dim: copies must be 2 or 3");
}

/// Sum of squared clone-part norms per unit d^2; fixes c through
/// c^2 + weight * d^2 = 1.
inline double normalization_weight(int input_dim, int copies, Eq3Sector sector) {
  const double M = input_dim;
  if (input_dim < 2) throw argument_error("normalization_weight: input dimension must be >= 2");
  if (copies == 2) return 2.0 * (M - 1.0);
  if (copies == 3) {
    double w = 6.0 * (M - 1.0) * (M - 2.0) + 12.0 * (M - 1.0);
    if (sector == Eq3Sector::FullSymmetric) w += 24.0 * (M - 1.0);
    return w;
  }
  throw argument_error("normalization_weight: copies must be 2 or 3");
}

inline double d_max(int input_dim, int copies, Eq3Sector sector) {
  return 1.0 / std::sqrt(normalization_weight(input_dim, copies, sector));
}
inline double d_max(int input_dim, int copies) {
  return d_max(input_dim, copies, default_sector(input_dim));
}

inline double normalization(int input_dim, int copies, double d, Eq3Sector sector) {
  if (d < 0.0) throw domain_error("normalization: d must be >= 0");
  double w = normalization_weight(input_dim, copies, sector);
  double c2 = 1.0 - w * d * d;
  if (c2 < -1e-12)
    throw domain_error("normalization: d=" + std::to_string(d) + " exceeds d_max=" +
                       std::to_string(1.0 / std::sqrt(w)));
  return std::sqrt(std::max(c2, 0.0));
}
inline double normalization(int input_dim, int copies, double d) {
  return normalization(input_dim, copies, d, default_sector(input_dim));
}

struct MachineSpec {
  int input_dim = 2;   // M
  int copies = 2;      // 2 or 3
  double d = 0.0;
  double c = 1.0;      // derived from d by the normalization condition
  Eq3Sector sector = Eq3Sector::FullSymmetric;

  static MachineSpec make(int input_dim, int copies, double d) {
    return make(input_dim, copies, d, default_sector(input_dim));
  }
  static MachineSpec make(int input_dim, int copies, double d, Eq3Sector sector) {
    MachineSpec s;
    s.input_dim = input_dim;
    s.copies = copies;
    s.d = d;
    s.sector = sector;
    s.c = normalization(input_dim, copies, d, sector);
    return s;
  }
};

struct CloneIsometry {
  CMatrix matrix;               // (M^copies * K) x M
  int input_dim = 0;
  int copies = 0;
  int machine_dimension = 0;    // K
  SubsystemShape slot_shape;    // clone slots only, [M] x copies
  std::vector<std::string> machine_labels;  // per machine basis index
};

namespace detail {

inline long long clone_flat_index(const std::vector<int>& tuple, int M) {
  long long idx = 0;
  for (int t : tuple) idx = idx * M + t;
  return idx;
}

}  // namespace detail

/// Builds the cloning isometry for the given machine. Each input basis index
/// maps to the direct-copy branch plus the d-weighted symmetrized cross
/// branches; the construction is verified against the Gram condition
/// V^dag V = I before returning.
inline CloneIsometry build_isometry(const MachineSpec& spec) {
  const int M = spec.input_dim;
  const int n = spec.copies;
  if (M < 2) throw argument_error("build_isometry: input dimension must be >= 2");
  if (n != 2 && n != 3) throw argument_error("build_isometry: copies must be 2 or 3");
  const int K = machine_dim(M, n);
  long long clone_dim = 1;
  for (int i = 0; i < n; ++i) clone_dim *= M;

  CMatrix v = CMatrix::Zero(clone_dim * K, M);
  const double c = spec.c;
  const double d = spec.d;

  if (n == 2) {
    for (int i = 0; i < M; ++i) {
      v(detail::clone_flat_index({i, i}, M) * K + i, i) += c;
      for (int j = 0; j < M; ++j) {
        if (j == i) continue;
        v(detail::clone_flat_index({i, j}, M) * K + j, i) += d;
        v(detail::clone_flat_index({j, i}, M) * K + j, i) += d;
      }
    }
  } else {
    for (int i = 0; i < M; ++i) {
      v(detail::clone_flat_index({i, i, i}, M) * K + (i * M + i), i) += c;
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
          if (j == i && k == i) continue;
          if (spec.sector == Eq3Sector::DoubleFlip && (j == i || k == i)) continue;
          const int m = j * M + k;
          const int perms[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
          for (const auto& p : perms)
            v(detail::clone_flat_index({p[0], p[1], p[2]}, M) * K + m, i) += d;
        }
    }
  }

  CMatrix gram = v.adjoint() * v;
  double err = (gram - CMatrix::Identity(M, M)).norm();
  if (err > 1e-10)
    throw internal_error("build_isometry: Gram check failed, ||V^dag V - I||_F = " + std::to_string(err));

  CloneIsometry iso;
  iso.matrix = std::move(v);
  iso.input_dim = M;
  iso.copies = n;
  iso.machine_dimension = K;
  iso.slot_shape = SubsystemShape(std::vector<int>(static_cast<std::size_t>(n), M));
  iso.machine_labels.reserve(static_cast<std::size_t>(K));
  if (n == 2) {
    for (int j = 0; j < M; ++j) iso.machine_labels.push_back("X" + std::to_string(j));
  } else {
    for (int j = 0; j < M; ++j)
      for (int k = 0; k < M; ++k)
        iso.machine_labels.push_back("Z" + std::to_string(j) + std::to_string(k));
  }
  return iso;
}

/// Applies the cloner to one subsystem of a pure state. The target subsystem
/// is expanded in place into the clone slots and the machine register is
/// appended as the last subsystem.
inline PureState apply_cloner(const CloneIsometry& iso, const PureState& state, int target) {
  const SubsystemShape& shape = state.shape();
  if (target < 0 || target >= shape.count()) throw argument_error("apply_cloner: target out of range");
  if (shape.dim(target) != iso.input_dim)
    throw argument_error("apply_cloner: target dimension does not match isometry input");

  const int M = iso.input_dim;
  const int K = iso.machine_dimension;
  long long slots_dim = 1;
  for (int i = 0; i < iso.copies; ++i) slots_dim *= M;
  const long long out_block = slots_dim * K;

  long long pre = 1, post = 1;
  for (int i = 0; i < target; ++i) pre *= shape.dim(i);
  for (int i = target + 1; i < shape.count(); ++i) post *= shape.dim(i);

  // input index = (a * M + t) * post + b; output carries slots in place of t
  // and the machine index appended after all original subsystems.
  CVector out = CVector::Zero(pre * slots_dim * post * K);
  const CVector& in = state.amplitudes();
  for (long long a = 0; a < pre; ++a)
    for (long long b = 0; b < post; ++b) {
      for (long long sm = 0; sm < out_block; ++sm) {
        const long long slot = sm / K;
        const long long mach = sm % K;
        Complex acc = 0.0;
        for (int t = 0; t < M; ++t) {
          const Complex w = iso.matrix(sm, t);
          if (w != Complex(0.0, 0.0)) acc += w * in((a * M + t) * post + b);
        }
        if (acc != Complex(0.0, 0.0))
          out(((a * slots_dim + slot) * post + b) * K + mach) = acc;
      }
    }

  std::vector<int> dims;
  for (int i = 0; i < target; ++i) dims.push_back(shape.dim(i));
  for (int i = 0; i < iso.copies; ++i) dims.push_back(M);
  for (int i = target + 1; i < shape.count(); ++i) dims.push_back(shape.dim(i));
  dims.push_back(K);

  double norm = out.norm();
  if (std::abs(norm - 1.0) > 1e-12) out /= norm;  // isometry preserves norm; guard rounding
  return PureState(std::move(out), SubsystemShape(dims));
}

/// Output density over the clone register only (machine traced out),
/// shaped as copies * log2(M) qubits.
inline DensityMatrix clone_output_density(const MachineSpec& spec, const PureState& input) {
  if (input.dim() != spec.input_dim) throw argument_error("clone_output_density: input dimension mismatch");
  CloneIsometry iso = build_isometry(spec);
  const int K = iso.machine_dimension;
  long long slots_dim = 1;
  for (int i = 0; i < spec.copies; ++i) slots_dim *= spec.input_dim;

  CVector out = iso.matrix * input.amplitudes();
  // rho[x,y] = sum_m out[x*K+m] conj(out[y*K+m])
  Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      a(out.data(), slots_dim, K);
  CMatrix rho = a * a.adjoint();
  rho = 0.5 * (rho + rho.adjoint().eval());

  int qubits_per_clone = 0;
  for (int m = spec.input_dim; m > 1; m /= 2) {
    if (m % 2 != 0) throw argument_error("clone_output_density: input dimension must be a power of 2");
    ++qubits_per_clone;
  }
  return DensityMatrix(std::move(rho), SubsystemShape::qubits(spec.copies * qubits_per_clone));
}

/// Fidelity of one clone against the input (all clones are equivalent for a
/// symmetric machine).
inline double clone_fidelity(const MachineSpec& spec, const PureState& input) {
  DensityMatrix rho = clone_output_density(spec, input);
  int qubits_per_clone = 0;
  for (int m = spec.input_dim; m > 1; m /= 2) ++qubits_per_clone;
  std::vector<int> first_clone;
  for (int q = 0; q < qubits_per_clone; ++q) first_clone.push_back(q);
  DensityMatrix r1 = partial_trace(rho, first_clone).reshaped(SubsystemShape::single(spec.input_dim));
  return fidelity_pure(input.reshaped(SubsystemShape::single(spec.input_dim)), r1);
}

struct UniversalResult {
  double d_star = 0.0;
  double fidelity = 0.0;
  double spread = 0.0;           // max - min fidelity over the probe sample
  bool input_independent = false;
};

namespace detail {

inline double fidelity_spread(int M, int copies, Eq3Sector sector, double d,
                              const std::vector<PureState>& sample, double* mean_out) {
  MachineSpec spec = MachineSpec::make(M, copies, d, sector);
  double lo = 2.0, hi = -1.0, sum = 0.0;
  for (const PureState& s : sample) {
    double f = clone_fidelity(spec, s);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    sum += f;
  }
  if (mean_out) *mean_out = sum / static_cast<double>(sample.size());
  return hi - lo;
}

}  // namespace detail

/// Finds the machine parameter at which the clone fidelity stops depending on
/// the input state. The spread of fidelities over a fixed pseudo-random
/// sample is scanned over [0, d_max]; every near-zero local minimum is
/// refined, and among the input-independent points the one with the highest
/// fidelity is reported (the c = 0 endpoint is also input-independent but
/// useless, so minimizing spread alone would be ambiguous).
inline UniversalResult universal_parameter(int M, int copies, Eq3Sector sector) {
  constexpr int kSampleSize = 200;
  constexpr int kScanPoints = 256;
  constexpr std::uint64_t kSampleSeed = 0x5eed5eed5eedULL;

  Rng rng(kSampleSeed);
  std::vector<PureState> sample;
  sample.reserve(kSampleSize);
  for (int i = 0; i < kSampleSize; ++i)
    sample.emplace_back(rng.random_state(M), SubsystemShape::single(M));

  const double dm = d_max(M, copies, sector) * (1.0 - 1e-12);
  std::vector<std::pair<double, double>> scan;  // (d, spread)
  scan.reserve(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    double d = dm * static_cast<double>(i) / (kScanPoints - 1);
    scan.emplace_back(d, detail::fidelity_spread(M, copies, sector, d, sample, nullptr));
  }

  auto refine = [&](double lo, double hi) {
    for (int it = 0; it < 90; ++it) {
      double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (detail::fidelity_spread(M, copies, sector, m1, sample, nullptr) <
          detail::fidelity_spread(M, copies, sector, m2, sample, nullptr))
        hi = m2;
      else
        lo = m1;
    }
    return 0.5 * (lo + hi);
  };

  UniversalResult best;
  bool have_best = false;
  double best_spread_anywhere = 1e300;
  double best_d_anywhere = 0.0;
  for (int i = 0; i < kScanPoints; ++i) {
    double s = scan[static_cast<std::size_t>(i)].second;
    if (s < best_spread_anywhere) {
      best_spread_anywhere = s;
      best_d_anywhere = scan[static_cast<std::size_t>(i)].first;
    }
    bool local_min = (i == 0 || s <= scan[static_cast<std::size_t>(i - 1)].second) &&
                     (i == kScanPoints - 1 || s <= scan[static_cast<std::size_t>(i + 1)].second);
    if (!local_min || s > 1e-3) continue;
    double lo = scan[static_cast<std::size_t>(std::max(0, i - 1))].first;
    double hi = scan[static_cast<std::size_t>(std::min(kScanPoints - 1, i + 1))].first;
    double d = refine(lo, hi);
    double mean = 0.0;
    double spread = detail::fidelity_spread(M, copies, sector, d, sample, &mean);
    if (spread < 1e-8 && (!have_best || mean > best.fidelity)) {
      best.d_star = d;
      best.fidelity = mean;
      best.spread = spread;
      best.input_independent = true;
      have_best = true;
    }
  }

  if (!have_best) {
    double d = refine(std::max(0.0, best_d_anywhere - dm / kScanPoints),
                      std::min(dm, best_d_anywhere + dm / kScanPoints));
    double mean = 0.0;
    best.spread = detail::fidelity_spread(M, copies, sector, d, sample, &mean);
    best.d_star = d;
    best.fidelity = mean;
    best.input_independent = best.spread < 1e-8;
  }
  return best;
}

inline UniversalResult universal_parameter(int M, int copies) {
  return universal_parameter(M, copies, default_sector(M));
}

}  // namespace qnet
