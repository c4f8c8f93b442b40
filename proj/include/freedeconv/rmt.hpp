#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "freedeconv/measure.hpp"

namespace fdc {

// Independent, reproducible generator for stream `stream` under `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

// QR of an N x N standard Gaussian matrix with the signs of diag(R) absorbed.
Eigen::MatrixXd haar_orthogonal(int N, std::mt19937_64& rng);
// The first k columns of the matrix haar_orthogonal(N, rng) would return for
// the same generator state.
Eigen::MatrixXd haar_columns(int N, int k, std::mt19937_64& rng);

// Largest-remainder multiplicities, in atom order; they sum to N.
std::vector<int> multiplicities(const AtomicMeasure& m, int N);
// Diagonal of the discretized matrix, ascending.
std::vector<double> spectrum_diagonal(const AtomicMeasure& m, int N);
Eigen::MatrixXd spectrum_matrix(const AtomicMeasure& m, int N);

enum class EnsembleKind { additive, multiplicative, classical };

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::additive;
  std::vector<AtomicMeasure> measures;
  int N = 0;
  std::uint64_t seed = 0;
};

// Eigenvalues of A_1 + Q_2 A_2 Q_2^T + ... + Q_n A_n Q_n^T.
EmpiricalSpectrum sample_additive(const EnsembleSpec& spec);
// Eigenvalues of sqrt(A_1) Q_2 sqrt(A_2) ... Q_n A_n Q_n^T ... sqrt(A_2) Q_2^T sqrt(A_1).
EmpiricalSpectrum sample_multiplicative(const EnsembleSpec& spec);
// N draws of Y_1 + ... + Y_n with Y_k ~ measures[k] independent.
EmpiricalSpectrum sample_classical(const std::vector<AtomicMeasure>& measures, int N, std::uint64_t seed);
EmpiricalSpectrum sample(const EnsembleSpec& spec);

}  // namespace fdc
