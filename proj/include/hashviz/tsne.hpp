#pragma once

#include "hashviz/matrix.hpp"

#include <cstdint>
#include <vector>

namespace hashviz {

struct TsneConfig {
  double perplexity = 30.0;
  int iters = 1000;
  double exaggeration = 12.0;
  int exaggeration_iters = 250;
  double eta = 200.0;
  double momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
  int pca_dim = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr double kAffinityFloor = 1e-12;

// Projects mean-centered rows onto the top `d` principal components. When
// X has at most `d` columns the centered X is returned unchanged.
Matrix<double> pca_reduce(const Matrix<double>& x, std::size_t d);

struct Affinities {
  Matrix<double> joint;        // symmetric P, zero diagonal, sums to ~1
  Matrix<double> conditional;  // row i holds p_{j|i}
  std::vector<double> beta;    // per-row precision 1 / (2 sigma^2)
  double perplexity = 0.0;     // target actually used
  bool clamped = false;        // target lowered to (N - 1) / 3
};

/// Gaussian conditional affinities calibrated to `perplexity` by bisection on
/// each row's precision, then symmetrized and floored.
Affinities calibrate_affinities(const Matrix<double>& x, double perplexity);

// Student-t affinities q_ij of a 2-D layout, floored, zero diagonal.
Matrix<double> low_dim_affinities(const Matrix<double>& y);

// sum p log(p / q) over off-diagonal entries, with p scaled by `scale`.
double kl_divergence(const Matrix<double>& p, const Matrix<double>& y,
                     double scale = 1.0);

// dC/dy_i = 4 sum_j (scale p_ij - q_ij) w_ij (y_i - y_j).
Matrix<double> kl_gradient(const Matrix<double>& p, const Matrix<double>& y,
                           double scale = 1.0);

struct TsneState {
  explicit TsneState(std::size_t n) : velocity(n, 2, 0.0), gains(n, 2, 1.0) {}

  Matrix<double> velocity;
  Matrix<double> gains;
  int iteration = 0;
};

/// One momentum step with adaptive gains. Uses the exaggeration and momentum
/// scheduled for `state.iteration`, re-centers `y` and advances the
/// iteration. Returns the (exaggerated) KL at the pre-step layout.
double tsne_step(Matrix<double>& y, const Matrix<double>& p,
                 const TsneConfig& config, TsneState& state);

struct TsneResult {
  Matrix<double> coords;
  double initial_kl = 0.0;  // unexaggerated, at the random initial layout
  double final_kl = 0.0;    // unexaggerated, at the returned layout
  double perplexity = 0.0;
  bool perplexity_clamped = false;
};

TsneResult run_tsne(const Matrix<double>& vectors, const TsneConfig& config);

}  // namespace hashviz
