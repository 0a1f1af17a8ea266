#include "hashviz/tsne.hpp"

#include "hashviz/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hashviz {

namespace {

constexpr double kMinBeta = 1e-20;
constexpr double kMaxBeta = 1e20;
constexpr int kMaxBisection = 200;
// Tighter than the 1e-5 contract so independent recomputation stays inside it.
constexpr double kLog2PerplexityTol = 1e-6;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> as_eigen(const Matrix<double>& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    d += diff * diff;
  }
  return d;
}

double student_t(const Matrix<double>& y, std::size_t i, std::size_t j) {
  const double dx = y(i, 0) - y(j, 0);
  const double dy = y(i, 1) - y(j, 1);
  return 1.0 / (1.0 + dx * dx + dy * dy);
}

double normalizer(const Matrix<double>& y) {
  double z = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows(); ++j) {
      if (i != j) z += student_t(y, i, j);
    }
  }
  return z;
}

// KL and its gradient from a single sweep over pairs.
double kl_and_gradient(const Matrix<double>& p, const Matrix<double>& y,
                       double scale, Matrix<double>* grad) {
  const std::size_t n = y.rows();
  const double z = normalizer(y);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double gx = 0.0;
    double gy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = student_t(y, i, j);
      const double q = std::max(w / z, kAffinityFloor);
      const double pij = scale * p(i, j);
      if (pij > 0.0) kl += pij * std::log(pij / q);
      const double f = (pij - q) * w;
      gx += f * (y(i, 0) - y(j, 0));
      gy += f * (y(i, 1) - y(j, 1));
    }
    if (grad) {
      (*grad)(i, 0) = 4.0 * gx;
      (*grad)(i, 1) = 4.0 * gy;
    }
  }
  return kl;
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

void recenter(Matrix<double>& y) {
  for (std::size_t c = 0; c < y.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i) mean += y(i, c);
    mean /= static_cast<double>(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i) y(i, c) -= mean;
  }
}

void check_layout(const Matrix<double>& p, const Matrix<double>& y) {
  if (y.cols() != 2) throw std::invalid_argument("t-SNE layout must have 2 columns");
  if (p.rows() != y.rows() || p.cols() != y.rows()) {
    throw std::invalid_argument("affinity matrix does not match layout size");
  }
}

}  // namespace

void TsneConfig::validate() const {
  if (!(perplexity > 1.0)) throw std::invalid_argument("perplexity must be > 1");
  if (iters < 1) throw std::invalid_argument("t-SNE iters must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("t-SNE eta must be > 0");
  if (!(exaggeration >= 1.0)) throw std::invalid_argument("exaggeration must be >= 1");
  if (pca_dim < 1) throw std::invalid_argument("pca_dim must be >= 1");
}

Matrix<double> pca_reduce(const Matrix<double>& x, std::size_t d) {
  if (x.rows() < 2) throw std::invalid_argument("pca_reduce needs at least 2 rows");
  if (d < 1) throw std::invalid_argument("pca_reduce target dim must be >= 1");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto cols = static_cast<Eigen::Index>(x.cols());

  RowMajor centered = as_eigen(x);
  centered.rowwise() -= centered.colwise().mean();

  if (x.cols() <= d) {
    Matrix<double> out(x.rows(), x.cols());
    Eigen::Map<RowMajor>(out.data().data(), n, cols) = centered;
    return out;
  }

  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("PCA eigen-decomposition failed");

  // Eigenvalues ascend; take the last d columns, largest first.
  const auto target = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd components(cols, target);
  for (Eigen::Index c = 0; c < target; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(cols - 1 - c);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0) v = -v;
    components.col(c) = v;
  }

  Matrix<double> out(x.rows(), d);
  Eigen::Map<RowMajor>(out.data().data(), n, target) = centered * components;
  return out;
}

Affinities calibrate_affinities(const Matrix<double>& x, double perplexity) {
  const std::size_t n = x.rows();
  if (n < 3) throw std::invalid_argument("calibrate_affinities needs N >= 3");
  if (!(perplexity > 0.0)) throw std::invalid_argument("perplexity must be > 0");

  Affinities out;
  out.perplexity = perplexity;
  const double max_perplexity = static_cast<double>(n - 1) / 3.0;
  if (perplexity > max_perplexity) {
    out.perplexity = max_perplexity;
    out.clamped = true;
  }
  const double target_bits = std::log2(out.perplexity);

  out.conditional = Matrix<double>(n, n, 0.0);
  out.beta.assign(n, 1.0);
  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      shifted[j] = squared_distance(x.row(i), x.row(j));
      dmin = std::min(dmin, shifted[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) shifted[j] -= dmin;
    }

    auto row = out.conditional.row(i);
    double log_lo = std::log(kMinBeta);
    double log_hi = std::log(kMaxBeta);
    double log_beta = 0.5 * (log_lo + log_hi);
    for (int iter = 0; iter < kMaxBisection; ++iter) {
      const double beta = std::exp(log_beta);
      double sum = 0.0;
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        row[j] = std::exp(-beta * shifted[j]);
        sum += row[j];
        weighted += row[j] * shifted[j];
      }
      const double entropy_bits = (std::log(sum) + beta * weighted / sum) / std::log(2.0);
      for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
      out.beta[i] = beta;

      const double diff = entropy_bits - target_bits;
      if (std::abs(diff) < kLog2PerplexityTol) break;
      if (diff > 0) {
        log_lo = log_beta;  // too flat: sharpen
      } else {
        log_hi = log_beta;
      }
      log_beta = 0.5 * (log_lo + log_hi);
    }
    row[i] = 0.0;
  }

  out.joint = Matrix<double>(n, n, 0.0);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = (out.conditional(i, j) + out.conditional(j, i)) / denom;
      out.joint(i, j) = std::max(p, kAffinityFloor);
    }
  }
  return out;
}

Matrix<double> low_dim_affinities(const Matrix<double>& y) {
  if (y.cols() != 2) throw std::invalid_argument("t-SNE layout must have 2 columns");
  const double z = normalizer(y);
  Matrix<double> q(y.rows(), y.rows(), 0.0);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows(); ++j) {
      if (i != j) q(i, j) = std::max(student_t(y, i, j) / z, kAffinityFloor);
    }
  }
  return q;
}

double kl_divergence(const Matrix<double>& p, const Matrix<double>& y, double scale) {
  check_layout(p, y);
  return kl_and_gradient(p, y, scale, nullptr);
}

Matrix<double> kl_gradient(const Matrix<double>& p, const Matrix<double>& y,
                           double scale) {
  check_layout(p, y);
  Matrix<double> grad(y.rows(), 2);
  kl_and_gradient(p, y, scale, &grad);
  return grad;
}

double tsne_step(Matrix<double>& y, const Matrix<double>& p,
                 const TsneConfig& config, TsneState& state) {
  check_layout(p, y);
  const bool early = state.iteration < config.exaggeration_iters;
  const double scale = early ? config.exaggeration : 1.0;
  const double momentum = state.iteration < config.momentum_switch_iter
                              ? config.momentum
                              : config.final_momentum;

  Matrix<double> grad(y.rows(), 2);
  const double kl = kl_and_gradient(p, y, scale, &grad);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    if (!std::isfinite(grad(i, 0)) || !std::isfinite(grad(i, 1))) {
      std::ostringstream msg;
      msg << "non-finite t-SNE gradient at iteration " << state.iteration << ", point "
          << i << " (y = " << y(i, 0) << ", " << y(i, 1) << "; KL = " << kl << ")";
      throw Error(msg.str());
    }
  }

  auto g = grad.data();
  auto vel = state.velocity.data();
  auto gains = state.gains.data();
  auto pos = y.data();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const bool agree = sign(g[k]) == sign(vel[k]);
    gains[k] = agree ? gains[k] * 0.8 : gains[k] + 0.2;
    gains[k] = std::max(gains[k], 0.01);
    vel[k] = momentum * vel[k] - config.eta * gains[k] * g[k];
    pos[k] += vel[k];
  }
  recenter(y);
  ++state.iteration;
  return kl;
}

TsneResult run_tsne(const Matrix<double>& vectors, const TsneConfig& config) {
  config.validate();
  const std::size_t n = vectors.rows();
  if (n < 3) throw std::invalid_argument("run_tsne needs at least 3 points");

  const Matrix<double> reduced = pca_reduce(vectors, static_cast<std::size_t>(config.pca_dim));
  Affinities aff = calibrate_affinities(reduced, config.perplexity);
  aff.conditional = {};

  TsneResult result;
  result.perplexity = aff.perplexity;
  result.perplexity_clamped = aff.clamped;

  Matrix<double> y(n, 2);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gaussian(0.0, 1e-4);
  for (auto& v : y.data()) v = gaussian(rng);
  recenter(y);
  result.initial_kl = kl_divergence(aff.joint, y);

  TsneState state(n);
  for (int t = 0; t < config.iters; ++t) tsne_step(y, aff.joint, config, state);

  result.final_kl = kl_divergence(aff.joint, y);
  result.coords = std::move(y);
  return result;
}

}  // namespace hashviz
