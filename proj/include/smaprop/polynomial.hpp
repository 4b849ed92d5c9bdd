// Multivariate monomial expansion and minimum-norm least squares.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smaprop::poly {

/// Descriptor recorded in model files for the monomial ordering below.
inline constexpr const char* kMonomialOrder = "graded-lex-desc";

/// Number of monomials of total degree <= m in n variables, C(n+m, n).
inline std::size_t count_monomials(std::size_t n_vars, std::size_t degree) {
  std::size_t c = 1;
  // C(n+m, m) accumulated as a product of exact integer quotients.
  for (std::size_t i = 1; i <= degree; ++i) c = c * (n_vars + i) / i;
  return c;
}

using Exponents = std::vector<unsigned>;

/// Exponent tuples in canonical order: degree ascending, then lexicographically
/// descending within a degree, so [x1, x2] at degree 2 gives
/// 1, x1, x2, x1^2, x1 x2, x2^2.
inline std::vector<Exponents> monomial_exponents(std::size_t n_vars, std::size_t degree) {
  if (n_vars == 0) throw std::domain_error("monomial basis needs at least one variable");
  std::vector<Exponents> out;
  out.reserve(count_monomials(n_vars, degree));
  Exponents cur(n_vars, 0);
  // Recursively place `left` units of degree into positions pos..n-1, largest first.
  auto place = [&](auto&& self, std::size_t pos, unsigned left) -> void {
    if (pos + 1 == n_vars) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (unsigned e = left + 1; e-- > 0;) {
      cur[pos] = e;
      self(self, pos + 1, left - e);
    }
  };
  for (unsigned d = 0; d <= degree; ++d) place(place, 0, d);
  return out;
}

/// Precomputed basis so repeated expansion does not rebuild the exponent table.
class MonomialBasis {
 public:
  MonomialBasis(std::size_t n_vars, std::size_t degree)
      : n_vars_(n_vars), degree_(degree), exponents_(monomial_exponents(n_vars, degree)) {}

  std::size_t n_vars() const { return n_vars_; }
  std::size_t degree() const { return degree_; }
  std::size_t size() const { return exponents_.size(); }
  const std::vector<Exponents>& exponents() const { return exponents_; }

  template <typename OutIt>
  void expand_into(std::span<const double> x, OutIt out) const {
    if (x.size() != n_vars_) {
      throw std::domain_error("expected " + std::to_string(n_vars_) + " variables, got " +
                              std::to_string(x.size()));
    }
    // powers[v][p] = x_v^p
    std::vector<double> powers(n_vars_ * (degree_ + 1));
    for (std::size_t v = 0; v < n_vars_; ++v) {
      double acc = 1.0;
      for (std::size_t p = 0; p <= degree_; ++p) {
        powers[v * (degree_ + 1) + p] = acc;
        acc *= x[v];
      }
    }
    for (const auto& e : exponents_) {
      double term = 1.0;
      for (std::size_t v = 0; v < n_vars_; ++v) term *= powers[v * (degree_ + 1) + e[v]];
      *out++ = term;
    }
  }

  std::vector<double> expand(std::span<const double> x) const {
    std::vector<double> row(size());
    expand_into(x, row.begin());
    return row;
  }

 private:
  std::size_t n_vars_;
  std::size_t degree_;
  std::vector<Exponents> exponents_;
};

/// Monomials of x up to total degree m; the first entry is always 1.
inline std::vector<double> expand_monomials(std::span<const double> x, std::size_t degree) {
  return MonomialBasis(x.size(), degree).expand(x);
}

/// Stacks the expansions of `points` (each of length n) into a K x N_m matrix.
inline Eigen::MatrixXd design_matrix(const std::vector<std::vector<double>>& points,
                                     const MonomialBasis& basis) {
  Eigen::MatrixXd m(points.size(), basis.size());
  std::vector<double> row(basis.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    basis.expand_into(points[k], row.begin());
    for (std::size_t j = 0; j < row.size(); ++j) m(k, j) = row[j];
  }
  return m;
}

inline constexpr double kSingularCutoff = 1e-12;

/// Minimum-norm least-squares solution W = M^+ y through a thin SVD; singular
/// values below kSingularCutoff * sigma_max count as zero.
inline Eigen::VectorXd fit_least_squares(const Eigen::MatrixXd& rows, const Eigen::VectorXd& targets) {
  if (rows.rows() == 0 || rows.cols() == 0) throw std::domain_error("least squares on empty input");
  if (rows.rows() != targets.size()) throw std::domain_error("row count and target count differ");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? kSingularCutoff * s(0) : 0.0;
  Eigen::VectorXd projected = svd.matrixU().transpose() * targets;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    projected(i) = s(i) > cutoff ? projected(i) / s(i) : 0.0;
  }
  return svd.matrixV() * projected;
}

/// Fitted polynomial in named variables.
struct PolyModel {
  std::vector<std::string> var_names;
  std::size_t degree = 0;
  std::vector<double> weights;
  std::string monomial_order = kMonomialOrder;

  std::size_t n_vars() const { return var_names.size(); }

  void validate() const {
    if (var_names.empty()) throw std::domain_error("PolyModel has no variables");
    if (monomial_order != kMonomialOrder) {
      throw std::domain_error("unsupported monomial order '" + monomial_order + "'");
    }
    if (weights.size() != count_monomials(var_names.size(), degree)) {
      throw std::domain_error("PolyModel weight count " + std::to_string(weights.size()) +
                              " does not match C(n+m, n) = " +
                              std::to_string(count_monomials(var_names.size(), degree)));
    }
  }
};

/// Fits a PolyModel to points (each of length var_names.size()) and targets.
inline PolyModel fit_poly(const std::vector<std::vector<double>>& points,
                          std::span<const double> targets, std::vector<std::string> var_names,
                          std::size_t degree) {
  if (points.empty()) throw std::domain_error("cannot fit a polynomial to zero points");
  if (points.size() != targets.size()) throw std::domain_error("points and targets differ in length");
  MonomialBasis basis(var_names.size(), degree);
  const Eigen::MatrixXd m = design_matrix(points, basis);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), targets.size());
  const Eigen::VectorXd w = fit_least_squares(m, y);
  return PolyModel{std::move(var_names), degree, std::vector<double>(w.data(), w.data() + w.size()),
                   kMonomialOrder};
}

/// y_hat = W . expand(x)
inline double predict(const PolyModel& model, std::span<const double> x) {
  if (x.size() != model.n_vars()) {
    throw std::domain_error("predict: model has " + std::to_string(model.n_vars()) +
                            " variables, input has " + std::to_string(x.size()));
  }
  const auto row = expand_monomials(x, model.degree);
  if (row.size() != model.weights.size()) throw std::domain_error("predict: malformed model weights");
  return std::inner_product(row.begin(), row.end(), model.weights.begin(), 0.0);
}

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

enum class FoldMode { shuffled, blocks };

/// Partitions 0..K-1 into `folds` test sets whose sizes differ by at most one.
/// Shuffled mode permutes with a seeded Fisher-Yates; blocks keeps time order.
inline std::vector<Fold> kfold_split(std::size_t count, std::size_t folds, std::uint64_t seed,
                                     FoldMode mode = FoldMode::shuffled) {
  if (folds < 2) throw std::domain_error("kfold_split needs at least 2 folds");
  if (count < folds) {
    throw std::domain_error("kfold_split: " + std::to_string(folds) + " folds for " +
                            std::to_string(count) + " samples");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (mode == FoldMode::shuffled) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = count; i-- > 1;) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
  }
  std::vector<Fold> out(folds);
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = count / folds + (f < count % folds ? 1 : 0);
    std::vector<bool> in_test(count, false);
    for (std::size_t i = start; i < start + size; ++i) in_test[order[i]] = true;
    for (std::size_t i = 0; i < count; ++i) (in_test[i] ? out[f].test : out[f].train).push_back(i);
    start += size;
  }
  return out;
}

}  // namespace smaprop::poly
