#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>
#include <vector>

namespace palmrt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bijection on {0, ..., n-1}. Row action is a gather:
/// apply(A).row(i) == A.row(perm(i)), and compose(p, s) maps i -> p(s(i)),
/// so apply(apply(A, p), s) == apply(A, compose(p, s)).
class Permutation {
 public:
  explicit Permutation(std::vector<Index> mapping) : map_(std::move(mapping)) {
    std::vector<char> seen(map_.size(), 0);
    for (Index v : map_) {
      if (v < 0 || v >= static_cast<Index>(map_.size()) || seen[v])
        throw std::invalid_argument("Permutation: mapping is not a bijection");
      seen[v] = 1;
    }
  }

  static Permutation identity(Index n) {
    std::vector<Index> m(n);
    for (Index i = 0; i < n; ++i) m[i] = i;
    return Permutation(std::move(m));
  }

  Index size() const { return static_cast<Index>(map_.size()); }
  Index operator()(Index i) const { return map_[i]; }
  const std::vector<Index>& mapping() const { return map_; }

  bool is_identity() const {
    for (Index i = 0; i < size(); ++i)
      if (map_[i] != i) return false;
    return true;
  }

  Permutation inverse() const {
    std::vector<Index> inv(map_.size());
    for (Index i = 0; i < size(); ++i) inv[map_[i]] = i;
    return Permutation(std::move(inv));
  }

  /// compose(p, s)(i) = p(s(i))
  static Permutation compose(const Permutation& p, const Permutation& s) {
    if (p.size() != s.size())
      throw std::invalid_argument("Permutation: size mismatch in compose");
    std::vector<Index> m(p.size());
    for (Index i = 0; i < p.size(); ++i) m[i] = p(s(i));
    return Permutation(std::move(m));
  }

  Vector apply(const Eigen::Ref<const Vector>& v) const {
    Vector out(v.size());
    for (Index i = 0; i < size(); ++i) out[i] = v[map_[i]];
    return out;
  }

  Matrix apply_rows(const Eigen::Ref<const Matrix>& m) const {
    Matrix out(m.rows(), m.cols());
    for (Index i = 0; i < size(); ++i) out.row(i) = m.row(map_[i]);
    return out;
  }

 private:
  std::vector<Index> map_;
};

/// Response, interest covariates, and control covariates. By convention z
/// carries the intercept column.
struct Dataset {
  Vector y;   // n
  Matrix x;   // n x d, d >= 1
  Matrix z;   // n x p

  Index n() const { return y.size(); }
  Index d() const { return x.cols(); }
  Index p() const { return z.cols(); }

  void validate() const {
    if (y.size() < 2) throw std::invalid_argument("Dataset: need n >= 2");
    if (x.rows() != y.size() || z.rows() != y.size())
      throw std::invalid_argument("Dataset: row counts disagree");
    if (x.cols() < 1) throw std::invalid_argument("Dataset: need d >= 1");
    if (!y.allFinite() || !x.allFinite() || !z.allFinite())
      throw std::invalid_argument("Dataset: non-finite entries");
  }
};

}  // namespace palmrt
