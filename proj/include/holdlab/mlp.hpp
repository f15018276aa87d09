#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace holdlab {

/// Fully connected ReLU network, column-major batches (features x batch).
/// The output layer is linear.
template <typename Scalar>
class Mlp {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Grads {
    std::vector<Mat> dW;
    std::vector<Vec> db;
  };

  struct Cache {
    std::vector<Mat> act;  // act[0] = input, act[l] = output of layer l
  };

  Mlp() = default;

  explicit Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("Mlp needs at least an input and an output layer");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      W_.push_back(Mat::Zero(dims_[l + 1], dims_[l]));
      b_.push_back(Vec::Zero(dims_[l + 1]));
    }
  }

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(std::mt19937_64& rng) {
    for (std::size_t l = 0; l < W_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index j = 0; j < W_[l].cols(); ++j)
        for (Eigen::Index i = 0; i < W_[l].rows(); ++i) W_[l](i, j) = static_cast<Scalar>(u(rng));
      for (Eigen::Index i = 0; i < b_[l].size(); ++i) b_[l](i) = static_cast<Scalar>(u(rng));
    }
  }

  Mat forward(const Mat& x) const {
    Mat h = x;
    for (std::size_t l = 0; l < W_.size(); ++l) {
      Mat z = W_[l] * h;
      z.colwise() += b_[l];
      if (l + 1 < W_.size()) z = z.cwiseMax(Scalar(0));
      h = std::move(z);
    }
    return h;
  }

  Mat forward(const Mat& x, Cache& cache) const {
    cache.act.resize(W_.size() + 1);
    cache.act[0] = x;
    for (std::size_t l = 0; l < W_.size(); ++l) {
      Mat z = W_[l] * cache.act[l];
      z.colwise() += b_[l];
      if (l + 1 < W_.size()) z = z.cwiseMax(Scalar(0));
      cache.act[l + 1] = std::move(z);
    }
    return cache.act.back();
  }

  /// Gradients of a loss given dLoss/dOutput for the cached batch.
  Grads backward(const Cache& cache, const Mat& d_out) const {
    Grads g;
    g.dW.resize(W_.size());
    g.db.resize(W_.size());
    Mat delta = d_out;
    for (std::size_t l = W_.size(); l-- > 0;) {
      g.dW[l].noalias() = delta * cache.act[l].transpose();
      g.db[l] = delta.rowwise().sum();
      if (l > 0) {
        Mat back = W_[l].transpose() * delta;
        delta = back.cwiseProduct((cache.act[l].array() > Scalar(0)).matrix().template cast<Scalar>());
      }
    }
    return g;
  }

  void sgd_step(const Grads& g, Scalar lr) {
    for (std::size_t l = 0; l < W_.size(); ++l) {
      W_[l].noalias() -= lr * g.dW[l];
      b_[l].noalias() -= lr * g.db[l];
    }
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < W_.size(); ++l)
      if (!W_[l].allFinite() || !b_[l].allFinite()) return false;
    return true;
  }

  std::size_t layers() const { return W_.size(); }
  const std::vector<int>& dims() const { return dims_; }
  Mat& weight(std::size_t l) { return W_[l]; }
  const Mat& weight(std::size_t l) const { return W_[l]; }
  Vec& bias(std::size_t l) { return b_[l]; }
  const Vec& bias(std::size_t l) const { return b_[l]; }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(dims_);
    for (std::size_t l = 0; l < W_.size(); ++l) {
      out.weight(l) = W_[l].template cast<Other>();
      out.bias(l) = b_[l].template cast<Other>();
    }
    return out;
  }

  bool operator==(const Mlp& o) const {
    if (dims_ != o.dims_) return false;
    for (std::size_t l = 0; l < W_.size(); ++l)
      if (W_[l] != o.W_[l] || b_[l] != o.b_[l]) return false;
    return true;
  }

 private:
  std::vector<int> dims_;
  std::vector<Mat> W_;
  std::vector<Vec> b_;
};

/// Adam moments for an Mlp of the same shape.
template <typename Scalar>
class AdamState {
 public:
  using Net = Mlp<Scalar>;

  AdamState() = default;
  explicit AdamState(const Net& net) {
    for (std::size_t l = 0; l < net.layers(); ++l) {
      mW_.push_back(Net::Mat::Zero(net.weight(l).rows(), net.weight(l).cols()));
      vW_.push_back(mW_.back());
      mb_.push_back(Net::Vec::Zero(net.bias(l).size()));
      vb_.push_back(mb_.back());
    }
  }

  void step(Net& net, const typename Net::Grads& g, Scalar lr, Scalar b1 = Scalar(0.9), Scalar b2 = Scalar(0.999),
            Scalar eps = Scalar(1e-8)) {
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t_));
    for (std::size_t l = 0; l < net.layers(); ++l) {
      mW_[l] = b1 * mW_[l] + (Scalar(1) - b1) * g.dW[l];
      vW_[l] = b2 * vW_[l] + (Scalar(1) - b2) * g.dW[l].cwiseProduct(g.dW[l]);
      mb_[l] = b1 * mb_[l] + (Scalar(1) - b1) * g.db[l];
      vb_[l] = b2 * vb_[l] + (Scalar(1) - b2) * g.db[l].cwiseProduct(g.db[l]);
      net.weight(l).array() -= lr * (mW_[l].array() / c1) / ((vW_[l].array() / c2).sqrt() + eps);
      net.bias(l).array() -= lr * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps);
    }
  }

 private:
  long t_ = 0;
  std::vector<typename Net::Mat> mW_, vW_;
  std::vector<typename Net::Vec> mb_, vb_;
};

}  // namespace holdlab
