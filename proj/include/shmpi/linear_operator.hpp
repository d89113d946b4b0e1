#pragma once

#include <Eigen/Core>

namespace shmpi {

/// Matrix-free y = A x and x = A^T y.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
  virtual void apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& x) const = 0;
};

class DenseOperator : public LinearOperator {
 public:
  explicit DenseOperator(const Eigen::MatrixXd& a) : a_(a) {}
  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y.noalias() = a_ * x; }
  void apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& x) const override {
    x.noalias() = a_.transpose() * y;
  }

 private:
  const Eigen::MatrixXd& a_;
};

}  // namespace shmpi
