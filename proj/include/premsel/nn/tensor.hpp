#pragma once

#include <variant>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace premsel::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using SparseRows = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// A batch of network inputs, one example per row, stored densely or sparsely.
/// Sparse batches let one-hot and count-vector inputs select columns of the
/// first weight matrix instead of multiplying through zeros.
template <typename Scalar>
struct InputBatch {
  std::variant<Matrix<Scalar>, SparseRows<Scalar>> data;

  InputBatch() = default;
  InputBatch(Matrix<Scalar> dense) : data(std::move(dense)) {}
  InputBatch(SparseRows<Scalar> sparse) : data(std::move(sparse)) {}

  Eigen::Index rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, data);
  }
  Eigen::Index cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, data);
  }
  bool is_sparse() const noexcept { return data.index() == 1; }
};

}  // namespace premsel::nn
