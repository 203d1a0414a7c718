#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace seqmon {

using Index = Eigen::Index;

/// Rows of a d-dimensional time series, stored row-major so that rows can be
/// appended while monitoring. Rows are addressed 0-based through row(); the
/// estimator windows (Window) use 1-based inclusive bounds instead.
class Series {
 public:
  Series() = default;
  explicit Series(Index dim);

  /// Copies an n x d matrix (one observation per row). All entries must be finite.
  static Series from_matrix(const Eigen::MatrixXd& rows);

  Index size() const { return dim_ == 0 ? 0 : static_cast<Index>(data_.size()) / dim_; }
  Index dim() const { return dim_; }
  bool empty() const { return data_.empty(); }

  Eigen::Map<const Eigen::VectorXd> row(Index t) const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data() + t * dim_, dim_);
  }
  double operator()(Index t, Index c) const { return data_[static_cast<std::size_t>(t * dim_ + c)]; }

  void append(const Eigen::Ref<const Eigen::VectorXd>& x);
  void reserve(Index rows) { data_.reserve(static_cast<std::size_t>(rows * dim_)); }

  /// Rows [first, first + count), 0-based.
  Series slice(Index first, Index count) const;
  Eigen::MatrixXd to_matrix() const;

  const std::vector<double>& raw() const { return data_; }

  friend bool operator==(const Series&, const Series&) = default;

 private:
  Index dim_ = 0;
  std::vector<double> data_;
};

/// 1-based inclusive index range [first, last] of a series.
struct Window {
  Index first = 1;
  Index last = 1;

  Index length() const { return last - first + 1; }
  bool empty() const { return first > last; }
};

}  // namespace seqmon
