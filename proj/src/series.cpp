#include "seqmon/series.hpp"

#include "seqmon/errors.hpp"

#include <cmath>
#include <string>

namespace seqmon {

Series::Series(Index dim) : dim_(dim) {
  if (dim < 1) throw ConfigError("series dimension must be at least 1");
}

Series Series::from_matrix(const Eigen::MatrixXd& rows) {
  if (rows.cols() < 1) throw ConfigError("series needs at least one column");
  Series s(rows.cols());
  s.reserve(rows.rows());
  for (Index t = 0; t < rows.rows(); ++t) s.append(rows.row(t).transpose());
  return s;
}

void Series::append(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != dim_) {
    throw ConfigError("row has " + std::to_string(x.size()) + " components, series has " +
                      std::to_string(dim_));
  }
  for (Index c = 0; c < dim_; ++c) {
    if (!std::isfinite(x[c])) throw ConfigError("non-finite value in row " + std::to_string(size()));
  }
  data_.insert(data_.end(), x.data(), x.data() + dim_);
}

Series Series::slice(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > size()) throw ConfigError("slice out of range");
  Series out(dim_);
  out.data_.assign(data_.begin() + first * dim_, data_.begin() + (first + count) * dim_);
  return out;
}

Eigen::MatrixXd Series::to_matrix() const {
  Eigen::MatrixXd m(size(), dim_);
  for (Index t = 0; t < size(); ++t) m.row(t) = row(t).transpose();
  return m;
}

}  // namespace seqmon
