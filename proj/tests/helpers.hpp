#pragma once

#include <initializer_list>
#include <vector>

#include "cfslab/linop.hpp"

namespace testing {

inline cfslab::Matrix real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
    cfslab::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

inline cfslab::Matrix diag(std::initializer_list<double> d) {
    cfslab::Matrix m = cfslab::Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double v : d) {
        m(i, i) = v;
        ++i;
    }
    return m;
}

inline cfslab::SpacetimePointOp point(const cfslab::Matrix& m, int n) { return cfslab::make_point(m, n); }

}  // namespace testing
