#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ttc {

using Index = Eigen::Index;

/** Column-major dense matrix used for all small linear-algebra kernels. */
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
/** Row-major matrix; core storage and unfoldings are views of this layout. */
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Dims = std::vector<Index>;
using Ranks = std::vector<Index>;
using MultiIndex = std::vector<Index>;

/** Base class for all errors raised by the library. */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Shapes, ranks or indices that do not conform. */
class DimensionError : public Error {
public:
    using Error::Error;
};

/** Non-finite iterates or other numerical breakdown. */
class NumericalError : public Error {
public:
    using Error::Error;
};

/** Malformed configuration or serialized input. */
class FormatError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline std::string join(const std::vector<Index>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s + ")";
}

inline Index product(const std::vector<Index>& v) {
    Index p = 1;
    for (Index x : v) p *= x;
    return p;
}

} // namespace detail
} // namespace ttc
