#pragma once

// Reference computations that share no code path with the library: eigenvalues
// from the characteristic polynomial, exact multiset matching, finite
// differences and brute-force searches.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Coefficients c_0..c_n of det(lambda I - A) = sum c_k lambda^k (c_n = 1), by
// Faddeev-LeVerrier.
std::vector<cplx> char_poly(const Matrix& a);

// All roots of a monic polynomial by Durand-Kerner, polished with Newton steps.
std::vector<cplx> durand_kerner(const std::vector<cplx>& coeffs);

// Eigenvalues of a through its characteristic polynomial.
std::vector<cplx> eigenvalues(const Matrix& a);

// The r eigenvalues of a that are not forced to zero by rank(a) <= r: roots of
// the characteristic polynomial after dividing out lambda^(dim - r).
std::vector<cplx> eigenvalues_deflated(const Matrix& a, int r);

// Minimum over all matchings of the max pairwise distance (bitmask DP, size <= 16).
double match_distance(const std::vector<cplx>& a, const std::vector<cplx>& b);

// Entries with |z| > tol.
std::vector<cplx> nonzero(const std::vector<cplx>& v, double tol);

// (1/4n) sum_ij (|l_i| - |l_j|)^2 over the given 2n values.
double lagrangian_formula(const std::vector<cplx>& lambdas, int n);

// Central difference of f along unit coordinate i.
double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          const std::vector<double>& x, std::size_t i, double h);

// Single point in f = 2, n = 1 with weight V and trace integral T: minimize
// V^2 (|nu|^2 - |mu|^2)^2 / 2 over nu - mu = T / V, nu, mu >= 0, by a dense grid
// with refinement. Returns the minimal action.
double grid_search_single_point(double volume, double trace);

// Classification straight from the definition, with the library's tolerance rule.
enum class Separation { spacelike, timelike, lightlike };
Separation classify_definition(const std::vector<cplx>& lambdas, double tol);

}  // namespace oracle
