#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ptcflow/sparse.hpp"

namespace ptcflow {

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(int pivot, const std::string& what)
        : std::runtime_error(what), pivot_(pivot) {}
    int pivot_index() const { return pivot_; }

private:
    int pivot_;
};

// Direct sparse LU, P A Q = L U, left-looking with threshold partial pivoting.
// Columns are preordered by minimum degree on the symmetrized pattern. A
// finished factorization is immutable and can serve any number of solves.
class Factorization {
public:
    explicit Factorization(const SparseMatrix& A, double pivot_threshold = 0.1);

    std::vector<double> solve(const std::vector<double>& b) const;
    std::vector<double> solve_transposed(const std::vector<double>& b) const;

    int dimension() const { return n_; }
    // max |U| over max |A|, a cheap instability indicator
    double pivot_growth() const { return pivot_growth_; }

private:
    int n_ = 0;
    // L (unit lower) and U in compressed column form, rows in pivotal order.
    std::vector<int> l_ptr_, l_idx_;
    std::vector<double> l_val_;
    std::vector<int> u_ptr_, u_idx_;
    std::vector<double> u_val_;
    std::vector<int> pinv_;  // pinv_[original row] = pivotal position
    std::vector<int> q_;     // column order: column k eliminates original column q_[k]
    double pivot_growth_ = 0.0;
};

inline Factorization factorize(const SparseMatrix& A, double pivot_threshold = 0.1) {
    return Factorization(A, pivot_threshold);
}

inline std::vector<double> solve(const Factorization& f, const std::vector<double>& b) {
    return f.solve(b);
}

// Minimum-degree ordering of the pattern of A + A^T (exposed for tests).
std::vector<int> min_degree_ordering(const SparseMatrix& A);

}  // namespace ptcflow
