#pragma once

#include <vector>

namespace ptcflow {

// Compressed sparse row matrix. Built from coordinate triplets; duplicates are
// summed during finalization. Column indices are sorted within each row.
struct SparseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_ptr;    // size n_rows + 1
    std::vector<int> col_idx;    // size nnz
    std::vector<double> values;  // size nnz

    static SparseMatrix from_triplets(int rows, int cols,
                                      const std::vector<int>& ti,
                                      const std::vector<int>& tj,
                                      const std::vector<double>& tv);

    int nnz() const { return static_cast<int>(col_idx.size()); }

    void multiply(const double* x, double* y) const;  // y = A x
    std::vector<double> multiply(const std::vector<double>& x) const;
    std::vector<double> multiply_transposed(const std::vector<double>& x) const;

    double frobenius_norm() const;

    // Pointer to the stored entry (i, j), or nullptr if outside the pattern.
    double* find(int i, int j);
    const double* find(int i, int j) const;

    // Adds to a stored diagonal entry; the entry must be in the pattern.
    void add_to_diagonal(int i, double value);

    // Zeroes row i and sets its diagonal to 1 (Dirichlet row).
    void set_identity_row(int i);
};

}  // namespace ptcflow
