#include "ptcflow/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ptcflow {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         const std::vector<int>& ti,
                                         const std::vector<int>& tj,
                                         const std::vector<double>& tv) {
    if (ti.size() != tj.size() || ti.size() != tv.size())
        throw std::invalid_argument("from_triplets: array length mismatch");

    const std::size_t nt = ti.size();
    std::vector<std::size_t> order(nt);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ti[a] != ti[b]) return ti[a] < ti[b];
        return tj[a] < tj[b];
    });

    SparseMatrix m;
    m.n_rows = rows;
    m.n_cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    m.col_idx.reserve(nt);
    m.values.reserve(nt);

    int last_i = -1, last_j = -1;
    for (std::size_t k = 0; k < nt; ++k) {
        const int i = ti[order[k]];
        const int j = tj[order[k]];
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw std::invalid_argument("from_triplets: index out of range");
        if (i == last_i && j == last_j) {
            m.values.back() += tv[order[k]];
        } else {
            m.col_idx.push_back(j);
            m.values.push_back(tv[order[k]]);
            ++m.row_ptr[i + 1];
            last_i = i;
            last_j = j;
        }
    }
    for (int i = 0; i < rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

void SparseMatrix::multiply(const double* x, double* y) const {
    for (int i = 0; i < n_rows; ++i) {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * x[col_idx[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_cols)
        throw std::invalid_argument("multiply: dimension mismatch");
    std::vector<double> y(n_rows);
    multiply(x.data(), y.data());
    return y;
}

std::vector<double> SparseMatrix::multiply_transposed(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_rows)
        throw std::invalid_argument("multiply_transposed: dimension mismatch");
    std::vector<double> y(n_cols, 0.0);
    for (int i = 0; i < n_rows; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) y[col_idx[k]] += values[k] * x[i];
    return y;
}

double SparseMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

double* SparseMatrix::find(int i, int j) {
    if (i < 0 || i >= n_rows) return nullptr;
    auto begin = col_idx.begin() + row_ptr[i];
    auto end = col_idx.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return nullptr;
    return &values[static_cast<std::size_t>(it - col_idx.begin())];
}

const double* SparseMatrix::find(int i, int j) const {
    return const_cast<SparseMatrix*>(this)->find(i, j);
}

void SparseMatrix::add_to_diagonal(int i, double value) {
    double* p = find(i, i);
    if (!p) throw std::invalid_argument("add_to_diagonal: diagonal entry not in pattern");
    *p += value;
}

void SparseMatrix::set_identity_row(int i) {
    bool have_diag = false;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        if (col_idx[k] == i) {
            values[k] = 1.0;
            have_diag = true;
        } else {
            values[k] = 0.0;
        }
    }
    if (!have_diag) throw std::invalid_argument("set_identity_row: diagonal entry not in pattern");
}

}  // namespace ptcflow
