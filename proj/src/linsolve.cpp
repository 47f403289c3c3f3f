#include "ptcflow/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <utility>

namespace ptcflow {

namespace {

struct CscPattern {
    int n = 0;
    std::vector<int> ptr;
    std::vector<int> idx;
    std::vector<double> val;
};

CscPattern to_csc(const SparseMatrix& A) {
    CscPattern C;
    C.n = A.n_cols;
    C.ptr.assign(A.n_cols + 1, 0);
    C.idx.resize(A.nnz());
    C.val.resize(A.nnz());
    for (int k = 0; k < A.nnz(); ++k) ++C.ptr[A.col_idx[k] + 1];
    for (int j = 0; j < A.n_cols; ++j) C.ptr[j + 1] += C.ptr[j];
    std::vector<int> next(C.ptr.begin(), C.ptr.end() - 1);
    for (int i = 0; i < A.n_rows; ++i) {
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int j = A.col_idx[k];
            C.idx[next[j]] = i;
            C.val[next[j]] = A.values[k];
            ++next[j];
        }
    }
    return C;
}

}  // namespace

std::vector<int> min_degree_ordering(const SparseMatrix& A) {
    const int n = A.n_rows;
    // symmetrized adjacency, self-edges dropped
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int j = A.col_idx[k];
            if (i == j) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }

    std::vector<char> alive(n, 1);
    using Entry = std::pair<int, int>;  // (degree, node)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    for (int i = 0; i < n; ++i) heap.emplace(static_cast<int>(adj[i].size()), i);

    std::vector<int> order;
    order.reserve(n);
    std::vector<int> nbrs, merged;
    while (!heap.empty()) {
        auto [deg, v] = heap.top();
        heap.pop();
        if (!alive[v]) continue;
        // lazy entry: degree may be stale
        int live_deg = 0;
        for (int u : adj[v])
            if (alive[u]) ++live_deg;
        if (live_deg != deg) {
            heap.emplace(live_deg, v);
            continue;
        }
        alive[v] = 0;
        order.push_back(v);

        nbrs.clear();
        for (int u : adj[v])
            if (alive[u]) nbrs.push_back(u);
        // connect the neighbors of v into a clique
        for (int u : nbrs) {
            merged.clear();
            auto& au = adj[u];
            std::size_t a = 0, b = 0;
            while (a < au.size() || b < nbrs.size()) {
                int x = a < au.size() ? au[a] : std::numeric_limits<int>::max();
                int y = b < nbrs.size() ? nbrs[b] : std::numeric_limits<int>::max();
                int pick;
                if (x < y) {
                    pick = x;
                    ++a;
                } else if (y < x) {
                    pick = y;
                    ++b;
                } else {
                    pick = x;
                    ++a;
                    ++b;
                }
                if (pick != u && alive[pick]) merged.push_back(pick);
            }
            au.swap(merged);
            heap.emplace(static_cast<int>(au.size()), u);
        }
        adj[v].clear();
        adj[v].shrink_to_fit();
    }
    return order;
}

Factorization::Factorization(const SparseMatrix& A, double pivot_threshold) {
    if (A.n_rows != A.n_cols) throw std::invalid_argument("factorize: matrix not square");
    n_ = A.n_rows;
    const CscPattern C = to_csc(A);
    q_ = min_degree_ordering(A);

    double a_max = 0.0;
    for (double v : A.values) a_max = std::max(a_max, std::abs(v));

    const std::size_t guess = std::max<std::size_t>(16, 4 * std::size_t(A.nnz()) + n_);
    l_ptr_.assign(n_ + 1, 0);
    u_ptr_.assign(n_ + 1, 0);
    l_idx_.reserve(guess);
    l_val_.reserve(guess);
    u_idx_.reserve(guess);
    u_val_.reserve(guess);

    pinv_.assign(n_, -1);
    std::vector<double> x(n_, 0.0);
    std::vector<int> pattern;       // topological pattern of the current column
    std::vector<int> stack, pstack;  // DFS work
    std::vector<char> marked(n_, 0);

    double u_max = 0.0;
    for (int k = 0; k < n_; ++k) {
        const int col = q_[k];

        // reach: DFS from the rows of A(:,col) through the finished part of L
        pattern.clear();
        for (int p = C.ptr[col]; p < C.ptr[col + 1]; ++p) {
            int root = C.idx[p];
            if (marked[root]) continue;
            stack.clear();
            pstack.clear();
            stack.push_back(root);
            pstack.push_back(pinv_[root] >= 0 ? l_ptr_[pinv_[root]] + 1 : 0);
            marked[root] = 1;
            while (!stack.empty()) {
                const int j = stack.back();
                const int jcol = pinv_[j];
                bool descended = false;
                if (jcol >= 0) {
                    int& pp = pstack.back();
                    while (pp < l_ptr_[jcol + 1]) {
                        const int child = l_idx_[pp++];
                        if (!marked[child]) {
                            marked[child] = 1;
                            stack.push_back(child);
                            pstack.push_back(pinv_[child] >= 0 ? l_ptr_[pinv_[child]] + 1 : 0);
                            descended = true;
                            break;
                        }
                    }
                }
                if (!descended) {
                    pattern.push_back(j);
                    stack.pop_back();
                    pstack.pop_back();
                }
            }
        }
        // pattern is in reverse topological order; process from the back
        for (int p = C.ptr[col]; p < C.ptr[col + 1]; ++p) x[C.idx[p]] = C.val[p];
        for (auto it = pattern.rbegin(); it != pattern.rend(); ++it) {
            const int j = *it;
            const int jcol = pinv_[j];
            if (jcol < 0) continue;
            const double xj = x[j];  // L has unit diagonal
            for (int p = l_ptr_[jcol] + 1; p < l_ptr_[jcol + 1]; ++p)
                x[l_idx_[p]] -= l_val_[p] * xj;
        }

        // threshold partial pivoting among not-yet-pivotal rows
        int ipiv = -1;
        double best = 0.0;
        for (int j : pattern) {
            if (pinv_[j] >= 0) continue;
            const double a = std::abs(x[j]);
            if (a > best) {
                best = a;
                ipiv = j;
            }
        }
        if (ipiv < 0 || best == 0.0) {
            for (int j : pattern) {
                marked[j] = 0;
                x[j] = 0.0;
            }
            throw SingularMatrixError(k, "factorize: structurally or numerically singular at column " +
                                             std::to_string(k));
        }
        if (pinv_[col] < 0 && std::abs(x[col]) >= pivot_threshold * best) ipiv = col;
        const double pivot = x[ipiv];
        pinv_[ipiv] = k;

        // U(:,k): finished rows, then the diagonal last
        for (auto it = pattern.rbegin(); it != pattern.rend(); ++it) {
            const int j = *it;
            if (pinv_[j] < 0 || j == ipiv) continue;
            u_idx_.push_back(pinv_[j]);
            u_val_.push_back(x[j]);
            u_max = std::max(u_max, std::abs(x[j]));
        }
        u_idx_.push_back(k);
        u_val_.push_back(pivot);
        u_max = std::max(u_max, std::abs(pivot));
        u_ptr_[k + 1] = static_cast<int>(u_idx_.size());

        // L(:,k): unit diagonal first, entries keep original row ids for now
        l_idx_.push_back(ipiv);
        l_val_.push_back(1.0);
        for (int j : pattern) {
            if (pinv_[j] < 0) {
                l_idx_.push_back(j);
                l_val_.push_back(x[j] / pivot);
            }
            marked[j] = 0;
            x[j] = 0.0;
        }
        l_ptr_[k + 1] = static_cast<int>(l_idx_.size());
    }
    for (int& i : l_idx_) i = pinv_[i];
    pivot_growth_ = a_max > 0.0 ? u_max / a_max : 0.0;
}

std::vector<double> Factorization::solve(const std::vector<double>& b) const {
    if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("solve: dimension mismatch");
    std::vector<double> y(n_);
    for (int r = 0; r < n_; ++r) y[pinv_[r]] = b[r];
    // L y = P b (unit lower, diagonal stored first in each column)
    for (int j = 0; j < n_; ++j) {
        const double yj = y[j];
        if (yj == 0.0) continue;
        for (int p = l_ptr_[j] + 1; p < l_ptr_[j + 1]; ++p) y[l_idx_[p]] -= l_val_[p] * yj;
    }
    // U z = y (diagonal stored last in each column)
    for (int k = n_ - 1; k >= 0; --k) {
        const int dp = u_ptr_[k + 1] - 1;
        const double zk = y[k] / u_val_[dp];
        y[k] = zk;
        if (zk == 0.0) continue;
        for (int p = u_ptr_[k]; p < dp; ++p) y[u_idx_[p]] -= u_val_[p] * zk;
    }
    std::vector<double> xout(n_);
    for (int k = 0; k < n_; ++k) xout[q_[k]] = y[k];
    return xout;
}

std::vector<double> Factorization::solve_transposed(const std::vector<double>& b) const {
    if (static_cast<int>(b.size()) != n_)
        throw std::invalid_argument("solve_transposed: dimension mismatch");
    std::vector<double> w(n_);
    for (int k = 0; k < n_; ++k) w[k] = b[q_[k]];
    // U^T s = w: ascending, using columns of U as rows of U^T
    for (int k = 0; k < n_; ++k) {
        const int dp = u_ptr_[k + 1] - 1;
        double s = w[k];
        for (int p = u_ptr_[k]; p < dp; ++p) s -= u_val_[p] * w[u_idx_[p]];
        w[k] = s / u_val_[dp];
    }
    // L^T t = s: descending, unit diagonal
    for (int k = n_ - 1; k >= 0; --k) {
        double t = w[k];
        for (int p = l_ptr_[k] + 1; p < l_ptr_[k + 1]; ++p) t -= l_val_[p] * w[l_idx_[p]];
        w[k] = t;
    }
    std::vector<double> xout(n_);
    for (int r = 0; r < n_; ++r) xout[r] = w[pinv_[r]];
    return xout;
}

}  // namespace ptcflow
