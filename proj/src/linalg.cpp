#include "qflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_set>

#include "qflow/error.hpp"

namespace qflow {

WireLayout::WireLayout(std::vector<Wire> wires) : wires_(std::move(wires)) {
    std::unordered_set<int> seen;
    for (const auto& w : wires_) {
        if (w.dim < 2) throw InvalidArgument("wire " + std::to_string(w.id) + " has dimension < 2");
        if (!seen.insert(w.id).second) throw InvalidArgument("duplicate wire id " + std::to_string(w.id));
    }
}

bool WireLayout::contains(int id) const noexcept {
    return std::any_of(wires_.begin(), wires_.end(), [id](const Wire& w) { return w.id == id; });
}

std::size_t WireLayout::position(int id) const {
    for (std::size_t i = 0; i < wires_.size(); ++i)
        if (wires_[i].id == id) return i;
    throw InvalidArgument("unknown wire id " + std::to_string(id));
}

int WireLayout::dim(int id) const { return wires_[position(id)].dim; }

std::vector<int> WireLayout::ids() const {
    std::vector<int> out;
    out.reserve(wires_.size());
    for (const auto& w : wires_) out.push_back(w.id);
    return out;
}

std::int64_t WireLayout::total_dim() const noexcept {
    std::int64_t d = 1;
    for (const auto& w : wires_) d *= w.dim;
    return d;
}

WireLayout WireLayout::subset(std::span<const int> ids) const {
    std::vector<Wire> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(wires_[position(id)]);
    return WireLayout(std::move(out));
}

bool all_finite(const CMatrix& a) { return a.allFinite(); }

bool is_hermitian(const CMatrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double unitarity_defect(const CMatrix& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    const CMatrix d = a.adjoint() * a - CMatrix::Identity(a.rows(), a.cols());
    return d.cwiseAbs().maxCoeff();
}

bool is_unitary(const CMatrix& a, double tol) { return unitarity_defect(a) <= tol; }

CMatrix kron(const CMatrix& a, const CMatrix& b, std::int64_t cap) {
    const std::int64_t rows = a.rows() * b.rows();
    const std::int64_t cols = a.cols() * b.cols();
    if (rows > cap || cols > cap)
        throw DimensionError("kron result " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " exceeds dense cap " + std::to_string(cap));
    CMatrix out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

// For every composite index of `layout`, the index obtained by reading the
// digits of `order` (a permutation of a subset of the layout's wires) and
// the index of the remaining digits.
struct Split {
    std::vector<Eigen::Index> head;
    std::vector<Eigen::Index> tail;
    Eigen::Index head_dim = 1;
    Eigen::Index tail_dim = 1;
};

Split split_indices(const WireLayout& layout, std::span<const int> head_ids) {
    const std::size_t n = layout.size();
    std::vector<int> dims(n);
    for (std::size_t p = 0; p < n; ++p) dims[p] = layout.wires()[p].dim;

    std::vector<bool> in_head(n, false);
    std::vector<std::size_t> head_pos;
    head_pos.reserve(head_ids.size());
    for (int id : head_ids) {
        const auto p = layout.position(id);
        if (in_head[p]) throw InvalidArgument("wire " + std::to_string(id) + " listed twice");
        in_head[p] = true;
        head_pos.push_back(p);
    }
    std::vector<std::size_t> tail_pos;
    for (std::size_t p = 0; p < n; ++p)
        if (!in_head[p]) tail_pos.push_back(p);

    // Strides of each layout position inside the head / tail composite index.
    std::vector<Eigen::Index> head_stride(n, 0), tail_stride(n, 0);
    Split s;
    for (auto it = head_pos.rbegin(); it != head_pos.rend(); ++it) {
        head_stride[*it] = s.head_dim;
        s.head_dim *= dims[*it];
    }
    for (auto it = tail_pos.rbegin(); it != tail_pos.rend(); ++it) {
        tail_stride[*it] = s.tail_dim;
        s.tail_dim *= dims[*it];
    }

    const Eigen::Index total = s.head_dim * s.tail_dim;
    s.head.assign(total, 0);
    s.tail.assign(total, 0);
    std::vector<int> digit(n, 0);
    for (Eigen::Index t = 0; t < total; ++t) {
        Eigen::Index h = 0, r = 0;
        for (std::size_t p = 0; p < n; ++p) {
            h += digit[p] * head_stride[p];
            r += digit[p] * tail_stride[p];
        }
        s.head[t] = h;
        s.tail[t] = r;
        for (std::size_t p = n; p-- > 0;) {
            if (++digit[p] < dims[p]) break;
            digit[p] = 0;
        }
    }
    return s;
}

}  // namespace

CMatrix partial_trace(const CMatrix& a, const WireLayout& layout, std::span<const int> keep) {
    if (a.rows() != a.cols() || a.rows() != layout.total_dim())
        throw DimensionError("partial_trace: operator dimension does not match layout");
    const Split s = split_indices(layout, keep);
    // position of (head, tail) pairs in the composite index
    std::vector<Eigen::Index> at(s.head.size());
    for (std::size_t t = 0; t < s.head.size(); ++t) at[s.head[t] * s.tail_dim + s.tail[t]] = t;

    CMatrix out = CMatrix::Zero(s.head_dim, s.head_dim);
    for (Eigen::Index i = 0; i < s.head_dim; ++i)
        for (Eigen::Index j = 0; j < s.head_dim; ++j) {
            Complex acc = 0.0;
            for (Eigen::Index r = 0; r < s.tail_dim; ++r) acc += a(at[i * s.tail_dim + r], at[j * s.tail_dim + r]);
            out(i, j) = acc;
        }
    return out;
}

CMatrix permute_wires(const CMatrix& a, const WireLayout& layout, std::span<const int> order) {
    if (order.size() != layout.size()) throw InvalidArgument("permute_wires: order must list every wire");
    if (a.rows() != layout.total_dim() || a.cols() != layout.total_dim())
        throw DimensionError("permute_wires: operator dimension does not match layout");
    const Split s = split_indices(layout, order);
    const auto n = static_cast<Eigen::Index>(s.head.size());
    CMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(s.head[i], s.head[j]) = a(i, j);
    return out;
}

void apply_local(const CMatrix& op, const WireLayout& layout, std::span<const int> wires, CVector& v) {
    if (v.size() != layout.total_dim()) throw DimensionError("apply_local: vector dimension does not match layout");
    const Split s = split_indices(layout, wires);
    if (op.rows() != s.head_dim || op.cols() != s.head_dim)
        throw DimensionError("apply_local: operator dimension does not match its wires");
    std::vector<Eigen::Index> at(s.head.size());
    for (std::size_t t = 0; t < s.head.size(); ++t) at[s.head[t] * s.tail_dim + s.tail[t]] = t;
    CVector sub(s.head_dim);
    for (Eigen::Index r = 0; r < s.tail_dim; ++r) {
        for (Eigen::Index h = 0; h < s.head_dim; ++h) sub(h) = v(at[h * s.tail_dim + r]);
        const CVector out = op * sub;
        for (Eigen::Index h = 0; h < s.head_dim; ++h) v(at[h * s.tail_dim + r]) = out(h);
    }
}

CMatrix exp_hermitian(const CMatrix& g, double theta) {
    if (!is_hermitian(g, 1e-10)) throw InvalidArgument("exp_hermitian: generator is not Hermitian");
    if (theta == 0.0) return CMatrix::Identity(g.rows(), g.cols());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (g + g.adjoint()));
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    Eigen::VectorXcd phase(lambda.size());
    for (Eigen::Index k = 0; k < lambda.size(); ++k) phase(k) = std::polar(1.0, -theta * lambda(k));
    const CMatrix& v = eig.eigenvectors();
    return v * phase.asDiagonal() * v.adjoint();
}

CMatrix haar_unitary(int dim, std::mt19937_64& rng) {
    if (dim < 1) throw InvalidArgument("haar_unitary: dim must be positive");
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
    CMatrix z(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            z(i, j) = Complex(re, im);
        }
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ() * CMatrix::Identity(dim, dim);
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < dim; ++k) {
        const double mag = std::abs(r(k, k));
        if (mag > 0) q.col(k) *= r(k, k) / mag;
    }
    return q;
}

CMatrix haar_unitary(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return haar_unitary(dim, rng);
}

CMatrix random_hermitian(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    CMatrix a(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            a(i, j) = Complex(re, im);
        }
    return 0.5 * (a + a.adjoint());
}

Complex hs_inner(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("hs_inner: dimension mismatch");
    return (a.conjugate().cwiseProduct(b)).sum();
}

double hs_norm(const CMatrix& a) { return a.norm(); }

std::vector<CMatrix> hermitian_basis(int dim) {
    if (dim < 2) throw InvalidArgument("hermitian_basis: dim must be at least 2");
    std::vector<CMatrix> basis;
    basis.reserve(static_cast<std::size_t>(dim) * dim);
    basis.push_back(CMatrix::Identity(dim, dim) / std::sqrt(static_cast<double>(dim)));
    const double s = 1.0 / std::numbers::sqrt2;
    for (int j = 0; j < dim; ++j)
        for (int k = j + 1; k < dim; ++k) {
            CMatrix sym = CMatrix::Zero(dim, dim);
            sym(j, k) = s;
            sym(k, j) = s;
            basis.push_back(sym);
            CMatrix anti = CMatrix::Zero(dim, dim);
            anti(j, k) = Complex(0, -s);
            anti(k, j) = Complex(0, s);
            basis.push_back(anti);
        }
    for (int l = 1; l < dim; ++l) {
        CMatrix diag = CMatrix::Zero(dim, dim);
        const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int m = 0; m < l; ++m) diag(m, m) = norm;
        diag(l, l) = -l * norm;
        basis.push_back(diag);
    }
    return basis;
}

CMatrix nearest_unitary(const CMatrix& a) {
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

namespace pauli {
CMatrix identity() { return CMatrix::Identity(2, 2); }
CMatrix x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
CMatrix y() {
    CMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
CMatrix z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
}  // namespace pauli

}  // namespace qflow
