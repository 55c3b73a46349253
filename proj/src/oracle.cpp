#include "qflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qflow/error.hpp"

namespace qflow {

std::string to_string(SpectrumMethod m) {
    switch (m) {
        case SpectrumMethod::Auto: return "auto";
        case SpectrumMethod::Dense: return "dense";
        case SpectrumMethod::Lanczos: return "lanczos";
        case SpectrumMethod::FreeFermion: return "free-fermion";
    }
    return "auto";
}

namespace {

// Offsets of the local basis states of a term inside the 2^n computational basis.
struct TermIndex {
    std::vector<Eigen::Index> spread;
    Eigen::Index mask = 0;

    TermIndex(const std::vector<int>& sites, int n) {
        const std::size_t k = sites.size();
        spread.assign(std::size_t{1} << k, 0);
        for (std::size_t a = 0; a < spread.size(); ++a)
            for (std::size_t p = 0; p < k; ++p)
                if (a >> (k - 1 - p) & 1) spread[a] |= Eigen::Index{1} << (n - sites[p]);
        for (int s : sites) mask |= Eigen::Index{1} << (n - s);
    }
};

bool real_hamiltonian(const Hamiltonian& h) {
    return std::all_of(h.terms.begin(), h.terms.end(),
                       [](const LocalTerm& t) { return t.op.imag().cwiseAbs().maxCoeff() == 0.0; });
}

template <typename T>
class TermApplier {
public:
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    explicit TermApplier(const Hamiltonian& h) : n_(h.n_sites) {
        for (const auto& t : h.terms) {
            index_.emplace_back(t.support, n_);
            if constexpr (std::is_same_v<T, double>)
                ops_.push_back(t.op.real());
            else
                ops_.push_back(t.op);
        }
    }

    void apply(const Vec& x, Vec& y) const {
        const Eigen::Index dim = Eigen::Index{1} << n_;
        y.setZero(dim);
        for (std::size_t t = 0; t < ops_.size(); ++t) {
            const auto& idx = index_[t];
            const Mat& op = ops_[t];
            const auto dl = static_cast<Eigen::Index>(idx.spread.size());
            Vec local(dl);
            Vec out(dl);
            for (Eigen::Index base = 0; base < dim; ++base) {
                if (base & idx.mask) continue;
                for (Eigen::Index a = 0; a < dl; ++a) local(a) = x(base | idx.spread[a]);
                out.noalias() = op * local;
                for (Eigen::Index a = 0; a < dl; ++a) y(base | idx.spread[a]) += out(a);
            }
        }
    }

private:
    int n_;
    std::vector<TermIndex> index_;
    std::vector<Mat> ops_;
};

template <typename T>
SpectrumResult lanczos_impl(const Hamiltonian& h, int k, const LanczosOptions& opt) {
    using Vec = typename TermApplier<T>::Vec;
    const TermApplier<T> H(h);
    const Eigen::Index dim = Eigen::Index{1} << h.n_sites;
    if (k < 1 || k > dim) throw InvalidArgument("lanczos: k out of range");
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;

    std::vector<Vec> found;
    SpectrumResult res;
    res.method = SpectrumMethod::Lanczos;
    auto deflate = [&](Vec& v) {
        for (const auto& f : found) v -= f * f.dot(v);
    };
    for (int e = 0; e < k; ++e) {
        Vec v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
        deflate(v);
        deflate(v);
        v.normalize();
        std::vector<Vec> basis{v};
        std::vector<double> alpha, beta;
        const int limit = static_cast<int>(std::min<Eigen::Index>(opt.max_iter, dim - e));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        Vec w(dim);
        for (int m = 0;; ++m) {
            H.apply(basis[m], w);
            deflate(w);
            const double a = std::real(basis[m].dot(w));
            alpha.push_back(a);
            w -= a * basis[m];
            if (m > 0) w -= beta[m - 1] * basis[m - 1];
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& q : basis) w -= q * q.dot(w);
                deflate(w);
            }
            const double b = w.norm();
            Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), m + 1);
            Eigen::VectorXd sub = m > 0 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m))
                                        : Eigen::VectorXd();
            tri.computeFromTridiagonal(d, sub, Eigen::ComputeEigenvectors);
            const double theta = tri.eigenvalues()(0);
            const double estimate = b * std::abs(tri.eigenvectors()(m, 0));
            if (estimate < opt.tol * std::max(1.0, std::abs(theta)) || b < 1e-14 || m + 1 >= limit) break;
            beta.push_back(b);
            basis.push_back(w / b);
        }
        const Eigen::VectorXd y = tri.eigenvectors().col(0);
        Vec x = Vec::Zero(dim);
        for (std::size_t i = 0; i < basis.size(); ++i) x += y(i) * basis[i];
        deflate(x);
        x.normalize();
        H.apply(x, w);
        const double theta = std::real(x.dot(w));
        res.residual = std::max(res.residual, (w - theta * x).norm());
        res.lowest_eigenvalues.push_back(theta);
        found.push_back(std::move(x));
    }
    std::sort(res.lowest_eigenvalues.begin(), res.lowest_eigenvalues.end());
    return res;
}

SpectrumResult dense_spectrum(const Hamiltonian& h, int k) {
    if (h.n_sites > kDenseSpectrumMaxSites) throw DimensionError("dense spectrum limited to 12 sites");
    const CMatrix m = full_hamiltonian_matrix(h);
    if (k < 1 || k > m.rows()) throw InvalidArgument("exact_spectrum: k out of range");
    Eigen::VectorXd ev;
    if (real_hamiltonian(h)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.real(), Eigen::EigenvaluesOnly);
        ev = eig.eigenvalues();
    } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(m, Eigen::EigenvaluesOnly);
        ev = eig.eigenvalues();
    }
    SpectrumResult res;
    res.method = SpectrumMethod::Dense;
    res.lowest_eigenvalues.assign(ev.data(), ev.data() + k);
    return res;
}

// Sign of the Pfaffian of a real antisymmetric matrix (Parlett-Reid).
int pfaffian_sign(Eigen::MatrixXd a) {
    const Eigen::Index n = a.rows();
    int sign = 1;
    for (Eigen::Index k = 0; k + 1 < n; k += 2) {
        Eigen::Index kp;
        a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
        kp += k + 1;
        if (kp != k + 1) {
            a.row(k + 1).swap(a.row(kp));
            a.col(k + 1).swap(a.col(kp));
            sign = -sign;
        }
        if (a(k + 1, k) == 0.0) return 0;
        if (a(k, k + 1) < 0) sign = -sign;
        if (k + 2 < n) {
            const Eigen::VectorXd tau = a.row(k).tail(n - k - 2).transpose() / a(k, k + 1);
            const Eigen::VectorXd col = a.col(k + 1).tail(n - k - 2);
            a.bottomRightCorner(n - k - 2, n - k - 2) += tau * col.transpose() - col * tau.transpose();
        }
    }
    return sign;
}

struct Vacuum {
    double energy;
    double gap;
    int parity;
};

// H = (i/4) sum_ab h_ab g_a g_b over Majorana operators.
Vacuum quadratic_vacuum(const Eigen::MatrixXd& h) {
    const Eigen::Index n = h.rows() / 2;
    const CMatrix ih = Complex(0.0, 1.0) * h.cast<Complex>();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(ih, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd eps = eig.eigenvalues().tail(n);
    return Vacuum{-0.5 * eps.sum(), eps.minCoeff(), pfaffian_sign(h)};
}

}  // namespace

CMatrix full_hamiltonian_matrix(const Hamiltonian& h) {
    if (h.n_sites > kDenseSpectrumMaxSites) throw DimensionError("full matrix limited to 12 sites");
    const Eigen::Index dim = Eigen::Index{1} << h.n_sites;
    CMatrix m = CMatrix::Zero(dim, dim);
    for (const auto& t : h.terms) {
        const TermIndex idx(t.support, h.n_sites);
        const auto dl = static_cast<Eigen::Index>(idx.spread.size());
        for (Eigen::Index base = 0; base < dim; ++base) {
            if (base & idx.mask) continue;
            for (Eigen::Index b = 0; b < dl; ++b)
                for (Eigen::Index a = 0; a < dl; ++a) m(base | idx.spread[a], base | idx.spread[b]) += t.op(a, b);
        }
    }
    return m;
}

void apply_hamiltonian(const Hamiltonian& h, const CVector& x, CVector& y) { TermApplier<Complex>(h).apply(x, y); }

SpectrumResult lanczos_spectrum(const Hamiltonian& h, int k, LanczosOptions options) {
    if (h.n_sites > kLanczosMaxSites) throw DimensionError("Lanczos limited to 20 sites");
    return real_hamiltonian(h) ? lanczos_impl<double>(h, k, options) : lanczos_impl<Complex>(h, k, options);
}

SpectrumResult exact_spectrum(const Hamiltonian& h, int k, SpectrumMethod method) {
    if (method == SpectrumMethod::Auto) method = h.n_sites <= 10 ? SpectrumMethod::Dense : SpectrumMethod::Lanczos;
    switch (method) {
        case SpectrumMethod::Dense: return dense_spectrum(h, k);
        case SpectrumMethod::Lanczos: return lanczos_spectrum(h, k);
        case SpectrumMethod::FreeFermion: {
            // ground energy only
            if (h.model != "ising") throw InvalidArgument("exact_spectrum: free-fermion needs the critical Ising model");
            if (k != 1) throw InvalidArgument("exact_spectrum: free-fermion returns only the ground energy (k = 1)");
            return SpectrumResult{{ising_free_fermion_energy(h.n_sites, h.boundary)}, SpectrumMethod::FreeFermion, 0.0};
        }
        default: throw InvalidArgument("exact_spectrum: unknown method");
    }
}

double ising_free_fermion_energy(int n, Boundary boundary) {
    if (n < 2) throw InvalidArgument("ising_free_fermion_energy: n must be >= 2");
    auto couplings = [n](int parity, bool ring) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (int j = 0; j < n; ++j) {
            h(2 * j, 2 * j + 1) = 1.0;
            h(2 * j + 1, 2 * j) = -1.0;
        }
        for (int j = 0; j + 1 < n; ++j) {
            h(2 * j + 1, 2 * j + 2) = 1.0;
            h(2 * j + 2, 2 * j + 1) = -1.0;
        }
        if (ring) {
            h(2 * n - 1, 0) = -parity;
            h(0, 2 * n - 1) = parity;
        }
        return h;
    };
    if (boundary == Boundary::Open) return quadratic_vacuum(couplings(1, false)).energy;
    double best = std::numeric_limits<double>::infinity();
    for (int parity : {1, -1}) {
        const Vacuum v = quadratic_vacuum(couplings(parity, true));
        // the sector's lowest state is the vacuum when its parity fits, else one excitation above it
        const double e = v.parity == parity ? v.energy : v.energy + v.gap;
        best = std::min(best, e);
    }
    return best;
}

namespace {

void check_spins(const Circuit& c, const Hamiltonian& h) {
    if (h.n_sites != c.n_spins()) throw InvalidArgument("Hamiltonian and circuit have different spin counts");
}

CVector apply_h(const Circuit& c, const Hamiltonian& h, const CVector& psi) {
    CVector out = CVector::Zero(psi.size());
    for (const auto& t : h.terms) {
        CVector v = psi;
        std::vector<int> wires;
        for (int s : t.support) wires.push_back(c.spin_wire(s));
        apply_local(t.op, c.layout, wires, v);
        out += v;
    }
    return out;
}

void apply_gates(const Circuit& c, int from, int to, CVector& v) {
    for (int k = from; k <= to; ++k) apply_local(c.gate(k).unitary, c.layout, c.gate(k).wires, v);
}

void apply_gates_adjoint(const Circuit& c, int from, int to, CVector& v) {
    for (int k = to; k >= from; --k) apply_local(c.gate(k).unitary.adjoint(), c.layout, c.gate(k).wires, v);
}

// phi = (U_j..U_1)|0>, chi = (U_M..U_{j+1})† H U|0>
std::pair<CVector, CVector> split_states(const Circuit& c, const Hamiltonian& h, int j, std::int64_t cap) {
    check_spins(c, h);
    if (j < 1 || j > c.n_gates()) throw InvalidArgument("gate id " + std::to_string(j) + " out of range");
    const std::int64_t dim = c.layout.total_dim();
    if (dim > cap) throw DimensionError("dense oracle: dimension " + std::to_string(dim) + " exceeds cap");
    CVector phi = CVector::Zero(dim);
    phi(0) = 1.0;
    apply_gates(c, 1, j, phi);
    CVector chi = phi;
    apply_gates(c, j + 1, c.n_gates(), chi);
    chi = apply_h(c, h, chi);
    apply_gates_adjoint(c, j + 1, c.n_gates(), chi);
    return {std::move(phi), std::move(chi)};
}

}  // namespace

double dense_energy(const Circuit& c, const Hamiltonian& h, std::int64_t cap) {
    check_spins(c, h);
    const CVector psi = apply_to_state(c, cap);
    return psi.dot(apply_h(c, h, psi)).real();
}

CMatrix dense_f(const Circuit& c, const Hamiltonian& h, int j, std::int64_t cap) {
    const auto [phi, chi] = split_states(c, h, j, cap);
    const CMatrix outer = phi * chi.adjoint();
    return partial_trace(outer, c.layout, c.gate(j).wires);
}

std::vector<double> dense_gamma(const Circuit& c, const Hamiltonian& h, int j, std::int64_t cap) {
    const auto [phi, chi] = split_states(c, h, j, cap);
    std::vector<double> out;
    for (const auto& b : hermitian_basis(static_cast<int>(c.gate_dim(j)))) {
        CVector v = phi;
        apply_local(b, c.layout, c.gate(j).wires, v);
        out.push_back(chi.dot(v).real());
    }
    return out;
}

}  // namespace qflow
