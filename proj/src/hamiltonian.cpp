#include "qflow/hamiltonian.hpp"

#include <algorithm>
#include <numeric>

#include "qflow/error.hpp"

namespace qflow {

std::string to_string(Boundary b) { return b == Boundary::Open ? "open" : "periodic"; }

Boundary parse_boundary(const std::string& s) {
    if (s == "open") return Boundary::Open;
    if (s == "periodic" || s == "ring" || s == "closed") return Boundary::Periodic;
    throw InvalidArgument("unknown boundary \"" + s + "\" (expected \"open\" or \"periodic\")");
}

LocalTerm make_term(CMatrix op, std::vector<int> sites, int n_sites) {
    const auto k = sites.size();
    if (k == 0) throw InvalidArgument("term support is empty");
    if (op.rows() != (Eigen::Index{1} << k) || op.cols() != op.rows())
        throw InvalidArgument("term matrix dimension does not match 2^|support|");
    if (!is_hermitian(op, 1e-12)) throw InvalidArgument("term matrix is not Hermitian");
    for (int s : sites)
        if (s < 1 || s > n_sites) throw InvalidArgument("term site " + std::to_string(s) + " outside [1, N]");

    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return sites[a] < sites[b]; });
    for (std::size_t i = 1; i < k; ++i)
        if (sites[order[i]] == sites[order[i - 1]]) throw InvalidArgument("term support repeats a site");

    std::vector<int> sorted(k);
    for (std::size_t i = 0; i < k; ++i) sorted[i] = sites[order[i]];
    if (!std::is_sorted(sites.begin(), sites.end())) {
        // reorder the tensor legs: wire i of the layout is the i-th listed site
        std::vector<Wire> w(k);
        for (std::size_t i = 0; i < k; ++i) w[i] = Wire{static_cast<int>(i), 2};
        op = permute_wires(op, WireLayout(w), order);
    }
    return LocalTerm{std::move(op), std::move(sorted)};
}

namespace {

std::vector<std::pair<int, int>> bonds(int n, Boundary boundary) {
    std::vector<std::pair<int, int>> out;
    for (int s = 1; s < n; ++s) out.emplace_back(s, s + 1);
    if (boundary == Boundary::Periodic) out.emplace_back(n, 1);
    return out;
}

void require_sites(int n) {
    if (n < 2) throw InvalidArgument("chain needs at least 2 sites");
}

}  // namespace

Hamiltonian heisenberg(int n, double j_coupling, Boundary boundary) {
    require_sites(n);
    const CMatrix bond = -(j_coupling / 2.0) * (kron(pauli::x(), pauli::x()) + kron(pauli::y(), pauli::y()) +
                                                kron(pauli::z(), pauli::z()));
    Hamiltonian h;
    h.n_sites = n;
    h.boundary = boundary;
    h.coupling = j_coupling;
    h.model = "heisenberg";
    for (auto [a, b] : bonds(n, boundary)) h.terms.push_back(make_term(bond, {a, b}, n));
    return h;
}

Hamiltonian ising_critical(int n, Boundary boundary) {
    require_sites(n);
    const CMatrix coupling = -0.5 * kron(pauli::x(), pauli::x());
    const CMatrix field = -0.5 * pauli::z();
    Hamiltonian h;
    h.n_sites = n;
    h.boundary = boundary;
    h.model = "ising";
    for (auto [a, b] : bonds(n, boundary)) h.terms.push_back(make_term(coupling, {a, b}, n));
    for (int s = 1; s <= n; ++s) h.terms.push_back(make_term(field, {s}, n));
    return h;
}

Hamiltonian custom_hamiltonian(int n, Boundary boundary, std::vector<LocalTerm> terms) {
    if (n < 1) throw InvalidArgument("custom Hamiltonian needs at least one site");
    for (const auto& t : terms)
        for (int s : t.support)
            if (s < 1 || s > n) throw InvalidArgument("term site outside [1, N]");
    Hamiltonian h;
    h.n_sites = n;
    h.boundary = boundary;
    h.terms = std::move(terms);
    h.model = "custom";
    return h;
}

std::pair<double, double> ground_energy_bounds(const Hamiltonian& h) {
    double lo = 0.0, hi = 0.0;
    for (const auto& t : h.terms) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(t.op, Eigen::EigenvaluesOnly);
        lo += eig.eigenvalues().minCoeff();
        hi += eig.eigenvalues().maxCoeff();
    }
    return {lo, hi};
}

}  // namespace qflow
