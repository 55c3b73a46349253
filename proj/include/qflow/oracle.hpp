#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qflow/circuit.hpp"
#include "qflow/hamiltonian.hpp"
#include "qflow/linalg.hpp"

namespace qflow {

enum class SpectrumMethod { Auto, Dense, Lanczos, FreeFermion };
std::string to_string(SpectrumMethod m);

struct SpectrumResult {
    std::vector<double> lowest_eigenvalues;  ///< ascending, with multiplicity
    SpectrumMethod method = SpectrumMethod::Dense;
    double residual = 0.0;  ///< largest ||Hv - Ev|| over the returned pairs
};

inline constexpr int kDenseSpectrumMaxSites = 12;
inline constexpr int kLanczosMaxSites = 20;

/// Full 2^N x 2^N matrix of H (site 1 is the most significant bit).
CMatrix full_hamiltonian_matrix(const Hamiltonian& h);

/// y = H x, term by term, without forming H.
void apply_hamiltonian(const Hamiltonian& h, const CVector& x, CVector& y);

/// k lowest eigenvalues. Auto uses the dense path up to 10 sites and Lanczos above;
/// FreeFermion serves the critical Ising model with k = 1 only.
SpectrumResult exact_spectrum(const Hamiltonian& h, int k = 2, SpectrumMethod method = SpectrumMethod::Auto);

struct LanczosOptions {
    double tol = 1e-10;
    int max_iter = 500;
    std::uint64_t seed = 7;
};
/// Lanczos with full reorthogonalization; eigenpairs are found one at a time with the
/// converged vectors projected out, so degenerate levels come back with their multiplicity.
SpectrumResult lanczos_spectrum(const Hamiltonian& h, int k, LanczosOptions options = {});

/// Exact ground energy of ising_critical(n, boundary) via Jordan-Wigner free fermions.
double ising_free_fermion_energy(int n, Boundary boundary);

/// <psi|H (x) 1_anc|psi> with psi = U|0> built densely.
double dense_energy(const Circuit& c, const Hamiltonian& h, std::int64_t cap = kDefaultDenseCap);

/// F_j as a literal partial trace of (U_j..U_1)|0><0| U† H (U_M..U_{j+1}).
CMatrix dense_f(const Circuit& c, const Hamiltonian& h, int j, std::int64_t cap = 1024);

/// Re <0| U† H (U_M..U_{j+1}) B (U_j..U_1) |0> for every element B of hermitian_basis.
std::vector<double> dense_gamma(const Circuit& c, const Hamiltonian& h, int j, std::int64_t cap = 1024);

}  // namespace qflow
