#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qflow/linalg.hpp"

namespace qflow {

enum class Boundary { Open, Periodic };

std::string to_string(Boundary b);
/// Accepts "open" and "periodic" (also "ring", "closed" for periodic). Throws InvalidArgument otherwise.
Boundary parse_boundary(const std::string& s);

/// Hermitian operator on a sorted set of spin sites (1-based).
struct LocalTerm {
    CMatrix op;
    std::vector<int> support;
};

/// Builds a LocalTerm, sorting `sites` and permuting `op` to match. Validates
/// Hermiticity, dimension and site range.
LocalTerm make_term(CMatrix op, std::vector<int> sites, int n_sites);

struct Hamiltonian {
    int n_sites = 0;
    Boundary boundary = Boundary::Open;
    std::vector<LocalTerm> terms;
    /// Heisenberg coupling; recorded for run metadata, 0 for other models.
    double coupling = 0.0;
    std::string model = "custom";
};

/// H = -(J/2) sum_j sum_k sigma^k_j sigma^k_{j+1}.
Hamiltonian heisenberg(int n, double j_coupling, Boundary boundary);

/// H = -(1/2) sum_j (sigma^x_j sigma^x_{j+1} + sigma^z_j). All n field terms
/// are kept for both boundary conditions.
Hamiltonian ising_critical(int n, Boundary boundary);

Hamiltonian custom_hamiltonian(int n, Boundary boundary, std::vector<LocalTerm> terms);

/// (sum of per-term minimum eigenvalues, sum of per-term maximum eigenvalues).
std::pair<double, double> ground_energy_bounds(const Hamiltonian& h);

}  // namespace qflow
