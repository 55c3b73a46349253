#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qflow {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Largest operator dimension any dense routine will materialize unless told otherwise.
inline constexpr std::int64_t kDefaultDenseCap = 4096;

struct Wire {
    int id;
    int dim;
};

/// Ordered list of wires. The first wire is the most significant digit of a
/// composite index, matching the ordering used by `kron`.
class WireLayout {
public:
    WireLayout() = default;
    explicit WireLayout(std::vector<Wire> wires);

    const std::vector<Wire>& wires() const noexcept { return wires_; }
    std::size_t size() const noexcept { return wires_.size(); }
    bool contains(int id) const noexcept;
    int dim(int id) const;
    /// Position of `id` in the ordering; throws for unknown ids.
    std::size_t position(int id) const;
    std::vector<int> ids() const;
    std::int64_t total_dim() const noexcept;

    /// Sub-layout of `ids`, in the order given.
    WireLayout subset(std::span<const int> ids) const;

private:
    std::vector<Wire> wires_;
};

bool is_hermitian(const CMatrix& a, double tol);
bool is_unitary(const CMatrix& a, double tol);
/// max |U†U - I| entry.
double unitarity_defect(const CMatrix& a);
bool all_finite(const CMatrix& a);

CMatrix kron(const CMatrix& a, const CMatrix& b, std::int64_t cap = kDefaultDenseCap);

/// Trace out every wire not in `keep`. The result is ordered as `keep`.
CMatrix partial_trace(const CMatrix& a, const WireLayout& layout, std::span<const int> keep);

/// Re-express `a`, an operator on `layout`, with its wires reordered as `order`.
CMatrix permute_wires(const CMatrix& a, const WireLayout& layout, std::span<const int> order);

/// v <- (op on `wires`) v, for a state vector over `layout`.
void apply_local(const CMatrix& op, const WireLayout& layout, std::span<const int> wires, CVector& v);

/// exp(-i theta g) for Hermitian g, via eigendecomposition.
CMatrix exp_hermitian(const CMatrix& g, double theta);

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of R's diagonal removed.
CMatrix haar_unitary(int dim, std::mt19937_64& rng);
CMatrix haar_unitary(int dim, std::uint64_t seed);

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE up to scale).
CMatrix random_hermitian(int dim, std::mt19937_64& rng);

/// tr(a† b).
Complex hs_inner(const CMatrix& a, const CMatrix& b);
double hs_norm(const CMatrix& a);

/// Generalized Gell-Mann basis preceded by I/sqrt(dim); orthonormal under `hs_inner`.
std::vector<CMatrix> hermitian_basis(int dim);

/// Closest unitary in Frobenius norm (polar factor).
CMatrix nearest_unitary(const CMatrix& a);

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

}  // namespace qflow
