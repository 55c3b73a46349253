#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qflow/error.hpp"
#include "qflow/linalg.hpp"

using namespace qflow;

namespace {

CMatrix random_matrix(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m;
}

CMatrix projector(const CVector& v) { return v * v.adjoint(); }

WireLayout two_qubits() { return WireLayout({{1, 2}, {2, 2}}); }

}  // namespace

TEST(Layout, RejectsBadWires) {
    EXPECT_THROW(WireLayout({{1, 1}}), InvalidArgument);
    EXPECT_THROW(WireLayout({{1, 2}, {1, 3}}), InvalidArgument);
    WireLayout l({{4, 3}, {7, 2}});
    EXPECT_EQ(l.total_dim(), 6);
    EXPECT_EQ(l.position(7), 1u);
    EXPECT_THROW(l.dim(5), InvalidArgument);
}

TEST(Kron, IdentityAndBitFlip) {
    EXPECT_TRUE(kron(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)).isApprox(CMatrix::Identity(4, 4)));
    CVector zero = CVector::Zero(4);
    zero(0) = 1;
    CVector out = kron(pauli::x(), pauli::identity()) * zero;
    EXPECT_NEAR(std::abs(out(2) - Complex(1)), 0.0, 1e-15);
    EXPECT_NEAR(out.norm(), 1.0, 1e-15);
}

TEST(Kron, TraceFactorizes) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        CMatrix a = random_matrix(2, rng), b = random_matrix(2, rng);
        EXPECT_NEAR(std::abs(kron(a, b).trace() - a.trace() * b.trace()), 0.0, 1e-12);
    }
}

TEST(Kron, CapIsEnforced) {
    EXPECT_THROW(kron(CMatrix::Identity(64, 64), CMatrix::Identity(128, 128)), DimensionError);
}

TEST(PartialTrace, ProductAndMixed) {
    CVector zz = CVector::Zero(4);
    zz(0) = 1;
    const int keep1[] = {1};
    CMatrix r = partial_trace(projector(zz), two_qubits(), keep1);
    CMatrix expect = CMatrix::Zero(2, 2);
    expect(0, 0) = 1;
    EXPECT_TRUE(r.isApprox(expect));

    const int keep2[] = {2};
    CMatrix mixed = partial_trace(CMatrix::Identity(4, 4) / 4.0, two_qubits(), keep2);
    EXPECT_TRUE(mixed.isApprox(CMatrix::Identity(2, 2) / 2.0));
}

TEST(PartialTrace, BellState) {
    CVector phi = CVector::Zero(4);
    phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
    const int keep[] = {1};
    CMatrix r = partial_trace(projector(phi), two_qubits(), keep);
    EXPECT_LT((r - CMatrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PartialTrace, LinearAndTracePreserving) {
    std::mt19937_64 rng(2);
    WireLayout l({{0, 3}, {1, 2}, {2, 2}});
    const int keep[] = {2, 0};
    for (int i = 0; i < 20; ++i) {
        CMatrix a = random_matrix(12, rng), b = random_matrix(12, rng);
        Complex al(0.3, -1.2), be(2.0, 0.5);
        CMatrix lhs = partial_trace(al * a + be * b, l, keep);
        CMatrix rhs = al * partial_trace(a, l, keep) + be * partial_trace(b, l, keep);
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(std::abs(partial_trace(a, l, keep).trace() - a.trace()), 0.0, 1e-12);
    }
    const int bad[] = {9};
    EXPECT_THROW(partial_trace(CMatrix::Identity(12, 12), l, bad), InvalidArgument);
}

TEST(PartialTrace, KeepOrderFollowsArgument) {
    std::mt19937_64 rng(3);
    CMatrix a = random_matrix(2, rng), b = random_matrix(3, rng);
    WireLayout l({{0, 2}, {1, 3}});
    const int keep[] = {1, 0};
    CMatrix r = partial_trace(kron(a, b), l, keep);
    EXPECT_LT((r - kron(b, a)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PermuteWires, SwapsFactors) {
    std::mt19937_64 rng(4);
    CMatrix a = random_matrix(3, rng), b = random_matrix(2, rng);
    WireLayout l({{5, 3}, {6, 2}});
    const int order[] = {6, 5};
    EXPECT_LT((permute_wires(kron(a, b), l, order) - kron(b, a)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ApplyLocal, MatchesEmbeddedOperator) {
    std::mt19937_64 rng(5);
    WireLayout l({{0, 2}, {1, 2}, {2, 2}});
    CMatrix op = random_matrix(4, rng);
    CVector v = CVector::Random(8);
    CVector w = v;
    const int wires[] = {0, 2};
    apply_local(op, l, wires, w);
    const int order[] = {0, 2, 1};
    CMatrix full = permute_wires(kron(op, CMatrix::Identity(2, 2)), l.subset(order), std::vector<int>{0, 1, 2});
    EXPECT_LT((full * v - w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExpHermitian, KnownValues) {
    CMatrix e = exp_hermitian(pauli::x(), std::numbers::pi);
    EXPECT_LT((e + CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);

    std::mt19937_64 rng(6);
    CMatrix h = random_hermitian(5, rng);
    EXPECT_LT((exp_hermitian(h, 0.0) - CMatrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-14);

    CMatrix z = exp_hermitian(pauli::z(), std::numbers::pi / 2);
    EXPECT_NEAR(std::abs(z(0, 0) - std::polar(1.0, -std::numbers::pi / 2)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(z(1, 1) - std::polar(1.0, std::numbers::pi / 2)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(z(0, 1)), 0.0, 1e-15);
}

TEST(ExpHermitian, OneParameterGroup) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
        CMatrix g = random_hermitian(6, rng);
        CMatrix u = exp_hermitian(g, 0.3) * exp_hermitian(g, -1.1);
        EXPECT_LT((u - exp_hermitian(g, -0.8)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_TRUE(is_unitary(u, 1e-10));
    }
}

TEST(ExpHermitian, RejectsNonHermitian) {
    EXPECT_THROW(exp_hermitian(pauli::x() * Complex(0, 1) + pauli::z(), 1.0), InvalidArgument);
}

TEST(Haar, UnitaryAndDeterministic) {
    CMatrix u = haar_unitary(4, 99);
    EXPECT_LT((u.adjoint() * u - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(u, haar_unitary(4, 99));
    EXPECT_NE(u, haar_unitary(4, 100));
}

TEST(Haar, SecondMoment) {
    std::mt19937_64 rng(8);
    const int samples = 10000;
    double mean = 0.0;
    for (int s = 0; s < samples; ++s) mean += haar_unitary(4, rng).cwiseAbs2().sum() / 16.0;
    mean /= samples;
    EXPECT_NEAR(mean, 0.25, 1e-12);  // rows are unit vectors

    double e00 = 0.0, e00sq = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double v = std::norm(haar_unitary(4, rng)(1, 2));
        e00 += v;
        e00sq += v * v;
    }
    e00 /= samples;
    const double sd = std::sqrt(e00sq / samples - e00 * e00) / std::sqrt(double(samples));
    EXPECT_NEAR(e00, 0.25, 5 * sd);
}

TEST(HsInner, Paulis) {
    EXPECT_NEAR(std::abs(hs_inner(pauli::x(), pauli::x()) - Complex(2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(hs_inner(pauli::x(), pauli::z())), 0.0, 1e-15);
    EXPECT_THROW(hs_inner(pauli::x(), CMatrix::Identity(3, 3)), DimensionError);
}

TEST(HsInner, ElementwiseOracle) {
    std::mt19937_64 rng(9);
    CMatrix a = random_matrix(4, rng), b = random_matrix(4, rng);
    Complex s = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) s += std::conj(a(i, j)) * b(i, j);
    EXPECT_NEAR(std::abs(hs_inner(a, b) - s), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(hs_inner(a, b) - std::conj(hs_inner(b, a))), 0.0, 1e-12);
    EXPECT_NEAR(hs_inner(a, a).imag(), 0.0, 1e-15);
    EXPECT_GE(hs_inner(a, a).real(), 0.0);
}

TEST(HermitianBasis, QubitIsPaulis) {
    auto b = hermitian_basis(2);
    ASSERT_EQ(b.size(), 4u);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_TRUE(b[0].isApprox(pauli::identity() * r));
    bool has_x = false, has_y = false, has_z = false;
    for (const auto& m : b) {
        has_x |= m.isApprox(pauli::x() * r);
        has_y |= m.isApprox(pauli::y() * r);
        has_z |= m.isApprox(pauli::z() * r);
    }
    EXPECT_TRUE(has_x && has_y && has_z);
}

TEST(HermitianBasis, OrthonormalAndComplete) {
    std::mt19937_64 rng(10);
    for (int dim : {2, 3, 4, 8}) {
        auto b = hermitian_basis(dim);
        ASSERT_EQ(b.size(), static_cast<std::size_t>(dim * dim));
        for (std::size_t i = 0; i < b.size(); ++i) {
            EXPECT_TRUE(is_hermitian(b[i], 1e-14));
            for (std::size_t k = 0; k < b.size(); ++k)
                EXPECT_NEAR(std::abs(hs_inner(b[i], b[k]) - Complex(i == k ? 1.0 : 0.0)), 0.0, 1e-12);
        }
        CMatrix h = random_hermitian(dim, rng);
        CMatrix rec = CMatrix::Zero(dim, dim);
        for (const auto& m : b) rec += hs_inner(m, h) * m;
        EXPECT_LT((rec - h).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(NearestUnitary, RepairsDrift) {
    CMatrix u = haar_unitary(6, 3);
    CMatrix drifted = u + 1e-6 * CMatrix::Ones(6, 6);
    EXPECT_GT(unitarity_defect(drifted), 1e-8);
    CMatrix fixed = nearest_unitary(drifted);
    EXPECT_LT(unitarity_defect(fixed), 1e-13);
    EXPECT_LT((fixed - u).norm(), 1e-5);
}

TEST(Predicates, Tolerances) {
    CMatrix h = pauli::x();
    h(0, 1) += 1e-9;
    EXPECT_TRUE(is_hermitian(h, 1e-8));
    EXPECT_FALSE(is_hermitian(h, 1e-10));
    CMatrix bad = CMatrix::Identity(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(all_finite(bad));
}
