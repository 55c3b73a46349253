#include <gtest/gtest.h>

#include <random>

#include "qflow/circuit.hpp"
#include "qflow/contraction.hpp"
#include "qflow/error.hpp"
#include "qflow/hamiltonian.hpp"
#include "qflow/io.hpp"
#include "qflow/oracle.hpp"

using namespace qflow;

TEST(Staircase, Shape) {
    std::mt19937_64 rng(1);
    Circuit c = build_staircase(2, 2, rng);
    ASSERT_EQ(c.n_gates(), 2);
    EXPECT_EQ(c.gate(1).unitary.rows(), 4);
    EXPECT_EQ(c.layout.dim(0), 2);
    for (auto [n, d] : {std::pair{3, 2}, {7, 5}, {12, 16}}) {
        Circuit s = build_staircase(n, d, rng);
        EXPECT_EQ(s.n_gates(), n);
        EXPECT_EQ(s.layout.size(), static_cast<std::size_t>(n + 1));
        EXPECT_EQ(s.layout.dim(0), d);
        for (int j = 1; j <= n; ++j) {
            EXPECT_EQ(s.gate(j).wires, (std::vector<int>{0, s.spin_wire(j)}));
            EXPECT_EQ(s.gate_dim(j), 2 * d);
        }
        EXPECT_EQ(s.class_tag, CircuitClass::Staircase);
        EXPECT_LT(s.max_unitarity_defect(), 1e-10);
    }
}

TEST(Staircase, Validation) {
    std::mt19937_64 rng(1);
    EXPECT_THROW(build_staircase(1, 2, rng), InvalidArgument);
    EXPECT_THROW(build_staircase(4, 1, rng), InvalidArgument);
    EXPECT_THROW(build_staircase(4, 64, rng, 64), DimensionError);
}

TEST(Mera, GateCounts) {
    std::mt19937_64 rng(2);
    EXPECT_EQ(build_mera(2, Boundary::Open, rng).n_gates(), 1);
    auto open4 = count_gates(build_mera(4, Boundary::Open, rng));
    EXPECT_EQ(open4.isometries, 3);
    EXPECT_EQ(open4.disentanglers, 1);
    auto ring32 = count_gates(build_mera(32, Boundary::Periodic, rng));
    EXPECT_EQ(ring32.isometries, 31);
    EXPECT_EQ(ring32.disentanglers, 30);
    EXPECT_EQ(ring32.total, 61);
    EXPECT_EQ(build_mera(32, Boundary::Open, rng).n_gates(), 57);
    EXPECT_THROW(build_mera(12, Boundary::Open, rng), InvalidArgument);
}

TEST(Mera, ConeWidthBounded) {
    std::mt19937_64 rng(3);
    for (int n : {4, 8, 16, 32, 64})
        for (auto b : {Boundary::Open, Boundary::Periodic}) {
            Circuit c = build_mera(n, b, rng);
            auto h = heisenberg(n, 1.0, b);
            for (const auto& t : h.terms) {
                auto plan = plan_standard(c, t);
                EXPECT_LE(plan.max_intermediate_dim, 64) << "n=" << n;
                for (const auto& st : plan.steps) EXPECT_LE(st.support.size(), 6u);
            }
        }
}

TEST(Mera, ConeWidthPerLayer) {
    std::mt19937_64 rng(4);
    for (int n : {4, 8, 16, 32, 64}) {
        Circuit c = build_mera(n, Boundary::Open, rng);
        auto h = heisenberg(n, 1.0, Boundary::Open);
        for (const auto& t : h.terms) {
            auto plan = plan_standard(c, t);
            // support once a layer is finished, before the next coarser one starts
            for (std::size_t i = 0; i < plan.steps.size(); ++i) {
                const int stage = plan.steps[i].stage;
                if (stage > c.n_gates()) continue;
                const bool last = i + 1 == plan.steps.size();
                if (last || c.gate(plan.steps[i + 1].stage).layer < c.gate(stage).layer)
                    EXPECT_LE(plan.steps[i].support.size(), 3u) << "n=" << n;
            }
        }
    }
}

TEST(Qca, GateCounts) {
    std::mt19937_64 rng(5);
    EXPECT_EQ(build_qca_layer(4, Boundary::Periodic, rng).n_gates(), 4);
    Circuit open = build_qca_layer(4, Boundary::Open, rng);
    ASSERT_EQ(open.n_gates(), 3);
    EXPECT_EQ(open.gate(1).wires, (std::vector<int>{0, 1}));
    EXPECT_EQ(open.gate(2).wires, (std::vector<int>{2, 3}));
    EXPECT_EQ(open.gate(3).wires, (std::vector<int>{1, 2}));
    EXPECT_THROW(build_qca_layer(5, Boundary::Open, rng), InvalidArgument);

    Circuit twice = concatenate(open, build_qca_layer(4, Boundary::Open, rng), CircuitClass::Custom);
    EXPECT_EQ(twice.n_gates(), 6);
    EXPECT_EQ(twice.gate(4).id, 4);
    validate(twice);
}

TEST(ExtendedMera, Concatenation) {
    std::mt19937_64 rng(6);
    for (auto b : {Boundary::Open, Boundary::Periodic}) {
        Circuit e = build_extended_mera(32, b, rng);
        std::mt19937_64 r2(0);
        const int expected = build_mera(32, b, r2).n_gates() + build_qca_layer(32, b, r2).n_gates();
        EXPECT_EQ(e.n_gates(), expected);
        EXPECT_EQ(e.class_tag, CircuitClass::ExtendedMera);
        EXPECT_EQ(e.gates.back().role, GateRole::Qca);
    }
    Circuit small = build_extended_mera(8, Boundary::Periodic, rng);
    Contractor ctr(small, ising_critical(8, Boundary::Periodic));
    EXPECT_LE(ctr.max_intermediate_dim(), kDefaultDenseCap);
}

TEST(ApplyToState, EmptyAndBitFlip) {
    std::mt19937_64 rng(7);
    Circuit c = build_qca_layer(4, Boundary::Open, rng);
    Circuit empty = c;
    empty.gates.clear();
    CVector psi = apply_to_state(empty);
    EXPECT_EQ(psi.size(), 16);
    EXPECT_EQ(psi(0), Complex(1));
    EXPECT_NEAR(psi.norm(), 1.0, 1e-15);

    Circuit flip = c;
    set_identity(flip);
    flip.gate(1).unitary = kron(pauli::x(), pauli::identity());
    CVector f = apply_to_state(flip);
    EXPECT_NEAR(std::abs(f(8) - Complex(1)), 0.0, 1e-15);
}

TEST(ApplyToState, NormAndEnergyAgree) {
    std::mt19937_64 rng(8);
    Circuit c = build_staircase(4, 4, rng);
    CVector psi = apply_to_state(c);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-10);
    auto h = heisenberg(4, 1.0, Boundary::Open);
    EXPECT_NEAR(execute_energy(c, h), dense_energy(c, h), 1e-10);
    EXPECT_THROW(apply_to_state(build_staircase(12, 4, rng)), DimensionError);
}

TEST(Structure, IdentityKeepsShape) {
    std::mt19937_64 rng(9);
    Circuit c = build_extended_mera(8, Boundary::Open, rng);
    Circuit id = c;
    set_identity(id);
    EXPECT_TRUE(same_shape(c, id));
    EXPECT_EQ(id.layout.ids(), c.layout.ids());
    for (int j = 1; j <= c.n_gates(); ++j) EXPECT_EQ(id.gate(j).wires, c.gate(j).wires);
}

TEST(Structure, Deterministic) {
    std::mt19937_64 a(11), b(11);
    Circuit x = build_mera(16, Boundary::Periodic, a), y = build_mera(16, Boundary::Periodic, b);
    for (int j = 1; j <= x.n_gates(); ++j) EXPECT_EQ(x.gate(j).unitary, y.gate(j).unitary);
}

TEST(Structure, ValidateCatchesDefects) {
    std::mt19937_64 rng(10);
    Circuit c = build_staircase(3, 2, rng);
    Circuit bad = c;
    bad.gate(2).unitary(0, 0) += 0.1;
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = c;
    bad.gate(2).wires = {0, 9};
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = c;
    bad.gate(3).id = 7;
    EXPECT_THROW(validate(bad), InvalidArgument);
}

TEST(Serialization, RoundTrip) {
    std::mt19937_64 rng(12);
    Circuit c = build_extended_mera(8, Boundary::Periodic, rng);
    Circuit back = circuit_from_json(json::parse(circuit_to_json(c).dump()));
    EXPECT_TRUE(same_shape(c, back));
    EXPECT_EQ(back.class_tag, c.class_tag);
    for (int j = 1; j <= c.n_gates(); ++j) {
        EXPECT_EQ(back.gate(j).unitary, c.gate(j).unitary);
        EXPECT_EQ(back.gate(j).role, c.gate(j).role);
    }
}
