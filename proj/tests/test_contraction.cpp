#include <gtest/gtest.h>

#include <random>

#include "qflow/contraction.hpp"
#include "qflow/error.hpp"
#include "qflow/io.hpp"
#include "qflow/oracle.hpp"

using namespace qflow;

namespace {

double max_abs(const CMatrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

struct Instance {
    Circuit c;
    Hamiltonian h;
};

std::vector<Instance> instances(std::mt19937_64& rng) {
    std::vector<Instance> out;
    out.push_back({build_staircase(4, 3, rng), heisenberg(4, 1.0, Boundary::Open)});
    out.push_back({build_staircase(5, 2, rng), ising_critical(5, Boundary::Open)});
    out.push_back({build_mera(8, Boundary::Periodic, rng), ising_critical(8, Boundary::Periodic)});
    out.push_back({build_mera(8, Boundary::Open, rng), heisenberg(8, -1.0, Boundary::Open)});
    out.push_back({build_extended_mera(8, Boundary::Periodic, rng), ising_critical(8, Boundary::Periodic)});
    out.push_back({build_qca_layer(6, Boundary::Open, rng), heisenberg(6, 0.5, Boundary::Open)});
    return out;
}

}  // namespace

TEST(Energy, MatchesDense) {
    std::mt19937_64 rng(21);
    for (const auto& [c, h] : instances(rng)) {
        const double dense = dense_energy(c, h);
        EXPECT_NEAR(execute_energy(c, h), dense, 1e-10);
        Contractor ctr(c, h);
        EXPECT_NEAR(ctr.energy(c), dense, 1e-10);
        double sum = 0.0;
        for (double e : ctr.term_energies(c)) sum += e;
        EXPECT_NEAR(sum, dense, 1e-10);
    }
}

TEST(Energy, SingleSiteCircuit) {
    // two spins, one gate: <0|U† Z1 U|0> by hand
    std::mt19937_64 rng(22);
    Circuit c = build_qca_layer(2, Boundary::Open, rng);
    Hamiltonian h = custom_hamiltonian(2, Boundary::Open, {make_term(pauli::z(), {1}, 2)});
    const CMatrix& u = c.gate(1).unitary;
    const CMatrix z1 = kron(pauli::z(), pauli::identity());
    const Complex expect = (u.adjoint() * z1 * u)(0, 0);
    EXPECT_NEAR(execute_energy(c, h), expect.real(), 1e-12);
}

TEST(Generator, MatchesDenseF) {
    std::mt19937_64 rng(23);
    for (const auto& [c, h] : instances(rng)) {
        Contractor ctr(c, h);
        for (int j = 1; j <= c.n_gates(); ++j) {
            const CMatrix f = ctr.compute_f(c, j);
            EXPECT_LT(max_abs(f - dense_f(c, h, j)), 1e-10) << "gate " << j;
        }
    }
}

TEST(Generator, TraceIsEnergy) {
    std::mt19937_64 rng(24);
    Circuit c = build_mera(8, Boundary::Periodic, rng);
    auto h = ising_critical(8, Boundary::Periodic);
    Contractor ctr(c, h);
    const double e = ctr.energy(c);
    for (int j : {1, 5, c.n_gates()}) EXPECT_NEAR(ctr.compute_f(c, j).trace().real(), e, 1e-10);
}

TEST(Generator, ReachingTermsCarryAntiHermitianPart) {
    std::mt19937_64 rng(25);
    Circuit c = build_mera(16, Boundary::Open, rng);
    auto h = heisenberg(16, 1.0, Boundary::Open);
    Contractor ctr(c, h);
    for (int j : {1, 7, 20, c.n_gates()}) {
        const CMatrix full = ctr.compute_f(c, j);
        const CMatrix part = ctr.environment(c, j).f();
        EXPECT_LT(max_abs((full - full.adjoint()) - (part - part.adjoint())), 1e-10);
        for (int t : ctr.reaching_terms(j)) EXPECT_TRUE(ctr.reaches(t, j));
    }
    // gates next to the physical sites only see nearby terms
    EXPECT_LT(ctr.reaching_terms(c.n_gates()).size(), h.terms.size());
}

TEST(Gamma, ProjectionsOfF) {
    std::mt19937_64 rng(26);
    for (const auto& [c, h] : instances(rng)) {
        for (int j : {1, c.n_gates()}) {
            auto g = gamma_coefficients(c, h, j);
            auto d = dense_gamma(c, h, j);
            ASSERT_EQ(g.size(), d.size());
            for (std::size_t b = 0; b < g.size(); ++b) EXPECT_NEAR(g[b], d[b], 1e-10);
        }
    }
}

TEST(Plan, StaircaseCancelsAndProjects) {
    std::mt19937_64 rng(27);
    Circuit c = build_staircase(6, 4, rng);
    auto h = heisenberg(6, 1.0, Boundary::Open);
    // term on spins 2,3 only sees gates 3..1
    auto plan = plan_standard(c, h.terms[1]);
    int conj = 0;
    for (const auto& st : plan.steps)
        if (st.kind == StepKind::Conjugate) {
            ++conj;
            EXPECT_LE(st.gate_id, 3);
        }
    EXPECT_EQ(conj, 3);
    EXPECT_TRUE(plan.steps.back().support.empty());
    EXPECT_LE(plan.max_intermediate_dim, 16);
}

TEST(Plan, CapThrows) {
    std::mt19937_64 rng(28);
    Circuit c = build_extended_mera(16, Boundary::Periodic, rng);
    auto h = ising_critical(16, Boundary::Periodic);
    EXPECT_THROW(Contractor(c, h, ContractionOptions{64, 1}), ContractionError);
}

TEST(Plan, JsonDump) {
    std::mt19937_64 rng(29);
    Circuit c = build_mera(8, Boundary::Open, rng);
    auto h = heisenberg(8, 1.0, Boundary::Open);
    auto plan = plan_standard(c, h.terms[3]);
    json j = plan_to_json(plan);
    ASSERT_TRUE(j.contains("steps"));
    EXPECT_EQ(j["steps"].size(), plan.steps.size());
    EXPECT_EQ(j["max_intermediate_dim"].get<std::int64_t>(), plan.max_intermediate_dim);
}

TEST(CostModel, EmptyPlan) {
    PlanCost pc = cost_model(ContractionPlan{});
    EXPECT_EQ(pc.flops, 0.0);
    EXPECT_EQ(pc.max_dim, 1);
}

TEST(CostModel, StaircaseCubicInBond) {
    auto h = heisenberg(12, 1.0, Boundary::Open);
    double prev = 0.0;
    for (int d : {8, 16, 32}) {
        std::mt19937_64 rng(30);
        Circuit c = build_staircase(12, d, rng);
        const double flops = Contractor(c, h).sweep_cost().flops;
        if (prev > 0.0) EXPECT_NEAR(flops / prev, 8.0, 0.4) << "d=" << d;
        prev = flops;
    }
}

TEST(CostModel, MeraNearlyLinearInSites) {
    auto cost = [](int n) {
        std::mt19937_64 rng(31);
        Circuit c = build_mera(n, Boundary::Periodic, rng);
        return Contractor(c, ising_critical(n, Boundary::Periodic)).sweep_cost().flops;
    };
    const double r = cost(64) / cost(32);
    EXPECT_GT(r, 1.8);
    EXPECT_LT(r, 3.0);
}

TEST(RedFront, MergedGroupsGiveSameEnvironments) {
    std::mt19937_64 rng(32);
    for (const auto& [c, h] : instances(rng)) {
        Contractor ctr(c, h);
        RedFront front(ctr, c);
        for (int j = c.n_gates(); j >= 1; --j) {
            front.advance(c, j);
            const CMatrix a = ctr.environment_from(c, j, front.reaching(j)).f();
            const CMatrix b = ctr.environment(c, j).f();
            EXPECT_LT(max_abs(a - b), 1e-10) << "gate " << j;
        }
        front.advance(c, 0);
        EXPECT_LE(front.groups(), h.terms.size());
        EXPECT_NEAR(front.energy(), dense_energy(c, h), 1e-10);
    }
}

TEST(BlueCache, ReusesAndInvalidates) {
    std::mt19937_64 rng(33);
    Circuit c = build_mera(8, Boundary::Periodic, rng);
    auto h = ising_critical(8, Boundary::Periodic);
    Contractor ctr(c, h);
    BlueCache cache;
    RedFront front(ctr, c);
    for (int j = c.n_gates(); j >= 1; --j) {
        front.advance(c, j);
        const CMatrix a = ctr.environment_from(c, j, front.reaching(j), &cache).f();
        EXPECT_LT(max_abs(a - ctr.environment(c, j).f()), 1e-10);
    }
    EXPECT_GT(cache.bytes(), 0u);

    // change a gate: cached states built from it must not survive
    c.gate(2).unitary = haar_unitary(static_cast<int>(c.gate(2).unitary.rows()), rng);
    cache.invalidate(2);
    for (int j = 1; j <= c.n_gates(); ++j) {
        RedFront fresh(ctr, c);
        fresh.advance(c, j);
        const CMatrix a = ctr.environment_from(c, j, fresh.reaching(j), &cache).f();
        EXPECT_LT(max_abs(a - ctr.environment(c, j).f()), 1e-10) << "gate " << j;
    }
    cache.clear();
    EXPECT_EQ(cache.bytes(), 0u);
}

TEST(BlueCache, ZeroBudgetStillComputes) {
    std::mt19937_64 rng(34);
    Circuit c = build_staircase(5, 2, rng);
    auto h = heisenberg(5, 1.0, Boundary::Open);
    Contractor ctr(c, h);
    BlueCache cache(0);
    RedFront front(ctr, c);
    front.advance(c, 3);
    const CMatrix a = ctr.environment_from(c, 3, front.reaching(3), &cache).f();
    EXPECT_LT(max_abs(a - ctr.environment(c, 3).f()), 1e-10);
    EXPECT_EQ(cache.bytes(), 0u);
}

TEST(Environment, RotateMatchesUpdatedCircuit) {
    std::mt19937_64 rng(35);
    Circuit c = build_mera(8, Boundary::Open, rng);
    auto h = heisenberg(8, 1.0, Boundary::Open);
    Contractor ctr(c, h);
    const int j = 4;
    GateEnvironment env = ctr.environment(c, j, true);
    const CMatrix v = haar_unitary(static_cast<int>(env.gate_dim), rng);
    env.rotate(v);
    c.gate(j).unitary = v * c.gate(j).unitary;
    EXPECT_NEAR(env.energy(), dense_energy(c, h), 1e-10);
}

TEST(Environment, GeodesicModelMatchesContraction) {
    std::mt19937_64 rng(36);
    Circuit c = build_staircase(5, 2, rng);
    auto h = heisenberg(5, -1.0, Boundary::Open);
    Contractor ctr(c, h);
    const int j = 3;
    const GateEnvironment env = ctr.environment(c, j, true);
    const CMatrix g = random_hermitian(4, rng);
    GeodesicModel model(env, g);
    for (double theta : {0.0, 0.3, -1.1}) {
        Circuit moved = c;
        moved.gate(j).unitary = exp_hermitian(g, theta) * c.gate(j).unitary;
        EXPECT_NEAR(model.energy(theta), dense_energy(moved, h), 1e-10);
    }
    const double step = 1e-5;
    EXPECT_NEAR(model.derivative(0.2), (model.energy(0.2 + step) - model.energy(0.2 - step)) / (2 * step), 1e-6);
    EXPECT_GT(model.spread(), 0.0);
}

TEST(Threads, SameEnergies) {
    std::mt19937_64 rng(37);
    Circuit c = build_mera(16, Boundary::Periodic, rng);
    auto h = ising_critical(16, Boundary::Periodic);
    Contractor serial(c, h), par(c, h, ContractionOptions{kDefaultDenseCap, 4});
    EXPECT_NEAR(serial.energy(c), par.energy(c), 1e-12);
    EXPECT_LT(max_abs(serial.compute_f(c, 9) - par.compute_f(c, 9)), 1e-12);
}
