#include "qflow/circuit.hpp"

#include <algorithm>
#include <bit>

#include "qflow/error.hpp"

namespace qflow {

std::string to_string(CircuitClass c) {
    switch (c) {
        case CircuitClass::Staircase: return "staircase";
        case CircuitClass::Mera: return "mera";
        case CircuitClass::QcaLayer: return "qca_layer";
        case CircuitClass::ExtendedMera: return "extended_mera";
        case CircuitClass::Custom: return "custom";
    }
    return "custom";
}

std::string to_string(GateRole r) {
    switch (r) {
        case GateRole::StaircaseStep: return "staircase-step";
        case GateRole::Isometry: return "isometry";
        case GateRole::Disentangler: return "disentangler";
        case GateRole::Qca: return "qca";
        case GateRole::Generic: return "generic";
    }
    return "generic";
}

CircuitClass parse_circuit_class(const std::string& s) {
    for (auto c : {CircuitClass::Staircase, CircuitClass::Mera, CircuitClass::QcaLayer, CircuitClass::ExtendedMera,
                   CircuitClass::Custom})
        if (to_string(c) == s) return c;
    throw InvalidArgument("unknown circuit class \"" + s + "\"");
}

GateRole parse_gate_role(const std::string& s) {
    for (auto r : {GateRole::StaircaseStep, GateRole::Isometry, GateRole::Disentangler, GateRole::Qca,
                   GateRole::Generic})
        if (to_string(r) == s) return r;
    throw InvalidArgument("unknown gate role \"" + s + "\"");
}

std::int64_t Circuit::gate_dim(int id) const {
    std::int64_t d = 1;
    for (int w : gate(id).wires) d *= layout.dim(w);
    return d;
}

double Circuit::max_unitarity_defect() const {
    double worst = 0.0;
    for (const auto& g : gates) worst = std::max(worst, unitarity_defect(g.unitary));
    return worst;
}

void validate(const Circuit& c, double tol) {
    for (int s = 0; s < c.n_spins(); ++s)
        if (!c.layout.contains(c.spin_wires[s])) throw InvalidArgument("spin wire missing from layout");
    for (int i = 0; i < c.n_gates(); ++i) {
        const Gate& g = c.gates[i];
        if (g.id != i + 1) throw InvalidArgument("gate ids must be the contiguous sequence 1..M");
        std::vector<int> sorted = g.wires;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.empty() || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidArgument("gate " + std::to_string(g.id) + " has empty or repeated wires");
        for (int w : g.wires)
            if (!c.layout.contains(w))
                throw InvalidArgument("gate " + std::to_string(g.id) + " uses unknown wire " + std::to_string(w));
        if (g.unitary.rows() != c.gate_dim(g.id) || g.unitary.cols() != c.gate_dim(g.id))
            throw InvalidArgument("gate " + std::to_string(g.id) + " matrix does not match its wires");
        if (!is_unitary(g.unitary, tol)) throw InvalidArgument("gate " + std::to_string(g.id) + " is not unitary");
    }
}

bool same_shape(const Circuit& a, const Circuit& b) {
    if (a.layout.ids() != b.layout.ids() || a.spin_wires != b.spin_wires || a.n_gates() != b.n_gates()) return false;
    for (std::size_t w = 0; w < a.layout.size(); ++w)
        if (a.layout.wires()[w].dim != b.layout.wires()[w].dim) return false;
    for (int i = 0; i < a.n_gates(); ++i)
        if (a.gates[i].wires != b.gates[i].wires) return false;
    return true;
}

namespace {

void push_gate(Circuit& c, std::vector<int> wires, GateRole role, int layer, std::mt19937_64& rng) {
    Gate g;
    g.id = c.n_gates() + 1;
    g.wires = std::move(wires);
    g.role = role;
    g.layer = layer;
    std::int64_t dim = 1;
    for (int w : g.wires) dim *= c.layout.dim(w);
    g.unitary = haar_unitary(static_cast<int>(dim), rng);
    c.gates.push_back(std::move(g));
}

Circuit qubit_chain(int n) {
    std::vector<Wire> wires;
    for (int s = 0; s < n; ++s) wires.push_back(Wire{s, 2});
    Circuit c;
    c.layout = WireLayout(std::move(wires));
    for (int s = 0; s < n; ++s) c.spin_wires.push_back(s);
    return c;
}

}  // namespace

Circuit build_staircase(int n, int d, std::mt19937_64& rng, std::int64_t cap) {
    if (n < 2) throw InvalidArgument("staircase needs n >= 2");
    if (d < 2) throw InvalidArgument("staircase needs ancilla dimension d >= 2");
    if (2LL * d > cap) throw DimensionError("staircase gate dimension 2d exceeds dense cap");
    std::vector<Wire> wires{Wire{0, d}};
    for (int s = 1; s <= n; ++s) wires.push_back(Wire{s, 2});
    Circuit c;
    c.layout = WireLayout(std::move(wires));
    for (int s = 1; s <= n; ++s) c.spin_wires.push_back(s);
    c.class_tag = CircuitClass::Staircase;
    c.refinement = d;
    for (int s = 1; s <= n; ++s) push_gate(c, {0, s}, GateRole::StaircaseStep, s, rng);
    return c;
}

Circuit build_mera(int n, Boundary boundary, std::mt19937_64& rng) {
    if (n < 2 || !std::has_single_bit(static_cast<unsigned>(n)))
        throw InvalidArgument("MERA needs n to be a power of two, got " + std::to_string(n));
    const int levels = std::countr_zero(static_cast<unsigned>(n));
    Circuit c = qubit_chain(n);
    c.class_tag = CircuitClass::Mera;
    c.refinement = levels;

    // level 1: two active wires, spaced n/2 apart
    push_gate(c, {0, n / 2}, GateRole::Isometry, 1, rng);
    std::vector<int> active{0, n / 2};
    for (int level = 2; level <= levels; ++level) {
        const int offset = n >> level;
        std::vector<int> next;
        for (int a : active) {
            push_gate(c, {a, a + offset}, GateRole::Isometry, level, rng);
            next.push_back(a);
            next.push_back(a + offset);
        }
        const int m = static_cast<int>(next.size());
        for (int i = 1; i + 1 < m; i += 2) push_gate(c, {next[i], next[i + 1]}, GateRole::Disentangler, level, rng);
        if (boundary == Boundary::Periodic) push_gate(c, {next[m - 1], next[0]}, GateRole::Disentangler, level, rng);
        active = std::move(next);
    }
    return c;
}

Circuit build_qca_layer(int n, Boundary boundary, std::mt19937_64& rng) {
    if (n < 2 || n % 2 != 0) throw InvalidArgument("QCA layer needs an even number of sites");
    Circuit c = qubit_chain(n);
    c.class_tag = CircuitClass::QcaLayer;
    c.refinement = 1;
    for (int a = 0; a + 1 < n; a += 2) push_gate(c, {a, a + 1}, GateRole::Qca, 1, rng);
    for (int a = 1; a + 1 < n; a += 2) push_gate(c, {a, a + 1}, GateRole::Qca, 2, rng);
    if (boundary == Boundary::Periodic && n > 2) push_gate(c, {n - 1, 0}, GateRole::Qca, 2, rng);
    return c;
}

Circuit concatenate(const Circuit& head, const Circuit& tail, CircuitClass tag) {
    if (head.layout.ids() != tail.layout.ids() || head.spin_wires != tail.spin_wires)
        throw InvalidArgument("concatenate: circuits act on different wires");
    Circuit c = head;
    c.class_tag = tag;
    for (const Gate& g : tail.gates) {
        Gate copy = g;
        copy.id = c.n_gates() + 1;
        c.gates.push_back(std::move(copy));
    }
    return c;
}

Circuit build_extended_mera(int n, Boundary boundary, std::mt19937_64& rng) {
    Circuit mera = build_mera(n, boundary, rng);
    const Circuit qca = build_qca_layer(n, boundary, rng);
    Circuit c = concatenate(mera, qca, CircuitClass::ExtendedMera);
    c.refinement = mera.refinement;
    return c;
}

void set_identity(Circuit& c) {
    for (auto& g : c.gates) g.unitary = CMatrix::Identity(g.unitary.rows(), g.unitary.cols());
}

CVector apply_to_state(const Circuit& c, std::int64_t cap) {
    const std::int64_t dim = c.layout.total_dim();
    if (dim > cap) throw DimensionError("apply_to_state: state dimension exceeds dense cap");
    CVector psi = CVector::Zero(dim);
    psi(0) = 1.0;
    for (const auto& g : c.gates) apply_local(g.unitary, c.layout, g.wires, psi);
    return psi;
}

GateCounts count_gates(const Circuit& c) {
    GateCounts n;
    for (const auto& g : c.gates) {
        switch (g.role) {
            case GateRole::Isometry: ++n.isometries; break;
            case GateRole::Disentangler: ++n.disentanglers; break;
            case GateRole::StaircaseStep: ++n.staircase_steps; break;
            case GateRole::Qca: ++n.qca; break;
            case GateRole::Generic: ++n.generic; break;
        }
        ++n.total;
    }
    return n;
}

}  // namespace qflow
