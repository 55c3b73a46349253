#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qflow/hamiltonian.hpp"
#include "qflow/linalg.hpp"

namespace qflow {

enum class CircuitClass { Staircase, Mera, QcaLayer, ExtendedMera, Custom };
enum class GateRole { StaircaseStep, Isometry, Disentangler, Qca, Generic };

std::string to_string(CircuitClass c);
std::string to_string(GateRole r);
CircuitClass parse_circuit_class(const std::string& s);
GateRole parse_gate_role(const std::string& s);

struct Gate {
    int id = 0;  ///< 1-based application index
    CMatrix unitary;
    std::vector<int> wires;
    GateRole role = GateRole::Generic;
    int layer = 0;
};

/// Ordered unitary network acting on |0...0>. Gate 1 is applied first, so the
/// network is U = U_M ... U_2 U_1.
struct Circuit {
    WireLayout layout;
    /// spin_wires[s-1] is the wire carrying spin site s.
    std::vector<int> spin_wires;
    std::vector<Gate> gates;
    CircuitClass class_tag = CircuitClass::Custom;
    /// Ancilla dimension for staircases, number of levels for MERA; 0 otherwise.
    int refinement = 0;

    int n_spins() const noexcept { return static_cast<int>(spin_wires.size()); }
    int n_gates() const noexcept { return static_cast<int>(gates.size()); }
    int spin_wire(int site) const { return spin_wires.at(site - 1); }
    const Gate& gate(int id) const { return gates.at(id - 1); }
    Gate& gate(int id) { return gates.at(id - 1); }
    /// product of the dims of the gate's wires
    std::int64_t gate_dim(int id) const;
    double max_unitarity_defect() const;
};

/// Structural checks: contiguous ids, known wires, gate dimensions, unitarity within `tol`.
void validate(const Circuit& c, double tol = 1e-10);

/// True when both circuits have the same layout, spin map and gate wiring (gate values may differ).
bool same_shape(const Circuit& a, const Circuit& b);

/// One ancilla wire (id 0, dim d) followed by n spin wires; gate j couples the ancilla with spin j.
Circuit build_staircase(int n, int d, std::mt19937_64& rng, std::int64_t cap = kDefaultDenseCap);

/// Binary MERA with qubit bonds as a state-preparation circuit. Layers run coarse to fine: a
/// top gate on the two level-1 wires, then per level one isometry per active wire (pairing it
/// with a fresh wire) followed by disentanglers on the odd-offset neighbour pairs; the
/// wrap-around disentangler exists only for periodic boundaries.
Circuit build_mera(int n, Boundary boundary, std::mt19937_64& rng);

/// Margolus brick layer: pairs (1,2),(3,4),... then (2,3),(4,5),... plus (n,1) for periodic.
Circuit build_qca_layer(int n, Boundary boundary, std::mt19937_64& rng);

/// MERA followed by one QCA layer acting last.
Circuit build_extended_mera(int n, Boundary boundary, std::mt19937_64& rng);

/// Appends `tail`'s gates after `head`'s; both must act on the same wires.
Circuit concatenate(const Circuit& head, const Circuit& tail, CircuitClass tag);

/// Replace every gate unitary by the identity.
void set_identity(Circuit& c);

/// Full state vector U|0...0> in layout order (oracle scale only).
CVector apply_to_state(const Circuit& c, std::int64_t cap = kDefaultDenseCap);

/// Gate counts per role.
struct GateCounts {
    int isometries = 0;
    int disentanglers = 0;
    int staircase_steps = 0;
    int qca = 0;
    int generic = 0;
    int total = 0;
};
GateCounts count_gates(const Circuit& c);

}  // namespace qflow
