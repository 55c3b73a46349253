#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qflow/circuit.hpp"
#include "qflow/contraction.hpp"
#include "qflow/hamiltonian.hpp"

namespace qflow {

enum class UpdateOrder { Sequential, Random };
enum class StepRule { Fixed, LineSearch };
enum class Schedule { GaussSeidel, Jacobi };
enum class FlowStatus { Running, Converged, Stalled, HalvingExhausted };
/// Geometry used to turn F into a generator: plain Hilbert-Schmidt, or weighted by the
/// reduced state on the gate wires.
enum class Metric { HilbertSchmidt, State };

std::string to_string(UpdateOrder o);
std::string to_string(StepRule r);
std::string to_string(Schedule s);
std::string to_string(FlowStatus s);
std::string to_string(Metric m);
UpdateOrder parse_update_order(const std::string& s);
StepRule parse_step_rule(const std::string& s);
Schedule parse_schedule(const std::string& s);
Metric parse_metric(const std::string& s);

struct FlowConfig {
    double eta = 0.05;
    double epsilon = 1.0;  ///< hs_inner(G, G) of every non-zero generator
    int max_sweeps = 100;
    double energy_tol = 1e-10;  ///< infinity disables the convergence exit
    int patience = 3;
    UpdateOrder update_order = UpdateOrder::Sequential;
    std::uint64_t seed = 1;
    bool halving = true;
    int max_halvings = 30;
    StepRule step_rule = StepRule::Fixed;
    int inner_steps = 1;  ///< generator re-evaluations per gate visit (line search only)
    Schedule schedule = Schedule::GaussSeidel;
    double eta_growth = 1.0;  ///< eta *= growth after an accepted sweep, capped at the configured eta
    Metric metric = Metric::HilbertSchmidt;
    double metric_floor = 1e-6;  ///< added to the state weights of the State metric
    int threads = 1;
    std::int64_t cap = kDefaultDenseCap;

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
};

struct FlowRecord {
    int step = 0;   ///< attempted sweeps so far
    int sweep = 0;  ///< accepted sweeps so far
    double energy = 0.0;
    double grad_norm = 0.0;
    double eta = 0.0;
    double wall_ms = 0.0;
    bool accepted = true;
};

struct FlowRun {
    Circuit circuit;
    std::vector<FlowRecord> history;
    FlowStatus status = FlowStatus::Running;
    int sweeps = 0;
    int halvings = 0;
    double energy = 0.0;

    std::vector<double> accepted_energies() const;
};

/// Zero below this raw HS norm of F + F†.
inline constexpr double kGeneratorFloor = 1e-14;
/// Energy rise that makes the controller reject a sweep.
inline constexpr double kDescentSlack = 1e-12;

/// Flow kernel of gate j: the derivative of the energy under U_j <- exp(-i theta g) U_j is
/// 2 Re hs_inner(g, kernel).
CMatrix flow_kernel(const CMatrix& f);

/// G = -(f + f†) rescaled so that hs_inner(G, G) = epsilon; zero when the raw norm is below the floor.
CMatrix optimal_generator(const CMatrix& f, double epsilon = 1.0);

/// Generator for the State metric: with sigma = sum_a s_a |a><a|, the components of -(f + f†) in
/// that eigenbasis are divided by s_a + s_b + floor, then the result is rescaled to
/// hs_inner(G, G) = epsilon. Its directional derivative is never positive.
CMatrix state_weighted_generator(const CMatrix& f, const CMatrix& sigma, double epsilon = 1.0,
                                 double floor = 1e-6);

/// Generator of gate `env.gate_id` under cfg.metric.
CMatrix gate_generator(const GateEnvironment& env, const CMatrix& f, const FlowConfig& cfg);

/// Predicted dE/dtheta for U_j <- exp(-i theta g) U_j.
double directional_derivative(const Contractor& ctr, const Circuit& c, int j, const CMatrix& g);
double directional_derivative(const Circuit& c, const Hamiltonian& h, int j, const CMatrix& g);

struct SweepResult {
    double energy = 0.0;
    double grad_norm = 0.0;  ///< sqrt of sum over gates of ||f + f†||² at update time
};

/// One pass over all gates. `index` picks the direction of sequential sweeps (even ascending,
/// odd descending); `rng` drives random orders. A `cache` kept across sweeps must be cleared
/// whenever gates change outside of sweep().
SweepResult sweep(Circuit& c, const Contractor& ctr, const FlowConfig& cfg, double eta, int index,
                  std::mt19937_64& rng, BlueCache* cache = nullptr);
std::pair<Circuit, double> sweep(const Circuit& c, const Hamiltonian& h, const FlowConfig& cfg);

using FlowObserver = std::function<void(const FlowRecord&, const Circuit&)>;

FlowRun run_flow(Circuit c, const Hamiltonian& h, const FlowConfig& cfg, const FlowObserver& observer = {});

/// Brockett flow H <- exp(-i eta G) H exp(i eta G), G = i[K, H]; returns the final H.
CMatrix double_bracket_demo(const CMatrix& h, const CMatrix& k, int steps, double eta);

/// Frobenius norm of the off-diagonal part.
double off_diagonal_norm(const CMatrix& h);

}  // namespace qflow
