#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "qflow/circuit.hpp"
#include "qflow/hamiltonian.hpp"
#include "qflow/linalg.hpp"

namespace qflow {

/// Dense operator on an ordered wire list; the last wire is the least significant index digit.
struct WireOperator {
    std::vector<int> wires;
    CMatrix mat;
};

enum class StepKind { Conjugate, ProjectIn, TraceOut, Absorb };
std::string to_string(StepKind k);

struct ContractionStep {
    StepKind kind = StepKind::Conjugate;
    int gate_id = 0;          ///< the gate of a Conjugate step (S_l), 0 otherwise
    std::vector<int> wires;   ///< wires projected, traced or absorbed (Q_l); gate wires for Conjugate
    int stage = 0;            ///< gate index this step belongs to; M+1 for the initial projection
    std::int64_t dim = 1;     ///< largest operator dimension held during the step
    std::int64_t gate_dim = 1;
    std::vector<int> support; ///< operator support after the step
};

struct PlanTarget {
    enum class Kind { Energy, Red, Blue };
    Kind kind = Kind::Energy;
    int term = -1;  ///< Hamiltonian term index, -1 for state plans
    int gate = 0;   ///< generatee for Red/Blue plans
};

/// A replayable sequence of conjugate/project/trace/absorb steps. Heisenberg plans
/// (energy, red cone) conjugate as U† A U; state plans (blue cone) as U rho U†.
struct ContractionPlan {
    std::vector<ContractionStep> steps;
    std::vector<int> initial_support;
    std::int64_t max_intermediate_dim = 1;
    bool heisenberg = true;
    PlanTarget target;
};

/// Dense-multiply cost of executing a plan.
struct PlanCost {
    double flops = 0.0;  ///< complex multiply-adds
    std::int64_t max_dim = 1;
};
PlanCost cost_model(const ContractionPlan& plan);

struct ContractionOptions {
    std::int64_t cap = kDefaultDenseCap;
    int threads = 1;
};

/// Cone planner for <0|U† A U|0>: walks gates M..1, cancels gates disjoint from the current
/// support, conjugates the rest into the operator and projects each wire onto |0> as soon as no
/// earlier gate touches it. Throws ContractionError if an intermediate exceeds `cap`.
ContractionPlan plan_standard(const Circuit& c, const LocalTerm& term, std::int64_t cap = kDefaultDenseCap);

/// Forward plan for the state after gates 1..j reduced to `keep` (the blue cone).
ContractionPlan plan_state(const Circuit& c, int j, std::vector<int> keep, std::int64_t cap = kDefaultDenseCap);

/// Execute steps [begin, end) of a plan.
void execute_steps(const ContractionPlan& plan, const Circuit& c, WireOperator& op, std::size_t begin,
                   std::size_t end);

/// Operator of `term` placed on the circuit's spin wires.
WireOperator term_operator(const Circuit& c, const LocalTerm& term);

/// Kernels used by the plans; exposed for tests.
namespace kernel {
void reorder(WireOperator& op, const std::vector<int>& order, const WireLayout& layout);
void extend_identity(WireOperator& op, const std::vector<int>& extra, const WireLayout& layout);
/// Heisenberg: A <- U† A U (adds missing gate wires with identity). Otherwise rho <- U rho U†.
void conjugate(WireOperator& op, const Gate& gate, const WireLayout& layout, bool heisenberg);
void project_zero(WireOperator& op, int wire, const WireLayout& layout);
void trace_out(WireOperator& op, int wire, const WireLayout& layout);
void absorb_zero(WireOperator& op, int wire, const WireLayout& layout);
}  // namespace kernel

/// State and Hamiltonian operators for one group of terms sharing the support `wires`
/// (the red cone support at stage j joined with the generatee's wires).
struct ConeBlock {
    std::vector<int> wires;  ///< rest (sorted) followed by the generatee's wires in gate order
    CMatrix state;           ///< state just after gate j, reduced to `wires`
    CMatrix hamiltonian;     ///< summed Heisenberg-evolved terms embedded on `wires`
    std::vector<int> terms;
};

/// Everything needed to evaluate and flow a single gate while the others stay fixed.
struct GateEnvironment {
    int gate_id = 0;
    Eigen::Index gate_dim = 1;
    std::vector<ConeBlock> blocks;

    /// F_j: partial trace over everything but the gate wires of (state x Hamiltonian).
    CMatrix f() const;
    /// Energy of the terms held in the environment.
    double energy() const;
    /// Reduced state on the generatee's wires (zero when there are no blocks).
    CMatrix gate_state() const;
    /// Apply V to the generatee in place: state <- V state V†.
    void rotate(const CMatrix& v);
};

/// Energy along the geodesic U_j <- exp(-i theta G) U_j restricted to one environment:
/// E(theta) = Re sum_ab C_ab exp(-i theta (lambda_a - lambda_b)).
class GeodesicModel {
public:
    GeodesicModel(const GateEnvironment& env, const CMatrix& g);
    double energy(double theta) const;
    double derivative(double theta) const;
    /// Largest eigenvalue gap of G (zero when G is proportional to the identity).
    double spread() const noexcept { return spread_; }

private:
    Eigen::VectorXd lambda_;
    CMatrix coeff_;
    double spread_ = 0.0;
};

/// Red operator handed to the environment builder: a Heisenberg-evolved term (or a sum of
/// terms sharing one support) together with a representative term index.
struct RedRef {
    int term = 0;
    const WireOperator* op = nullptr;
};

class Contractor;

/// Memo of blue-cone intermediates keyed by step prefix. Plans that start with the same steps
/// share their intermediate states. Entries built from a gate must be dropped when that gate
/// changes.
class BlueCache {
public:
    explicit BlueCache(std::size_t max_bytes = std::size_t{256} << 20) : max_bytes_(max_bytes) {}
    BlueCache(const BlueCache&) = delete;
    BlueCache& operator=(const BlueCache&) = delete;

    WireOperator run(const ContractionPlan& plan, const Circuit& c);
    /// Forget every intermediate that includes gate `gate`.
    void invalidate(int gate);
    void clear();
    std::size_t bytes() const noexcept { return bytes_; }

private:
    struct Node {
        StepKind kind = StepKind::Conjugate;
        int gate_id = 0;
        std::vector<int> wires;
        WireOperator state;
        std::vector<std::unique_ptr<Node>> children;
    };
    std::size_t drop(Node& n, int gate);

    Node root_;
    std::size_t bytes_ = 0;
    std::size_t max_bytes_;
    std::mutex mutex_;
};

/// Plans and executes energy and generator contractions for one circuit shape and Hamiltonian.
/// Plans depend on wiring only, so one Contractor serves every set of gate values of that shape.
class Contractor {
public:
    Contractor(const Circuit& shape, const Hamiltonian& h, ContractionOptions options = {});

    const Hamiltonian& hamiltonian() const noexcept { return h_; }
    const ContractionOptions& options() const noexcept { return options_; }
    bool compatible(const Circuit& c) const { return same_shape(shape_, c); }

    const ContractionPlan& standard_plan(std::size_t term) const { return standard_.at(term); }
    /// Largest intermediate over all planned energy and generator contractions.
    std::int64_t max_intermediate_dim() const noexcept { return max_dim_; }

    /// Per-term energies, each through its own standard plan.
    std::vector<double> term_energies(const Circuit& c) const;
    /// Total energy; terms whose cones meet are summed and propagated together.
    double energy(const Circuit& c) const;

    /// Terms whose red cone at stage j shares a wire with gate j, i.e. the only terms that
    /// contribute to the anti-Hermitian part of F_j.
    const std::vector<int>& reaching_terms(int j) const { return reaching_.at(j - 1); }
    bool reaches(std::size_t term, int j) const { return reach_[j - 1][term] != 0; }

    /// F_j summed over every term (includes terms whose cone never meets gate j).
    CMatrix compute_f(const Circuit& c, int j) const;
    /// Environment of gate j built from scratch for the reaching terms (`all_terms`: every term).
    GateEnvironment environment(const Circuit& c, int j, bool all_terms = false) const;

    /// Red-cone cursor: a term's operator after processing gates M..stage+1.
    struct RedCursor {
        WireOperator op;
        std::size_t next = 0;
    };
    RedCursor start_red(const Circuit& c, std::size_t term) const;
    /// Advance the cursor so that every gate with index > j has been processed.
    void advance(RedCursor& cur, const Circuit& c, std::size_t term, int j) const;
    /// Environment of gate j from red operators that together cover every reaching term once.
    GateEnvironment environment_from(const Circuit& c, int j, const std::vector<RedRef>& red,
                                     BlueCache* cache = nullptr) const;

    /// Cost of one sweep with every red and every blue plan executed once.
    PlanCost sweep_cost() const;

    /// Blue plan for (j, keep); planned on first use.
    const ContractionPlan& state_plan(int j, const std::vector<int>& keep) const;
    /// Support of term's red operator once every gate above j has been processed.
    std::vector<int> red_support(std::size_t term, int j) const;

private:
    std::vector<int> block_wires(std::size_t term, int j) const;
    GateEnvironment assemble(const Circuit& c, int j, const std::vector<RedRef>& red, BlueCache* cache) const;

    Circuit shape_;
    Hamiltonian h_;
    ContractionOptions options_;
    std::vector<ContractionPlan> standard_;
    std::vector<std::vector<int>> reaching_;
    std::vector<std::vector<char>> reach_;
    std::int64_t max_dim_ = 1;

    mutable std::mutex plan_mutex_;
    mutable std::map<std::pair<int, std::vector<int>>, std::unique_ptr<ContractionPlan>> state_plans_;
};

/// Red operators of every term moving down the circuit together. After each advance, terms
/// whose supports coincide are summed into one operator and evolve as one from then on.
class RedFront {
public:
    RedFront(const Contractor& ctr, const Circuit& c);

    /// Process every gate above j, then merge coinciding supports.
    void advance(const Circuit& c, int j);
    /// Operators that reach gate j (valid until the next advance).
    std::vector<RedRef> reaching(int j) const;
    /// Sum of the scalar operators left after advance(c, 0).
    double energy() const;
    std::size_t groups() const noexcept { return groups_.size(); }

private:
    struct Group {
        int rep;
        Contractor::RedCursor cur;
    };
    const Contractor* ctr_;
    std::vector<Group> groups_;
};

/// <0|U† H U|0> through standard plans.
double execute_energy(const Circuit& c, const Hamiltonian& h, ContractionOptions options = {});
/// F_j via red/blue cone contraction.
CMatrix compute_f(const Circuit& c, const Hamiltonian& h, int j, ContractionOptions options = {});
/// Re Gamma_{j,b} for the Hermitian basis on gate j's wires, obtained as Re hs_inner(B^b, F_j).
std::vector<double> gamma_coefficients(const Circuit& c, const Hamiltonian& h, int j,
                                       ContractionOptions options = {});

}  // namespace qflow
