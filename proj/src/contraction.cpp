#include "qflow/contraction.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <set>

#include "qflow/error.hpp"

namespace qflow {

std::string to_string(StepKind k) {
    switch (k) {
        case StepKind::Conjugate: return "conjugate";
        case StepKind::ProjectIn: return "project_in";
        case StepKind::TraceOut: return "trace_out";
        case StepKind::Absorb: return "absorb";
    }
    return "conjugate";
}

namespace {

std::int64_t dim_of(const std::vector<int>& wires, const WireLayout& layout) {
    std::int64_t d = 1;
    for (int w : wires) d *= layout.dim(w);
    return d;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

bool intersects(const std::vector<int>& a, const std::vector<int>& b) {
    return std::any_of(a.begin(), a.end(), [&](int x) { return contains(b, x); });
}

// (support without gate wires) followed by the gate wires: the order the conjugation kernel uses.
std::vector<int> gate_last_order(const std::vector<int>& support, const std::vector<int>& gate_wires) {
    std::vector<int> out;
    for (int w : support)
        if (!contains(gate_wires, w)) out.push_back(w);
    out.insert(out.end(), gate_wires.begin(), gate_wires.end());
    return out;
}

// perm[i] = index in `to` ordering of composite index i in `from` ordering.
std::vector<Eigen::Index> permutation(const std::vector<int>& from, const std::vector<int>& to,
                                      const WireLayout& layout) {
    const std::size_t n = from.size();
    std::vector<int> dims(n);
    std::vector<Eigen::Index> stride(n);
    {
        std::vector<Eigen::Index> to_stride(to.size());
        Eigen::Index s = 1;
        for (std::size_t p = to.size(); p-- > 0;) {
            to_stride[p] = s;
            s *= layout.dim(to[p]);
        }
        for (std::size_t p = 0; p < n; ++p) {
            dims[p] = layout.dim(from[p]);
            const auto it = std::find(to.begin(), to.end(), from[p]);
            stride[p] = to_stride[static_cast<std::size_t>(it - to.begin())];
        }
    }
    Eigen::Index total = 1;
    for (int d : dims) total *= d;
    std::vector<Eigen::Index> perm(total);
    std::vector<int> digit(n, 0);
    Eigen::Index target = 0;
    for (Eigen::Index i = 0; i < total; ++i) {
        perm[i] = target;
        for (std::size_t p = n; p-- > 0;) {
            if (++digit[p] < dims[p]) {
                target += stride[p];
                break;
            }
            target -= stride[p] * (dims[p] - 1);
            digit[p] = 0;
        }
    }
    return perm;
}

// Composite indices (in `wires` ordering) whose digit for position `pos` equals `value`,
// listed in increasing order.
std::vector<Eigen::Index> slice_indices(const std::vector<int>& wires, std::size_t pos, int value,
                                        const WireLayout& layout) {
    Eigen::Index inner = 1;
    for (std::size_t p = pos + 1; p < wires.size(); ++p) inner *= layout.dim(wires[p]);
    const int dw = layout.dim(wires[pos]);
    Eigen::Index outer = 1;
    for (std::size_t p = 0; p < pos; ++p) outer *= layout.dim(wires[p]);
    std::vector<Eigen::Index> idx;
    idx.reserve(outer * inner);
    for (Eigen::Index o = 0; o < outer; ++o)
        for (Eigen::Index i = 0; i < inner; ++i) idx.push_back((o * dw + value) * inner + i);
    return idx;
}

// A <- (1 (x) left) A (1 (x) right) where the right-hand factor acts on the least significant digits.
void multiply_last(CMatrix& a, const CMatrix& left, const CMatrix& right) {
    const Eigen::Index dg = left.rows();
    const Eigen::Index n = a.rows();
    Eigen::Map<CMatrix> view(a.data(), dg, n * n / dg);
    view = (left * view).eval();
    for (Eigen::Index r = 0; r < n / dg; ++r) a.middleCols(r * dg, dg) = (a.middleCols(r * dg, dg) * right).eval();
}

void check_cap(std::int64_t dim, std::int64_t cap, const char* what) {
    if (dim > cap)
        throw ContractionError(std::string(what) + ": intermediate dimension " + std::to_string(dim) +
                               " exceeds dense cap " + std::to_string(cap));
}

}  // namespace

namespace kernel {

void reorder(WireOperator& op, const std::vector<int>& order, const WireLayout& layout) {
    if (op.wires == order) return;
    if (order.size() != op.wires.size()) throw InvalidArgument("reorder: order is not a permutation of the support");
    const auto perm = permutation(op.wires, order, layout);
    const auto n = static_cast<Eigen::Index>(perm.size());
    CMatrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(perm[i], perm[j]) = op.mat(i, j);
    op.mat = std::move(out);
    op.wires = order;
}

void extend_identity(WireOperator& op, const std::vector<int>& extra, const WireLayout& layout) {
    if (extra.empty()) return;
    const std::int64_t de = dim_of(extra, layout);
    op.mat = kron(op.mat, CMatrix::Identity(de, de), std::numeric_limits<std::int64_t>::max());
    op.wires.insert(op.wires.end(), extra.begin(), extra.end());
}

void conjugate(WireOperator& op, const Gate& gate, const WireLayout& layout, bool heisenberg) {
    std::vector<int> missing;
    for (int w : gate.wires)
        if (!contains(op.wires, w)) missing.push_back(w);
    if (!missing.empty()) {
        if (!heisenberg) throw ContractionError("state conjugation on a wire that was never absorbed");
        extend_identity(op, missing, layout);
    }
    reorder(op, gate_last_order(op.wires, gate.wires), layout);
    if (heisenberg)
        multiply_last(op.mat, gate.unitary.adjoint(), gate.unitary);
    else
        multiply_last(op.mat, gate.unitary, gate.unitary.adjoint());
}

void project_zero(WireOperator& op, int wire, const WireLayout& layout) {
    const auto it = std::find(op.wires.begin(), op.wires.end(), wire);
    if (it == op.wires.end()) throw ContractionError("project_zero: wire not in support");
    const auto pos = static_cast<std::size_t>(it - op.wires.begin());
    const auto idx = slice_indices(op.wires, pos, 0, layout);
    const auto n = static_cast<Eigen::Index>(idx.size());
    CMatrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = op.mat(idx[i], idx[j]);
    op.mat = std::move(out);
    op.wires.erase(it);
}

void trace_out(WireOperator& op, int wire, const WireLayout& layout) {
    const auto it = std::find(op.wires.begin(), op.wires.end(), wire);
    if (it == op.wires.end()) throw ContractionError("trace_out: wire not in support");
    const auto pos = static_cast<std::size_t>(it - op.wires.begin());
    const int dw = layout.dim(wire);
    const auto n = op.mat.rows() / dw;
    CMatrix out = CMatrix::Zero(n, n);
    for (int v = 0; v < dw; ++v) {
        const auto idx = slice_indices(op.wires, pos, v, layout);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) out(i, j) += op.mat(idx[i], idx[j]);
    }
    op.mat = std::move(out);
    op.wires.erase(it);
}

void absorb_zero(WireOperator& op, int wire, const WireLayout& layout) {
    if (contains(op.wires, wire)) throw ContractionError("absorb_zero: wire already in support");
    const int dw = layout.dim(wire);
    const auto n = op.mat.rows();
    CMatrix out = CMatrix::Zero(n * dw, n * dw);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i * dw, j * dw) = op.mat(i, j);
    op.mat = std::move(out);
    op.wires.push_back(wire);
}

}  // namespace kernel

PlanCost cost_model(const ContractionPlan& plan) {
    PlanCost cost;
    if (plan.steps.empty()) return cost;
    cost.max_dim = plan.max_intermediate_dim;
    for (const auto& s : plan.steps) {
        const double d = static_cast<double>(s.dim);
        if (s.kind == StepKind::Conjugate)
            cost.flops += 2.0 * static_cast<double>(s.gate_dim) * d * d;
        else
            cost.flops += d * d;
    }
    return cost;
}

namespace {

std::vector<int> first_touch(const Circuit& c) {
    std::vector<int> first(c.layout.size(), INT_MAX);
    for (const auto& g : c.gates)
        for (int w : g.wires) {
            auto& f = first[c.layout.position(w)];
            f = std::min(f, g.id);
        }
    return first;
}

}  // namespace

WireOperator term_operator(const Circuit& c, const LocalTerm& term) {
    WireOperator op;
    for (int s : term.support) {
        if (s < 1 || s > c.n_spins()) throw InvalidArgument("term site outside the circuit's spins");
        op.wires.push_back(c.spin_wire(s));
    }
    op.mat = term.op;
    return op;
}

ContractionPlan plan_standard(const Circuit& c, const LocalTerm& term, std::int64_t cap) {
    const auto first = first_touch(c);
    const int m = c.n_gates();
    ContractionPlan plan;
    plan.heisenberg = true;
    plan.target = PlanTarget{PlanTarget::Kind::Energy, -1, 0};
    std::vector<int> support = term_operator(c, term).wires;
    plan.initial_support = support;
    plan.max_intermediate_dim = dim_of(support, c.layout);
    check_cap(plan.max_intermediate_dim, cap, "plan_standard");

    auto project = [&](int stage, int threshold) {
        std::vector<int> q;
        for (int w : support)
            if (first[c.layout.position(w)] >= threshold) q.push_back(w);
        if (q.empty()) return;
        ContractionStep s;
        s.kind = StepKind::ProjectIn;
        s.wires = q;
        s.stage = stage;
        s.dim = dim_of(support, c.layout);
        for (int w : q) support.erase(std::find(support.begin(), support.end(), w));
        s.support = support;
        plan.steps.push_back(std::move(s));
    };

    project(m + 1, m + 1);
    for (int k = m; k >= 1; --k) {
        const Gate& g = c.gate(k);
        if (!intersects(g.wires, support)) continue;
        std::vector<int> next = support;
        for (int w : g.wires)
            if (!contains(next, w)) next.push_back(w);
        next = gate_last_order(next, g.wires);
        ContractionStep s;
        s.kind = StepKind::Conjugate;
        s.gate_id = k;
        s.wires = g.wires;
        s.stage = k;
        s.dim = dim_of(next, c.layout);
        s.gate_dim = dim_of(g.wires, c.layout);
        s.support = next;
        check_cap(s.dim, cap, "plan_standard");
        plan.max_intermediate_dim = std::max(plan.max_intermediate_dim, s.dim);
        support = std::move(next);
        plan.steps.push_back(std::move(s));
        project(k, k);
    }
    return plan;
}

ContractionPlan plan_state(const Circuit& c, int j, std::vector<int> keep, std::int64_t cap) {
    if (j < 0 || j > c.n_gates()) throw InvalidArgument("plan_state: gate index out of range");
    std::vector<int> cone = keep;
    std::vector<int> included;
    for (int k = j; k >= 1; --k) {
        const Gate& g = c.gate(k);
        if (!intersects(g.wires, cone)) continue;
        included.push_back(k);
        for (int w : g.wires)
            if (!contains(cone, w)) cone.push_back(w);
    }
    std::reverse(included.begin(), included.end());
    std::vector<int> last_use(c.layout.size(), 0);
    for (int k : included)
        for (int w : c.gate(k).wires) last_use[c.layout.position(w)] = k;

    ContractionPlan plan;
    plan.heisenberg = false;
    plan.target = PlanTarget{PlanTarget::Kind::Blue, -1, j};
    std::vector<int> support;

    auto absorb = [&](std::vector<int> wires, int stage) {
        if (wires.empty()) return;
        support.insert(support.end(), wires.begin(), wires.end());
        ContractionStep s;
        s.kind = StepKind::Absorb;
        s.wires = std::move(wires);
        s.stage = stage;
        s.dim = dim_of(support, c.layout);
        s.support = support;
        check_cap(s.dim, cap, "plan_state");
        plan.max_intermediate_dim = std::max(plan.max_intermediate_dim, s.dim);
        plan.steps.push_back(std::move(s));
    };

    for (int k : included) {
        const Gate& g = c.gate(k);
        std::vector<int> fresh;
        for (int w : g.wires)
            if (!contains(support, w)) fresh.push_back(w);
        absorb(fresh, k);
        support = gate_last_order(support, g.wires);
        ContractionStep s;
        s.kind = StepKind::Conjugate;
        s.gate_id = k;
        s.wires = g.wires;
        s.stage = k;
        s.dim = dim_of(support, c.layout);
        s.gate_dim = dim_of(g.wires, c.layout);
        s.support = support;
        plan.steps.push_back(std::move(s));

        std::vector<int> done;
        for (int w : support)
            if (!contains(keep, w) && last_use[c.layout.position(w)] == k) done.push_back(w);
        if (!done.empty()) {
            ContractionStep t;
            t.kind = StepKind::TraceOut;
            t.wires = done;
            t.stage = k;
            t.dim = dim_of(support, c.layout);
            for (int w : done) support.erase(std::find(support.begin(), support.end(), w));
            t.support = support;
            plan.steps.push_back(std::move(t));
        }
    }
    std::vector<int> untouched;
    for (int w : keep)
        if (!contains(support, w)) untouched.push_back(w);
    absorb(untouched, j);
    return plan;
}

void execute_steps(const ContractionPlan& plan, const Circuit& c, WireOperator& op, std::size_t begin,
                   std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        const auto& s = plan.steps[i];
        switch (s.kind) {
            case StepKind::Conjugate: kernel::conjugate(op, c.gate(s.gate_id), c.layout, plan.heisenberg); break;
            case StepKind::ProjectIn:
                for (int w : s.wires) kernel::project_zero(op, w, c.layout);
                break;
            case StepKind::TraceOut:
                for (int w : s.wires) kernel::trace_out(op, w, c.layout);
                break;
            case StepKind::Absorb:
                for (int w : s.wires) kernel::absorb_zero(op, w, c.layout);
                break;
        }
    }
}

CMatrix GateEnvironment::f() const {
    CMatrix out = CMatrix::Zero(gate_dim, gate_dim);
    for (const auto& b : blocks) {
        const Eigen::Index rest = b.state.rows() / gate_dim;
        for (Eigen::Index r = 0; r < rest; ++r)
            out.noalias() += b.state.middleRows(r * gate_dim, gate_dim) * b.hamiltonian.middleCols(r * gate_dim, gate_dim);
    }
    return out;
}

double GateEnvironment::energy() const {
    double e = 0.0;
    for (const auto& b : blocks) e += b.state.cwiseProduct(b.hamiltonian.transpose()).sum().real();
    return e;
}

CMatrix GateEnvironment::gate_state() const {
    CMatrix out = CMatrix::Zero(gate_dim, gate_dim);
    if (blocks.empty()) return out;
    const auto& st = blocks.front().state;
    for (Eigen::Index r = 0; r < st.rows() / gate_dim; ++r)
        out += st.block(r * gate_dim, r * gate_dim, gate_dim, gate_dim);
    return out;
}

void GateEnvironment::rotate(const CMatrix& v) {
    const CMatrix vd = v.adjoint();
    for (auto& b : blocks) multiply_last(b.state, v, vd);
}

GeodesicModel::GeodesicModel(const GateEnvironment& env, const CMatrix& g) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (g + g.adjoint()));
    lambda_ = eig.eigenvalues();
    const CMatrix& q = eig.eigenvectors();
    const CMatrix qd = q.adjoint();
    const Eigen::Index dg = env.gate_dim;
    coeff_ = CMatrix::Zero(dg, dg);
    for (const auto& b : env.blocks) {
        CMatrix s = b.state;
        CMatrix h = b.hamiltonian;
        multiply_last(s, qd, q);
        multiply_last(h, qd, q);
        const Eigen::Index n = s.rows();
        for (Eigen::Index col = 0; col < n; ++col)
            for (Eigen::Index row = 0; row < n; ++row) coeff_(row % dg, col % dg) += s(row, col) * h(col, row);
    }
    spread_ = lambda_.size() ? lambda_.maxCoeff() - lambda_.minCoeff() : 0.0;
}

double GeodesicModel::energy(double theta) const {
    const Eigen::VectorXcd z = (Complex(0, -theta) * lambda_.cast<Complex>()).array().exp();
    return (z.transpose() * coeff_ * z.conjugate()).value().real();
}

double GeodesicModel::derivative(double theta) const {
    const Eigen::VectorXcd z = (Complex(0, -theta) * lambda_.cast<Complex>()).array().exp();
    const Eigen::VectorXcd lz = lambda_.cast<Complex>().cwiseProduct(z);
    const Complex d = (lz.transpose() * coeff_ * z.conjugate()).value() - (z.transpose() * coeff_ * lz.conjugate()).value();
    return (Complex(0, -1) * d).real();
}

Contractor::Contractor(const Circuit& shape, const Hamiltonian& h, ContractionOptions options)
    : shape_(shape), h_(h), options_(options) {
    if (h.n_sites != shape.n_spins()) throw InvalidArgument("Hamiltonian and circuit have different spin counts");
    validate(shape_, 1e-8);
    standard_.reserve(h_.terms.size());
    for (const auto& t : h_.terms) {
        standard_.push_back(plan_standard(shape_, t, options_.cap));
        max_dim_ = std::max(max_dim_, standard_.back().max_intermediate_dim);
    }
    const int m = shape_.n_gates();
    reaching_.assign(m, {});
    reach_.assign(m, std::vector<char>(standard_.size(), 0));
    for (std::size_t t = 0; t < standard_.size(); ++t)
        for (int j = 1; j <= m; ++j)
            if (intersects(red_support(t, j), shape_.gate(j).wires)) {
                reaching_[j - 1].push_back(static_cast<int>(t));
                reach_[j - 1][t] = 1;
            }
    // dry run: every blue cone the flow will need must fit under the cap
    for (int j = 1; j <= m; ++j)
        for (int t : reaching_[j - 1]) max_dim_ = std::max(max_dim_, state_plan(j, block_wires(t, j)).max_intermediate_dim);
}

std::vector<int> Contractor::red_support(std::size_t term, int j) const {
    const auto& plan = standard_.at(term);
    std::vector<int> support = plan.initial_support;
    for (const auto& s : plan.steps) {
        if (s.stage <= j) break;
        support = s.support;
    }
    return support;
}

std::vector<int> Contractor::block_wires(std::size_t term, int j) const {
    const auto& gw = shape_.gate(j).wires;
    std::vector<int> rest;
    for (int w : red_support(term, j))
        if (!contains(gw, w)) rest.push_back(w);
    std::sort(rest.begin(), rest.end());
    rest.insert(rest.end(), gw.begin(), gw.end());
    return rest;
}

const ContractionPlan& Contractor::state_plan(int j, const std::vector<int>& keep) const {
    std::lock_guard<std::mutex> lock(plan_mutex_);
    auto key = std::make_pair(j, keep);
    auto it = state_plans_.find(key);
    if (it == state_plans_.end())
        it = state_plans_.emplace(key, std::make_unique<ContractionPlan>(plan_state(shape_, j, keep, options_.cap)))
                 .first;
    return *it->second;
}

std::vector<double> Contractor::term_energies(const Circuit& c) const {
    const auto n = static_cast<long>(standard_.size());
    std::vector<double> out(n, 0.0);
    std::vector<double> residue(n, 0.0);
#pragma omp parallel for num_threads(options_.threads) schedule(dynamic)
    for (long t = 0; t < n; ++t) {
        WireOperator op = term_operator(c, h_.terms[t]);
        const auto& plan = standard_[t];
        execute_steps(plan, c, op, 0, plan.steps.size());
        out[t] = op.mat(0, 0).real();
        residue[t] = op.mat(0, 0).imag();
    }
    for (long t = 0; t < n; ++t)
        if (std::isfinite(residue[t]) && std::abs(residue[t]) > 1e-10)
            throw ContractionError("energy term " + std::to_string(t) + " has imaginary residue " +
                                   std::to_string(residue[t]));
    return out;
}

double Contractor::energy(const Circuit& c) const {
    RedFront front(*this, c);
    for (int j = c.n_gates(); j >= 0; --j) front.advance(c, j);
    return front.energy();
}

Contractor::RedCursor Contractor::start_red(const Circuit& c, std::size_t term) const {
    return RedCursor{term_operator(c, h_.terms.at(term)), 0};
}

void Contractor::advance(RedCursor& cur, const Circuit& c, std::size_t term, int j) const {
    const auto& plan = standard_.at(term);
    std::size_t end = cur.next;
    while (end < plan.steps.size() && plan.steps[end].stage > j) ++end;
    execute_steps(plan, c, cur.op, cur.next, end);
    cur.next = end;
}

GateEnvironment Contractor::assemble(const Circuit& c, int j, const std::vector<RedRef>& red,
                                     BlueCache* cache) const {
    GateEnvironment env;
    env.gate_id = j;
    env.gate_dim = static_cast<Eigen::Index>(c.gate_dim(j));

    std::vector<std::vector<int>> keys;
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < red.size(); ++i) {
        auto key = block_wires(red[i].term, j);
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(std::move(key));
            members.emplace_back();
            it = keys.end() - 1;
        }
        members[static_cast<std::size_t>(it - keys.begin())].push_back(i);
    }
    env.blocks.resize(keys.size());
    const auto nb = static_cast<long>(keys.size());
#pragma omp parallel for num_threads(options_.threads) schedule(dynamic)
    for (long b = 0; b < nb; ++b) {
        ConeBlock& blk = env.blocks[b];
        blk.wires = keys[b];
        const auto dim = dim_of(blk.wires, c.layout);
        blk.hamiltonian = CMatrix::Zero(dim, dim);
        for (std::size_t i : members[b]) {
            WireOperator a = *red[i].op;
            std::vector<int> missing;
            for (int w : blk.wires)
                if (!contains(a.wires, w)) missing.push_back(w);
            kernel::extend_identity(a, missing, c.layout);
            kernel::reorder(a, blk.wires, c.layout);
            blk.hamiltonian += a.mat;
            blk.terms.push_back(red[i].term);
        }
        const ContractionPlan& plan = state_plan(j, blk.wires);
        WireOperator rho;
        if (cache) {
            rho = cache->run(plan, c);
        } else {
            rho = WireOperator{{}, CMatrix::Ones(1, 1)};
            execute_steps(plan, c, rho, 0, plan.steps.size());
        }
        kernel::reorder(rho, blk.wires, c.layout);
        blk.state = std::move(rho.mat);
    }
    return env;
}

GateEnvironment Contractor::environment_from(const Circuit& c, int j, const std::vector<RedRef>& red,
                                             BlueCache* cache) const {
    if (j < 1 || j > c.n_gates()) throw InvalidArgument("gate id " + std::to_string(j) + " out of range");
    for (const auto& r : red)
        if (!r.op || r.term < 0 || static_cast<std::size_t>(r.term) >= standard_.size() || !reaches(r.term, j))
            throw InvalidArgument("environment_from: red operator does not reach gate " + std::to_string(j));
    return assemble(c, j, red, cache);
}

GateEnvironment Contractor::environment(const Circuit& c, int j, bool all_terms) const {
    if (j < 1 || j > c.n_gates()) throw InvalidArgument("gate id " + std::to_string(j) + " out of range");
    std::vector<int> terms;
    if (all_terms)
        for (std::size_t t = 0; t < standard_.size(); ++t) terms.push_back(static_cast<int>(t));
    else
        terms = reaching_terms(j);
    std::vector<WireOperator> ops(terms.size());
    const auto n = static_cast<long>(terms.size());
#pragma omp parallel for num_threads(options_.threads) schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        RedCursor cur = start_red(c, terms[i]);
        advance(cur, c, terms[i], j);
        ops[i] = std::move(cur.op);
    }
    std::vector<RedRef> red;
    for (std::size_t i = 0; i < ops.size(); ++i) red.push_back({terms[i], &ops[i]});
    return assemble(c, j, red, nullptr);
}

CMatrix Contractor::compute_f(const Circuit& c, int j) const { return environment(c, j, true).f(); }

PlanCost Contractor::sweep_cost() const {
    PlanCost total;
    for (const auto& p : standard_) {
        const auto pc = cost_model(p);
        total.flops += pc.flops;
        total.max_dim = std::max(total.max_dim, pc.max_dim);
    }
    for (int j = 1; j <= shape_.n_gates(); ++j) {
        std::set<std::vector<int>> keys;
        for (int t : reaching_[j - 1]) keys.insert(block_wires(t, j));
        const double dg = static_cast<double>(shape_.gate_dim(j));
        for (const auto& k : keys) {
            const auto pc = cost_model(state_plan(j, k));
            const double d = static_cast<double>(dim_of(k, shape_.layout));
            total.flops += pc.flops + dg * d * d;
            total.max_dim = std::max(total.max_dim, pc.max_dim);
        }
    }
    return total;
}

double execute_energy(const Circuit& c, const Hamiltonian& h, ContractionOptions options) {
    return Contractor(c, h, options).energy(c);
}

CMatrix compute_f(const Circuit& c, const Hamiltonian& h, int j, ContractionOptions options) {
    return Contractor(c, h, options).compute_f(c, j);
}

std::vector<double> gamma_coefficients(const Circuit& c, const Hamiltonian& h, int j, ContractionOptions options) {
    const CMatrix f = compute_f(c, h, j, options);
    const auto basis = hermitian_basis(static_cast<int>(f.rows()));
    std::vector<double> out;
    out.reserve(basis.size());
    for (const auto& b : basis) out.push_back(hs_inner(b, f).real());
    return out;
}

RedFront::RedFront(const Contractor& ctr, const Circuit& c) : ctr_(&ctr) {
    if (!ctr.compatible(c)) throw InvalidArgument("circuit does not match the contractor's shape");
    const auto n = ctr.hamiltonian().terms.size();
    groups_.reserve(n);
    for (std::size_t t = 0; t < n; ++t) groups_.push_back({static_cast<int>(t), ctr.start_red(c, t)});
}

void RedFront::advance(const Circuit& c, int j) {
    const auto n = static_cast<long>(groups_.size());
#pragma omp parallel for num_threads(ctr_->options().threads) schedule(dynamic)
    for (long g = 0; g < n; ++g) ctr_->advance(groups_[g].cur, c, groups_[g].rep, j);

    std::vector<Group> merged;
    std::vector<std::vector<int>> keys;
    merged.reserve(groups_.size());
    for (auto& g : groups_) {
        auto key = g.cur.op.wires;
        std::sort(key.begin(), key.end());
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(std::move(key));
            merged.push_back(std::move(g));
            continue;
        }
        Group& into = merged[static_cast<std::size_t>(it - keys.begin())];
        kernel::reorder(g.cur.op, into.cur.op.wires, c.layout);
        into.cur.op.mat += g.cur.op.mat;
    }
    groups_ = std::move(merged);
}

std::vector<RedRef> RedFront::reaching(int j) const {
    std::vector<RedRef> out;
    for (const auto& g : groups_)
        if (ctr_->reaches(g.rep, j)) out.push_back({g.rep, &g.cur.op});
    return out;
}

double RedFront::energy() const {
    Complex e = 0.0;
    for (const auto& g : groups_) {
        if (!g.cur.op.wires.empty()) throw ContractionError("red front has not reached the input");
        e += g.cur.op.mat(0, 0);
    }
    if (std::isfinite(e.imag()) && std::abs(e.imag()) > 1e-10)
        throw ContractionError("energy has imaginary residue " + std::to_string(e.imag()));
    return e.real();
}

WireOperator BlueCache::run(const ContractionPlan& plan, const Circuit& c) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (root_.state.mat.size() == 0) root_.state = WireOperator{{}, CMatrix::Ones(1, 1)};
    Node* node = &root_;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& s = plan.steps[i];
        Node* next = nullptr;
        for (const auto& ch : node->children)
            if (ch->kind == s.kind && ch->gate_id == s.gate_id && ch->wires == s.wires) {
                next = ch.get();
                break;
            }
        if (!next) {
            auto fresh = std::make_unique<Node>();
            fresh->kind = s.kind;
            fresh->gate_id = s.gate_id;
            fresh->wires = s.wires;
            fresh->state = node->state;
            lock.unlock();
            execute_steps(plan, c, fresh->state, i, i + 1);
            lock.lock();
            const std::size_t size = static_cast<std::size_t>(fresh->state.mat.size()) * sizeof(Complex);
            if (bytes_ + size > max_bytes_) {
                lock.unlock();
                WireOperator op = std::move(fresh->state);
                execute_steps(plan, c, op, i + 1, plan.steps.size());
                return op;
            }
            bytes_ += size;
            node->children.push_back(std::move(fresh));
            next = node->children.back().get();
        }
        node = next;
    }
    return node->state;
}

std::size_t BlueCache::drop(Node& n, int gate) {
    std::size_t freed = 0;
    for (auto it = n.children.begin(); it != n.children.end();) {
        Node& ch = **it;
        if (ch.kind == StepKind::Conjugate && ch.gate_id == gate) {
            std::vector<Node*> stack{&ch};
            while (!stack.empty()) {
                Node* x = stack.back();
                stack.pop_back();
                freed += static_cast<std::size_t>(x->state.mat.size()) * sizeof(Complex);
                for (auto& y : x->children) stack.push_back(y.get());
            }
            it = n.children.erase(it);
        } else {
            freed += drop(ch, gate);
            ++it;
        }
    }
    return freed;
}

void BlueCache::invalidate(int gate) {
    std::lock_guard<std::mutex> lock(mutex_);
    bytes_ -= drop(root_, gate);
}

void BlueCache::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    root_.children.clear();
    bytes_ = 0;
}

}  // namespace qflow
