#include "qflow/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "qflow/error.hpp"

namespace qflow {

std::string to_string(UpdateOrder o) { return o == UpdateOrder::Sequential ? "sequential" : "random"; }
std::string to_string(StepRule r) { return r == StepRule::Fixed ? "fixed" : "line_search"; }
std::string to_string(Schedule s) { return s == Schedule::GaussSeidel ? "gauss_seidel" : "jacobi"; }

std::string to_string(Metric m) { return m == Metric::HilbertSchmidt ? "hilbert-schmidt" : "state"; }

std::string to_string(FlowStatus s) {
    switch (s) {
        case FlowStatus::Running: return "running";
        case FlowStatus::Converged: return "converged";
        case FlowStatus::Stalled: return "stalled";
        case FlowStatus::HalvingExhausted: return "halving-exhausted";
    }
    return "running";
}

UpdateOrder parse_update_order(const std::string& s) {
    if (s == "sequential") return UpdateOrder::Sequential;
    if (s == "random" || s == "random-permutation") return UpdateOrder::Random;
    throw InvalidArgument("unknown update_order \"" + s + "\"");
}

StepRule parse_step_rule(const std::string& s) {
    if (s == "fixed") return StepRule::Fixed;
    if (s == "line_search") return StepRule::LineSearch;
    throw InvalidArgument("unknown step_rule \"" + s + "\"");
}

Schedule parse_schedule(const std::string& s) {
    if (s == "gauss_seidel") return Schedule::GaussSeidel;
    if (s == "jacobi") return Schedule::Jacobi;
    throw InvalidArgument("unknown schedule \"" + s + "\"");
}

Metric parse_metric(const std::string& s) {
    if (s == "hilbert-schmidt") return Metric::HilbertSchmidt;
    if (s == "state") return Metric::State;
    throw InvalidArgument("unknown metric \"" + s + "\"");
}

void FlowConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be a positive number");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be a positive number");
    if (!(energy_tol > 0.0)) throw InvalidArgument("energy_tol must be positive");
    if (max_sweeps < 0) throw InvalidArgument("max_sweeps must be non-negative");
    if (patience < 1) throw InvalidArgument("patience must be at least 1");
    if (max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");
    if (inner_steps < 1) throw InvalidArgument("inner_steps must be at least 1");
    if (!(eta_growth >= 1.0)) throw InvalidArgument("eta_growth must be >= 1");
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
    if (!(metric_floor > 0.0) || !std::isfinite(metric_floor)) throw InvalidArgument("metric_floor must be a positive number");
    if (schedule == Schedule::Jacobi && step_rule == StepRule::LineSearch)
        throw InvalidArgument("the jacobi schedule supports only the fixed step rule");
}

std::vector<double> FlowRun::accepted_energies() const {
    std::vector<double> out;
    for (const auto& r : history)
        if (r.accepted) out.push_back(r.energy);
    return out;
}

CMatrix flow_kernel(const CMatrix& f) { return Complex(0.0, -1.0) * f; }

CMatrix optimal_generator(const CMatrix& f, double epsilon) {
    if (f.rows() != f.cols()) throw DimensionError("optimal_generator: f must be square");
    CMatrix g = -(f + f.adjoint());
    const double norm = g.norm();
    if (!(norm > kGeneratorFloor)) return CMatrix::Zero(f.rows(), f.cols());
    g *= std::sqrt(epsilon) / norm;
    return 0.5 * (g + g.adjoint());
}

CMatrix state_weighted_generator(const CMatrix& f, const CMatrix& sigma, double epsilon, double floor) {
    if (f.rows() != f.cols() || sigma.rows() != f.rows() || sigma.cols() != f.cols())
        throw DimensionError("state_weighted_generator: f and sigma must be square of equal size");
    const CMatrix g = -(f + f.adjoint());
    if (!(g.norm() > kGeneratorFloor)) return CMatrix::Zero(f.rows(), f.cols());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (sigma + sigma.adjoint()));
    const CMatrix& q = eig.eigenvectors();
    const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0);
    CMatrix a = q.adjoint() * g * q;
    for (Eigen::Index x = 0; x < a.rows(); ++x)
        for (Eigen::Index y = 0; y < a.cols(); ++y) a(x, y) /= s(x) + s(y) + floor;
    CMatrix w = q * a * q.adjoint();
    w = 0.5 * (w + w.adjoint()).eval();
    const double norm = w.norm();
    if (!(norm > kGeneratorFloor)) return CMatrix::Zero(f.rows(), f.cols());
    return w * (std::sqrt(epsilon) / norm);
}

CMatrix gate_generator(const GateEnvironment& env, const CMatrix& f, const FlowConfig& cfg) {
    if (cfg.metric == Metric::State)
        return state_weighted_generator(f, env.gate_state(), cfg.epsilon, cfg.metric_floor);
    return optimal_generator(f, cfg.epsilon);
}

double directional_derivative(const Contractor& ctr, const Circuit& c, int j, const CMatrix& g) {
    if (g.rows() != c.gate_dim(j) || g.cols() != g.rows()) throw DimensionError("generator does not match gate");
    if (!is_hermitian(g, 1e-10)) throw InvalidArgument("directional_derivative: generator is not Hermitian");
    return 2.0 * hs_inner(g, flow_kernel(ctr.compute_f(c, j))).real();
}

double directional_derivative(const Circuit& c, const Hamiltonian& h, int j, const CMatrix& g) {
    return directional_derivative(Contractor(c, h), c, j, g);
}

namespace {

void fix_unitary(CMatrix& u) {
    if (unitarity_defect(u) > 1e-12) u = nearest_unitary(u);
}

// Best angle along the geodesic; grid over two periods of the fastest mode, then Brent.
double exact_step(const GeodesicModel& model) {
    const double spread = model.spread();
    if (!(spread > kGeneratorFloor)) return 0.0;
    constexpr int grid = 48;
    const double span = 2.0 * std::numbers::pi / spread;
    const double h = span / grid;
    int best = 0;
    double best_e = model.energy(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double e = model.energy(i * h);
        if (e < best_e) {
            best_e = e;
            best = i;
        }
    }
    const double lo = std::max(0.0, (best - 1) * h);
    const double hi = (best + 1) * h;
    auto [theta, e] = boost::math::tools::brent_find_minima([&](double t) { return model.energy(t); }, lo, hi, 40);
    if (e > best_e) return best * h;
    return theta;
}

struct GateUpdate {
    double grad2 = 0.0;
};

GateUpdate update_gate(Circuit& c, GateEnvironment env, const FlowConfig& cfg, double eta) {
    GateUpdate out;
    CMatrix& u = c.gate(env.gate_id).unitary;
    for (int s = 0; s < (cfg.step_rule == StepRule::LineSearch ? cfg.inner_steps : 1); ++s) {
        const CMatrix f = flow_kernel(env.f());
        if (s == 0) out.grad2 = (f + f.adjoint()).squaredNorm();
        const CMatrix g = gate_generator(env, f, cfg);
        if (g.isZero(0.0)) break;
        double theta = eta;
        if (cfg.step_rule == StepRule::LineSearch) {
            theta = exact_step(GeodesicModel(env, g));
            if (theta == 0.0) break;
        }
        const CMatrix v = exp_hermitian(g, theta);
        u = v * u;
        if (cfg.step_rule == StepRule::LineSearch && s + 1 < cfg.inner_steps) env.rotate(v);
    }
    fix_unitary(u);
    return out;
}

}  // namespace

SweepResult sweep(Circuit& c, const Contractor& ctr, const FlowConfig& cfg, double eta, int index,
                  std::mt19937_64& rng, BlueCache* cache) {
    if (!ctr.compatible(c)) throw InvalidArgument("sweep: contractor was planned for a different circuit shape");
    const int m = c.n_gates();
    double grad2 = 0.0;
    BlueCache local;
    if (!cache) cache = &local;
    auto update = [&](GateEnvironment env) {
        const int j = env.gate_id;
        grad2 += update_gate(c, std::move(env), cfg, eta).grad2;
        cache->invalidate(j);
    };

    if (cfg.schedule == Schedule::Jacobi) {
        std::vector<CMatrix> gens(m);
        for (int j = 1; j <= m; ++j) {
            const GateEnvironment env = ctr.environment(c, j);
            const CMatrix f = flow_kernel(env.f());
            grad2 += (f + f.adjoint()).squaredNorm();
            gens[j - 1] = gate_generator(env, f, cfg);
        }
        for (int j = 1; j <= m; ++j) {
            CMatrix& u = c.gate(j).unitary;
            u = exp_hermitian(gens[j - 1], eta) * u;
            fix_unitary(u);
        }
        cache->clear();
    } else if (cfg.update_order == UpdateOrder::Random) {
        std::vector<int> order(m);
        std::iota(order.begin(), order.end(), 1);
        std::shuffle(order.begin(), order.end(), rng);
        for (int j : order) update(ctr.environment(c, j));
    } else if (index % 2 == 0) {
        // ascending: gates above j are untouched until j is reached, so every red operator
        // can be computed up front
        std::vector<std::vector<std::pair<int, WireOperator>>> snaps(m);
        RedFront front(ctr, c);
        for (int j = m; j >= 1; --j) {
            front.advance(c, j);
            for (const auto& r : front.reaching(j)) snaps[j - 1].emplace_back(r.term, *r.op);
        }
        for (int j = 1; j <= m; ++j) {
            std::vector<RedRef> red;
            for (const auto& [t, op] : snaps[j - 1]) red.push_back({t, &op});
            update(ctr.environment_from(c, j, red, cache));
            snaps[j - 1].clear();
        }
    } else {
        // descending: red operators advance through gates that were just updated
        RedFront front(ctr, c);
        for (int j = m; j >= 1; --j) {
            front.advance(c, j);
            update(ctr.environment_from(c, j, front.reaching(j), cache));
        }
        front.advance(c, 0);
        return SweepResult{front.energy(), std::sqrt(grad2)};
    }
    return SweepResult{ctr.energy(c), std::sqrt(grad2)};
}

std::pair<Circuit, double> sweep(const Circuit& c, const Hamiltonian& h, const FlowConfig& cfg) {
    cfg.validate();
    Circuit out = c;
    const Contractor ctr(c, h, ContractionOptions{cfg.cap, cfg.threads});
    std::mt19937_64 rng(cfg.seed);
    const auto res = sweep(out, ctr, cfg, cfg.eta, 0, rng);
    return {std::move(out), res.energy};
}

FlowRun run_flow(Circuit c, const Hamiltonian& h, const FlowConfig& cfg, const FlowObserver& observer) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double, std::milli>(clock::now() - start).count(); };

    const Contractor ctr(c, h, ContractionOptions{cfg.cap, cfg.threads});
    std::mt19937_64 rng(cfg.seed);
    FlowRun run;
    double energy = ctr.energy(c);
    double eta = cfg.eta;
    run.history.push_back(FlowRecord{0, 0, energy, 0.0, eta, elapsed(), true});
    if (observer) observer(run.history.back(), c);
    if (!std::isfinite(energy)) run.status = FlowStatus::Stalled;

    int step = 0;
    int failed = 0;
    int quiet = 0;
    BlueCache cache;
    while (run.status == FlowStatus::Running && run.sweeps < cfg.max_sweeps) {
        Circuit backup = c;
        ++step;
        const auto res = sweep(c, ctr, cfg, eta, run.sweeps, rng, &cache);
        FlowRecord rec{step, run.sweeps, res.energy, res.grad_norm, eta, 0.0, true};
        if (!std::isfinite(res.energy)) {
            c = std::move(backup);
            cache.clear();
            rec.accepted = false;
            rec.wall_ms = elapsed();
            run.history.push_back(rec);
            run.status = FlowStatus::Stalled;
            break;
        }
        if (res.energy > energy + kDescentSlack) {
            c = std::move(backup);
            cache.clear();
            rec.accepted = false;
            rec.wall_ms = elapsed();
            run.history.push_back(rec);
            if (observer) observer(rec, c);
            if (cfg.step_rule == StepRule::LineSearch) {
                // every gate already took its best angle; a smaller eta changes nothing
                run.status = FlowStatus::Converged;
                break;
            }
            if (!cfg.halving || failed >= cfg.max_halvings) {
                run.status = FlowStatus::HalvingExhausted;
                break;
            }
            ++failed;
            ++run.halvings;
            eta *= 0.5;
            continue;
        }
        failed = 0;
        ++run.sweeps;
        const double delta = energy - res.energy;
        energy = res.energy;
        rec.sweep = run.sweeps;
        rec.wall_ms = elapsed();
        run.history.push_back(rec);
        if (observer) observer(rec, c);
        if (std::isfinite(cfg.energy_tol)) {
            quiet = std::abs(delta) < cfg.energy_tol ? quiet + 1 : 0;
            if (quiet >= cfg.patience) run.status = FlowStatus::Converged;
        }
        eta = std::min(cfg.eta, eta * cfg.eta_growth);
    }
    run.energy = energy;
    run.circuit = std::move(c);

    const auto acc = run.accepted_energies();
    for (std::size_t i = 1; i < acc.size(); ++i)
        if (acc[i] > acc[i - 1] + kDescentSlack) throw Error("controller accepted an energy increase");
    return run;
}

double off_diagonal_norm(const CMatrix& h) {
    CMatrix o = h;
    o.diagonal().setZero();
    return o.norm();
}

CMatrix double_bracket_demo(const CMatrix& h, const CMatrix& k, int steps, double eta) {
    if (h.rows() != h.cols() || k.rows() != h.rows() || k.cols() != h.cols())
        throw DimensionError("double_bracket_demo: h and k must be square of equal size");
    if (h.rows() > 64) throw DimensionError("double_bracket_demo: dimension above 64");
    if (!is_hermitian(h, 1e-10)) throw InvalidArgument("double_bracket_demo: h is not Hermitian");
    if (off_diagonal_norm(k) != 0.0 || k.diagonal().imag().cwiseAbs().maxCoeff() != 0.0)
        throw InvalidArgument("double_bracket_demo: k must be real diagonal");
    std::vector<double> diag(k.rows());
    for (Eigen::Index i = 0; i < k.rows(); ++i) diag[i] = k(i, i).real();
    std::sort(diag.begin(), diag.end());
    if (std::adjacent_find(diag.begin(), diag.end()) != diag.end())
        throw InvalidArgument("double_bracket_demo: k has repeated diagonal entries");
    if (steps < 0 || !(eta > 0.0)) throw InvalidArgument("double_bracket_demo: need steps >= 0 and eta > 0");

    CMatrix cur = 0.5 * (h + h.adjoint());
    for (int s = 0; s < steps; ++s) {
        CMatrix g = Complex(0.0, 1.0) * (k * cur - cur * k);
        g = 0.5 * (g + g.adjoint()).eval();
        if (g.norm() < kGeneratorFloor) break;
        const CMatrix v = exp_hermitian(g, eta);
        cur = v * cur * v.adjoint();
        cur = 0.5 * (cur + cur.adjoint()).eval();
    }
    return cur;
}

}  // namespace qflow
