#include "qflow/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "qflow/error.hpp"
#include "qflow/oracle.hpp"

namespace qflow {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_ms(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void apply_options(RunConfig& cfg, const CliOptions& opts) {
    if (opts.seed) cfg.flow.seed = *opts.seed;
    if (opts.threads) {
        if (*opts.threads < 1) throw ConfigError("--threads must be at least 1");
        cfg.flow.threads = *opts.threads;
    }
    if (opts.out) cfg.output.dir = *opts.out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
}

json resolved_config(const RunConfig& cfg) {
    json terms = json::array();
    for (const auto& t : cfg.model.terms) terms.push_back({{"support", t.support}, {"matrix", matrix_to_json(t.op)}});
    json model = {{"type", cfg.model.type}, {"n", cfg.model.n}, {"boundary", to_string(cfg.model.boundary)}};
    if (cfg.model.type == "heisenberg") model["j"] = cfg.model.j;
    if (cfg.model.type == "custom") model["terms"] = terms;
    json ansatz = {{"type", cfg.ansatz.type}, {"init", cfg.ansatz.init}};
    if (cfg.ansatz.type == "staircase") ansatz["d"] = cfg.ansatz.d;
    if (cfg.ansatz.type == "custom") ansatz["file"] = cfg.ansatz.file;
    json reference = cfg.reference == "value" ? json(cfg.reference_value) : json(cfg.reference);
    return {{"model", model},
            {"ansatz", ansatz},
            {"flow", flow_config_to_json(cfg.flow)},
            {"output",
             {{"dir", cfg.output.dir}, {"timing", cfg.output.timing}, {"checkpoint_every", cfg.output.checkpoint_every}}},
            {"restarts", cfg.restarts},
            {"reference", reference}};
}

std::string results_csv(const FlowRun& run, std::optional<double> e0, bool timing) {
    std::ostringstream s;
    s << "step,sweep,energy,rel_error,grad_norm,eta,wall_ms\n";
    for (const auto& r : run.history) {
        s << r.step << ',' << r.sweep << ',' << fmt_double(r.energy) << ','
          << (e0 ? fmt_double(relative_error(r.energy, *e0)) : std::string()) << ',' << fmt_double(r.grad_norm) << ','
          << fmt_double(r.eta) << ',' << fmt_ms(timing ? r.wall_ms : 0.0) << '\n';
    }
    return s.str();
}

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

void apply_environment(CliOptions& opts) {
    if (!opts.out)
        if (const char* v = std::getenv("QFLOW_OUT"); v && *v) opts.out = v;
    if (!opts.threads)
        if (const char* v = std::getenv("QFLOW_THREADS"); v && *v) {
            char* end = nullptr;
            const long t = std::strtol(v, &end, 10);
            if (*end != '\0' || t < 1) throw ConfigError("QFLOW_THREADS must be a positive integer");
            opts.threads = static_cast<int>(t);
        }
}

double relative_error(double e, double e0) { return (e - e0) / std::abs(e0); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::optional<double> resolve_reference(const RunConfig& cfg, const Hamiltonian& h) {
    if (cfg.reference == "none") return std::nullopt;
    if (cfg.reference == "value") return cfg.reference_value;
    if (cfg.model.type == "ising") return ising_free_fermion_energy(h.n_sites, h.boundary);
    if (h.n_sites <= 16) return exact_spectrum(h, 1).lowest_eigenvalues.front();
    return std::nullopt;
}

int cmd_run(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunConfig cfg = load_config(config_path);
        apply_options(cfg, opts);
        cfg.flow.validate();
        const Hamiltonian h = build_hamiltonian(cfg.model);
        const auto e0 = resolve_reference(cfg, h);
        ensure_dir(cfg.output.dir);
        const fs::path dir(cfg.output.dir);

        std::vector<FlowRun> runs;
        GateCounts counts;
        for (int r = 0; r < cfg.restarts; ++r) {
            const std::uint64_t init_seed = derive_seed(cfg.flow.seed, 2u * r);
            Circuit c = build_ansatz(cfg.ansatz, cfg.model.n, cfg.model.boundary, init_seed, cfg.flow.cap);
            counts = count_gates(c);
            FlowConfig fc = cfg.flow;
            fc.seed = derive_seed(cfg.flow.seed, 2u * r + 1);
            const std::string ckpt = (dir / (cfg.restarts > 1 ? "checkpoint_r" + std::to_string(r) + ".json"
                                                                : std::string("checkpoint.json")))
                                         .string();
            std::vector<FlowRecord> seen;
            FlowObserver observer;
            if (cfg.output.checkpoint_every > 0)
                observer = [&](const FlowRecord& rec, const Circuit& cur) {
                    seen.push_back(rec);
                    if (rec.accepted && rec.sweep > 0 && rec.sweep % cfg.output.checkpoint_every == 0)
                        write_checkpoint(ckpt, cur, fc, seen, r);
                };
            runs.push_back(run_flow(std::move(c), h, fc, observer));
            const FlowRun& run = runs.back();
            out << "restart " << r << ": energy " << fmt_double(run.energy) << " after " << run.sweeps
                << " sweeps (" << to_string(run.status) << ")\n";
            if (cfg.restarts > 1)
                write_text_file((dir / ("results_r" + std::to_string(r) + ".csv")).string(),
                                results_csv(run, e0, cfg.output.timing));
        }
        std::size_t best = 0;
        for (std::size_t r = 1; r < runs.size(); ++r)
            if (runs[r].energy < runs[best].energy) best = r;
        const FlowRun& run = runs[best];
        write_text_file((dir / "results.csv").string(), results_csv(run, e0, cfg.output.timing));
        write_checkpoint((dir / "final_circuit.json").string(), run.circuit, cfg.flow, run.history,
                         static_cast<int>(best));

        json restarts = json::array();
        for (std::size_t r = 0; r < runs.size(); ++r)
            restarts.push_back({{"restart", r},
                                {"energy", runs[r].energy},
                                {"sweeps", runs[r].sweeps},
                                {"halvings", runs[r].halvings},
                                {"status", to_string(runs[r].status)}});
        json meta = {
            {"seed", cfg.flow.seed},
            {"config", cfg.raw},
            {"resolved_config", resolved_config(cfg)},
            {"status", to_string(run.status)},
            {"best_restart", best},
            {"energy", run.energy},
            {"reference", e0 ? json(*e0) : json(nullptr)},
            {"rel_error", e0 ? json(relative_error(run.energy, *e0)) : json(nullptr)},
            {"coupling", h.coupling},
            {"restarts", restarts},
            {"gate_counts",
             {{"total", counts.total},
              {"isometries", counts.isometries},
              {"disentanglers", counts.disentanglers},
              {"staircase_steps", counts.staircase_steps},
              {"qca", counts.qca},
              {"generic", counts.generic}}},
            {"threads", cfg.flow.threads},
            {"versions", {{"qflow", kVersion}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                            std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}}}};
        write_text_file((dir / "run.json").string(), meta.dump(2) + "\n");
        if (e0) out << "reference " << fmt_double(*e0) << ", rel_error " << fmt_double(relative_error(run.energy, *e0)) << '\n';
        const bool failed = run.status == FlowStatus::Stalled || run.status == FlowStatus::HalvingExhausted;
        return failed ? 2 : 0;
    });
}

int cmd_gradcheck(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        RunConfig cfg = load_config(config_path);
        apply_options(cfg, opts);
        const Hamiltonian h = build_hamiltonian(cfg.model);
        Circuit c = build_ansatz(cfg.ansatz, cfg.model.n, cfg.model.boundary, derive_seed(cfg.flow.seed, 0),
                                 cfg.flow.cap);
        const Contractor ctr(c, h, ContractionOptions{cfg.flow.cap, cfg.flow.threads});
        std::mt19937_64 rng(derive_seed(cfg.flow.seed, 1));
        std::uniform_int_distribution<int> pick(1, c.n_gates());
        const double eta = cfg.gradcheck.fd_step;
        double worst = 0.0;
        out << "sample,gate,predicted,finite_difference,rel_deviation\n";
        for (int s = 0; s < cfg.gradcheck.samples; ++s) {
            const int j = pick(rng);
            CMatrix g = random_hermitian(static_cast<int>(c.gate_dim(j)), rng);
            g /= g.norm();
            CMatrix f = ctr.compute_f(c, j);
            if (cfg.gradcheck.corrupt) f *= 1.05;
            const double predicted = 2.0 * hs_inner(g, flow_kernel(f)).real();
            Circuit plus = c;
            Circuit minus = c;
            plus.gate(j).unitary = exp_hermitian(g, eta) * c.gate(j).unitary;
            minus.gate(j).unitary = exp_hermitian(g, -eta) * c.gate(j).unitary;
            const double fd = (ctr.energy(plus) - ctr.energy(minus)) / (2.0 * eta);
            const double dev = std::abs(predicted - fd) / std::max({std::abs(fd), std::abs(predicted), 1e-6});
            worst = std::max(worst, dev);
            out << s << ',' << j << ',' << fmt_double(predicted) << ',' << fmt_double(fd) << ',' << fmt_double(dev)
                << '\n';
        }
        out << "max relative deviation: " << fmt_double(worst) << " (tolerance " << fmt_double(cfg.gradcheck.tol)
            << ")\n";
        return worst <= cfg.gradcheck.tol ? 0 : 3;
    });
}

int cmd_oracle(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunConfig cfg = load_config(config_path);
        apply_options(cfg, opts);
        std::vector<ModelConfig> cases = cfg.oracle.cases;
        if (cases.empty()) cases.push_back(cfg.model);
        std::ostringstream csv;
        csv << "model,n,boundary,E0,E1\n";
        const int k = std::max(2, cfg.oracle.k);
        for (const auto& m : cases) {
            const Hamiltonian h = build_hamiltonian(m);
            double e0 = std::numeric_limits<double>::quiet_NaN();
            double e1 = e0;
            if (m.n <= 16) {
                const auto spec = exact_spectrum(h, k);
                e0 = spec.lowest_eigenvalues[0];
                e1 = spec.lowest_eigenvalues[1];
            } else if (m.type == "ising") {
                e0 = ising_free_fermion_energy(m.n, m.boundary);
            } else if (m.n <= kLanczosMaxSites) {
                const auto spec = lanczos_spectrum(h, k);
                e0 = spec.lowest_eigenvalues[0];
                e1 = spec.lowest_eigenvalues[1];
            } else {
                throw InvalidArgument("no exact reference for " + m.type + " with n = " + std::to_string(m.n));
            }
            csv << m.type << ',' << m.n << ',' << to_string(m.boundary) << ',' << fmt_double(e0) << ','
                << fmt_double(e1) << '\n';
        }
        ensure_dir(cfg.output.dir);
        write_text_file((fs::path(cfg.output.dir) / "oracle.csv").string(), csv.str());
        out << csv.str();
        return 0;
    });
}

int cmd_bench(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunConfig cfg = load_config(config_path);
        apply_options(cfg, opts);
        if (cfg.bench.grid.empty()) throw ConfigError("bench grid is empty");
        if (cfg.model.type == "custom") throw ConfigError("bench needs a heisenberg or ising model");
        using clock = std::chrono::steady_clock;
        std::ostringstream csv;
        csv << "n,d,sweep_ms,flop_estimate\n";
        for (const auto& pt : cfg.bench.grid) {
            ModelConfig m = cfg.model;
            m.n = pt.n;
            AnsatzConfig a = cfg.ansatz;
            a.d = pt.d;
            const Hamiltonian h = build_hamiltonian(m);
            Circuit c = build_ansatz(a, pt.n, m.boundary, derive_seed(cfg.flow.seed, 0), cfg.flow.cap);
            const Contractor ctr(c, h, ContractionOptions{cfg.flow.cap, cfg.flow.threads});
            std::mt19937_64 rng(derive_seed(cfg.flow.seed, 1));
            sweep(c, ctr, cfg.flow, cfg.flow.eta, 0, rng);
            double best = std::numeric_limits<double>::infinity();
            for (int rep = 0; rep < cfg.bench.repeats; ++rep) {
                const auto t0 = clock::now();
                for (int s = 0; s < cfg.bench.sweeps; ++s) sweep(c, ctr, cfg.flow, cfg.flow.eta, s, rng);
                const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
                best = std::min(best, ms / cfg.bench.sweeps);
            }
            csv << pt.n << ',' << pt.d << ',' << fmt_ms(best) << ',' << fmt_double(ctr.sweep_cost().flops) << '\n';
        }
        ensure_dir(cfg.output.dir);
        write_text_file((fs::path(cfg.output.dir) / "bench.csv").string(), csv.str());
        out << csv.str();
        return 0;
    });
}

}  // namespace qflow
