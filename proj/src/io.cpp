#include "qflow/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qflow/error.hpp"

namespace qflow {

json matrix_to_json(const CMatrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back({m(r, c).real(), m(r, c).imag()});
    return out;
}

CMatrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw InvalidArgument("matrix must be a non-empty array");
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(j.size()))));
    if (n * n != static_cast<Eigen::Index>(j.size()))
        throw InvalidArgument("matrix has " + std::to_string(j.size()) + " entries, not a square count");
    CMatrix m(n, n);
    for (Eigen::Index k = 0; k < n * n; ++k) {
        const json& e = j[static_cast<std::size_t>(k)];
        Complex v;
        if (e.is_number())
            v = e.get<double>();
        else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
            v = Complex(e[0].get<double>(), e[1].get<double>());
        else
            throw InvalidArgument("matrix entry " + std::to_string(k) + " must be [re, im]");
        m(k / n, k % n) = v;
    }
    return m;
}

json circuit_to_json(const Circuit& c) {
    json wires = json::array();
    for (const auto& w : c.layout.wires()) wires.push_back({{"id", w.id}, {"dim", w.dim}});
    json gates = json::array();
    for (const auto& g : c.gates)
        gates.push_back({{"id", g.id},
                         {"wires", g.wires},
                         {"role", to_string(g.role)},
                         {"layer", g.layer},
                         {"unitary", matrix_to_json(g.unitary)}});
    return {{"format", "qflow-circuit"},
            {"class", to_string(c.class_tag)},
            {"refinement", c.refinement},
            {"wires", wires},
            {"spin_wires", c.spin_wires},
            {"gates", gates}};
}

Circuit circuit_from_json(const json& j) {
    try {
        Circuit c;
        std::vector<Wire> wires;
        for (const auto& w : j.at("wires")) wires.push_back(Wire{w.at("id").get<int>(), w.at("dim").get<int>()});
        c.layout = WireLayout(std::move(wires));
        c.spin_wires = j.at("spin_wires").get<std::vector<int>>();
        c.class_tag = j.contains("class") ? parse_circuit_class(j["class"].get<std::string>()) : CircuitClass::Custom;
        c.refinement = j.value("refinement", 0);
        for (const auto& g : j.at("gates")) {
            Gate gate;
            gate.id = g.at("id").get<int>();
            gate.wires = g.at("wires").get<std::vector<int>>();
            gate.role = g.contains("role") ? parse_gate_role(g["role"].get<std::string>()) : GateRole::Generic;
            gate.layer = g.value("layer", 0);
            gate.unitary = matrix_from_json(g.at("unitary"));
            c.gates.push_back(std::move(gate));
        }
        validate(c, 1e-10);
        return c;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed circuit JSON: ") + e.what());
    }
}

json plan_to_json(const ContractionPlan& plan) {
    json steps = json::array();
    for (const auto& s : plan.steps) {
        json step = {{"kind", to_string(s.kind)}, {"stage", s.stage}, {"wires", s.wires}, {"dim", s.dim},
                     {"support", s.support}};
        if (s.kind == StepKind::Conjugate) step["gate"] = s.gate_id;
        steps.push_back(std::move(step));
    }
    return {{"heisenberg", plan.heisenberg},
            {"initial_support", plan.initial_support},
            {"max_intermediate_dim", plan.max_intermediate_dim},
            {"steps", steps}};
}

json flow_config_to_json(const FlowConfig& cfg) {
    json tol = std::isfinite(cfg.energy_tol) ? json(cfg.energy_tol) : json("inf");
    return {{"eta", cfg.eta},
            {"epsilon", cfg.epsilon},
            {"max_sweeps", cfg.max_sweeps},
            {"energy_tol", tol},
            {"patience", cfg.patience},
            {"update_order", to_string(cfg.update_order)},
            {"seed", cfg.seed},
            {"halving", cfg.halving},
            {"max_halvings", cfg.max_halvings},
            {"step_rule", to_string(cfg.step_rule)},
            {"inner_steps", cfg.inner_steps},
            {"schedule", to_string(cfg.schedule)},
            {"eta_growth", cfg.eta_growth},
            {"metric", to_string(cfg.metric)},
            {"metric_floor", cfg.metric_floor},
            {"threads", cfg.threads},
            {"cap", cfg.cap}};
}

json history_to_json(const std::vector<FlowRecord>& history) {
    json out = json::array();
    for (const auto& r : history)
        out.push_back({{"step", r.step},
                       {"sweep", r.sweep},
                       {"energy", r.energy},
                       {"grad_norm", r.grad_norm},
                       {"eta", r.eta},
                       {"accepted", r.accepted}});
    return out;
}

void write_checkpoint(const std::string& path, const Circuit& c, const FlowConfig& cfg,
                      const std::vector<FlowRecord>& history, int restart) {
    const json j = {{"format", "qflow-checkpoint"},
                    {"restart", restart},
                    {"circuit", circuit_to_json(c)},
                    {"flow", flow_config_to_json(cfg)},
                    {"history", history_to_json(history)}};
    write_text_file(path, j.dump(1) + "\n");
}

Circuit load_circuit_file(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
    if (j.contains("circuit")) return circuit_from_json(j["circuit"]);
    return circuit_from_json(j);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed for " + path);
}

}  // namespace qflow
