#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "qflow/config.hpp"
#include "qflow/error.hpp"
#include "qflow/io.hpp"

using namespace qflow;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

const char* kMinimal = R"({
  "model": {"type": "heisenberg", "n": 6, "j": -1.0, "boundary": "open"}
})";

}  // namespace

TEST(Config, Defaults) {
    RunConfig cfg = parse_config(kMinimal);
    EXPECT_EQ(cfg.model.n, 6);
    EXPECT_EQ(cfg.model.j, -1.0);
    EXPECT_EQ(cfg.ansatz.type, "staircase");
    EXPECT_EQ(cfg.ansatz.d, 2);
    EXPECT_EQ(cfg.flow.max_sweeps, 100);
    EXPECT_EQ(cfg.flow.metric, Metric::HilbertSchmidt);
    EXPECT_EQ(cfg.restarts, 1);
    EXPECT_EQ(cfg.reference, "auto");
    EXPECT_TRUE(cfg.output.timing);
}

TEST(Config, FullFlowSection) {
    RunConfig cfg = parse_config(R"({
  "model": {"type": "ising", "n": 16, "boundary": "periodic"},
  "ansatz": {"type": "mera", "init": "identity"},
  "flow": {"eta": 0.1, "max_sweeps": 50, "energy_tol": "inf", "update_order": "random",
           "step_rule": "line_search", "inner_steps": 3, "schedule": "gauss_seidel", "metric": "state",
           "metric_floor": 1e-4, "seed": 99, "threads": 2},
  "output": {"dir": "o", "timing": false, "checkpoint_every": 5},
  "restarts": 4,
  "reference": -20.5
})");
    EXPECT_EQ(cfg.model.boundary, Boundary::Periodic);
    EXPECT_EQ(cfg.ansatz.init, "identity");
    EXPECT_TRUE(std::isinf(cfg.flow.energy_tol));
    EXPECT_EQ(cfg.flow.update_order, UpdateOrder::Random);
    EXPECT_EQ(cfg.flow.step_rule, StepRule::LineSearch);
    EXPECT_EQ(cfg.flow.schedule, Schedule::GaussSeidel);
    EXPECT_THROW(parse_config(R"({"model": {"n": 4}, "flow": {"schedule": "jacobi", "step_rule": "line_search"}})"), ConfigError);
    EXPECT_EQ(cfg.flow.metric, Metric::State);
    EXPECT_DOUBLE_EQ(cfg.flow.metric_floor, 1e-4);
    EXPECT_EQ(cfg.flow.seed, 99u);
    EXPECT_FALSE(cfg.output.timing);
    EXPECT_EQ(cfg.restarts, 4);
    EXPECT_EQ(cfg.reference, "value");
    EXPECT_DOUBLE_EQ(cfg.reference_value, -20.5);
}

TEST(Config, UnknownKeyIsLineAnchored) {
    const std::string text = "{\n  \"model\": {\"type\": \"heisenberg\", \"n\": 4},\n  \"flow\": {\n    \"etaa\": 0.1\n  }\n}";
    EXPECT_EQ(error_line(text), 4);
    try {
        parse_config(text);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("etaa"), std::string::npos);
    }
}

TEST(Config, BadValuesAreLineAnchored) {
    EXPECT_EQ(error_line("{\n\"model\": {\"n\": 4,\n \"boundary\": \"twisted\"}\n}"), 3);
    EXPECT_EQ(error_line("{\n\"model\": {\"n\": 4},\n\"flow\": {\n\"metric\": \"fisher\"}}"), 4);
    EXPECT_EQ(error_line("{\n\"model\": {\"n\": 4},\n\"flow\": {\"eta\": -1}}"), 3);
    EXPECT_EQ(error_line("{\n\"model\": {\"n\": 4},\n\n\"ansatz\": {\"d\": 1}}"), 4);
    EXPECT_EQ(error_line("{\n\"model\": {\"n\": 4},\n\"restarts\": 0}"), 3);
}

TEST(Config, StructuralErrors) {
    EXPECT_THROW(parse_config("{"), ConfigError);
    EXPECT_THROW(parse_config("{}"), ConfigError);
    EXPECT_THROW(parse_config(R"({"model": {"type": "potts", "n": 4}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"model": {"type": "heisenberg", "n": 1}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"model": {"n": 4}, "flow": {"energy_tol": "never"}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"model": {"n": 4}, "reference": 0})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"model": {"n": 4}, "ansatz": {"type": "custom"}})"), ConfigError);
    // an oracle-only file needs no model
    EXPECT_NO_THROW(parse_config(R"({"oracle": {"cases": [{"type": "ising", "n": 6}]}})"));
}

TEST(Config, CustomTerms) {
    RunConfig cfg = parse_config(R"({
  "model": {"type": "custom", "n": 3, "terms": [
    {"support": [1, 2], "matrix": [1,0,0,0, 0,-1,0,0, 0,0,-1,0, 0,0,0,1]},
    {"support": [3], "matrix": [[0,0],[1,0],[1,0],[0,0]]}
  ]}
})");
    Hamiltonian h = build_hamiltonian(cfg.model);
    ASSERT_EQ(h.terms.size(), 2u);
    EXPECT_EQ(h.terms[1].support, (std::vector<int>{3}));
    EXPECT_EQ(h.terms[1].op, pauli::x());
    EXPECT_THROW(parse_config(R"({"model": {"type": "custom", "n": 3, "terms": [{"support": [1], "matrix": [1,2,3,4]}]}})"),
                 ConfigError);
}

TEST(Config, BuildAnsatz) {
    AnsatzConfig a;
    a.type = "mera";
    Circuit c = build_ansatz(a, 8, Boundary::Periodic, 3, kDefaultDenseCap);
    EXPECT_EQ(c.n_spins(), 8);
    a.init = "identity";
    Circuit id = build_ansatz(a, 8, Boundary::Periodic, 3, kDefaultDenseCap);
    EXPECT_LT((id.gate(1).unitary - CMatrix::Identity(4, 4)).norm(), 1e-15);
    EXPECT_THROW(build_ansatz(a, 12, Boundary::Open, 3, kDefaultDenseCap), InvalidArgument);
}

TEST(Config, CustomAnsatzFile) {
    const auto dir = std::filesystem::temp_directory_path() / "qflow_config_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(5);
    Circuit c = build_staircase(4, 2, rng);
    const std::string path = (dir / "c.json").string();
    write_text_file(path, circuit_to_json(c).dump());
    AnsatzConfig a;
    a.type = "custom";
    a.file = path;
    Circuit back = build_ansatz(a, 4, Boundary::Open, 1, kDefaultDenseCap);
    EXPECT_TRUE(same_shape(back, c));
    EXPECT_THROW(build_ansatz(a, 5, Boundary::Open, 1, kDefaultDenseCap), InvalidArgument);
    EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}
