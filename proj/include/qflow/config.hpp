#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qflow/flow.hpp"
#include "qflow/hamiltonian.hpp"
#include "qflow/io.hpp"

namespace qflow {

struct ModelConfig {
    std::string type = "heisenberg";  ///< heisenberg | ising | custom
    int n = 0;
    double j = 1.0;
    Boundary boundary = Boundary::Open;
    std::vector<LocalTerm> terms;
};

struct AnsatzConfig {
    std::string type = "staircase";  ///< staircase | mera | extended_mera | custom
    int d = 2;
    std::string file;
    std::string init = "haar";  ///< haar | identity
};

struct OutputConfig {
    std::string dir = "out";
    bool timing = true;
    int checkpoint_every = 0;
};

struct BenchPoint {
    int n = 0;
    int d = 0;
};

struct BenchConfig {
    std::vector<BenchPoint> grid;
    int sweeps = 3;
    int repeats = 3;
};

struct GradcheckConfig {
    int samples = 20;
    double fd_step = 1e-5;
    double tol = 1e-4;
    bool corrupt = false;
};

struct OracleConfig {
    std::vector<ModelConfig> cases;
    int k = 2;
};

struct RunConfig {
    ModelConfig model;
    AnsatzConfig ansatz;
    FlowConfig flow;
    OutputConfig output;
    int restarts = 1;
    std::string reference = "auto";  ///< auto | none | value
    double reference_value = 0.0;
    BenchConfig bench;
    GradcheckConfig gradcheck;
    OracleConfig oracle;
    json raw;
};

/// Parses and validates a run configuration. Errors carry the line of the offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

Hamiltonian build_hamiltonian(const ModelConfig& m);
/// Ansatz for `n` spins; `seed` drives the Haar initialization.
Circuit build_ansatz(const AnsatzConfig& a, int n, Boundary boundary, std::uint64_t seed, std::int64_t cap);

}  // namespace qflow
