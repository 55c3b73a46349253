#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "qflow/config.hpp"

namespace qflow {

struct CliOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
};

/// Fill unset options from QFLOW_OUT and QFLOW_THREADS.
void apply_environment(CliOptions& opts);

/// Exit codes: 0 converged or sweep budget reached, 1 invalid configuration, 2 solver stalled.
int cmd_run(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err);
/// Exit 0 when the largest relative deviation is within tolerance, 3 otherwise.
int cmd_gradcheck(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_oracle(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const std::string& config_path, const CliOptions& opts, std::ostream& out, std::ostream& err);

/// Reference energy for relative errors, empty when none is available.
std::optional<double> resolve_reference(const RunConfig& cfg, const Hamiltonian& h);

/// (E - E0) / |E0|.
double relative_error(double e, double e0);

/// Seed for restart `index` derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace qflow
