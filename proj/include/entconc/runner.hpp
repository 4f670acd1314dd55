// Experiment drivers behind the CLI: build the configured chain, compute the
// reported quantities, and emit deterministic CSV plus a re-parsable report.

#pragma once

#include <map>
#include <string>

#include "entconc/config.hpp"

namespace entconc {

// File name -> file contents. Kept in memory so tests can compare runs
// byte for byte without touching the filesystem.
struct RunArtifacts {
    std::map<std::string, std::string> files;
};

// Deterministic: equal configs produce byte-identical artifacts.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

void write_artifacts(const RunArtifacts& artifacts, const std::string& out_dir);

// 12-significant-digit CSV number formatting ('.' decimal separator).
std::string csv_num(double v);

}  // namespace entconc
