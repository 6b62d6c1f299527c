#pragma once

#include <filesystem>
#include <string>

#include "fedrkg/federation.hpp"

namespace fedrkg {

// Delimited metric history: round,split,metric,K,value. Full-precision
// values so identical runs produce identical bytes.
std::string format_metrics_csv(const MetricsHistory& history);

std::string format_rounds_csv(const std::vector<RoundLog>& rounds);

std::string format_gate_stats_csv(const std::vector<GateStatRow>& rows);

// Final-report table row for the best-validation checkpoint.
std::string format_report(const ExperimentResult& result,
                          const ExperimentConfig& config);

std::string manifest_json(const RunManifest& manifest);

// Writes metrics.csv, report.txt, rounds.csv (and gate_stats.csv when
// collected) plus manifest.json into output_dir/<run id>/, recording
// every file in the manifest. Returns the run directory.
std::filesystem::path write_run_outputs(ExperimentResult& result,
                                        const ExperimentConfig& config);

}  // namespace fedrkg
