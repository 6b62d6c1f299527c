#include "fedrkg/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fedrkg {

namespace {

std::string full_precision(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string fixed2(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

void append_record_rows(std::ostringstream& out, const MetricsRecord& record) {
  for (const auto& [k, v] : record.recall_at)
    out << record.round << "," << split_name(record.split) << ",R," << k << ","
        << full_precision(v) << "\n";
  for (const auto& [k, v] : record.ndcg_at)
    out << record.round << "," << split_name(record.split) << ",N," << k << ","
        << full_precision(v) << "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string format_metrics_csv(const MetricsHistory& history) {
  std::ostringstream out;
  out << "round,split,metric,K,value\n";
  for (const EvalPoint& point : history.points) {
    append_record_rows(out, point.val);
    append_record_rows(out, point.test);
  }
  return out.str();
}

std::string format_rounds_csv(const std::vector<RoundLog>& rounds) {
  std::ostringstream out;
  out << "round,regime,participants,guidance_applied,wall_seconds\n";
  for (const RoundLog& log : rounds)
    out << log.round << "," << regime_name(log.regime) << ","
        << log.participants.size() << "," << (log.guidance_applied ? 1 : 0)
        << "," << log.wall_seconds << "\n";
  return out.str();
}

std::string format_gate_stats_csv(const std::vector<GateStatRow>& rows) {
  std::ostringstream out;
  out << "round,user,mean_gate_value,mean_gate_logit\n";
  for (const GateStatRow& row : rows)
    out << row.round << "," << row.user << ","
        << full_precision(row.mean_value) << ","
        << full_precision(row.mean_logit) << "\n";
  return out.str();
}

std::string format_report(const ExperimentResult& result,
                          const ExperimentConfig& config) {
  const EvalPoint& best = result.history.best();
  std::ostringstream out;
  out << "run " << result.manifest.run_id << "\n";
  out << "dataset " << config.dataset << " (" << result.manifest.users
      << " users, " << result.manifest.items << " items, "
      << result.manifest.interactions << " interactions)\n";
  out << "regime " << regime_name(config.regime)
      << (config.privacy.enabled ? " +ldp" : "") << ", best round "
      << best.round << " of " << result.history.final_round
      << (result.history.stopped_early ? " (early stop)" : "") << "\n\n";

  out << "split";
  for (const auto& [k, v] : best.test.recall_at) out << "  R@" << k;
  for (const auto& [k, v] : best.test.ndcg_at) out << "  N@" << k;
  out << "\n";
  for (const MetricsRecord* record : {&best.val, &best.test}) {
    out << split_name(record->split);
    for (const auto& [k, v] : record->recall_at) out << "  " << fixed2(v);
    for (const auto& [k, v] : record->ndcg_at) out << "  " << fixed2(v);
    out << "\n";
  }
  return out.str();
}

std::string manifest_json(const RunManifest& manifest) {
  nlohmann::json j;
  j["run_id"] = manifest.run_id;
  j["config"] = nlohmann::json::parse(manifest.config_json);
  j["build_id"] = manifest.build_id;
  j["data_source"] = manifest.data_source;
  j["dataset_stats"] = {{"users", manifest.users},
                        {"items", manifest.items},
                        {"interactions", manifest.interactions}};
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["wall_seconds"] = {{"train", manifest.train_seconds},
                       {"guidance", manifest.guidance_seconds},
                       {"eval", manifest.eval_seconds},
                       {"total", manifest.total_seconds}};
  j["outputs"] = manifest.outputs;
  return j.dump(2) + "\n";
}

std::filesystem::path write_run_outputs(ExperimentResult& result,
                                        const ExperimentConfig& config) {
  const std::filesystem::path dir =
      std::filesystem::path(config.output_dir) / result.manifest.run_id;
  std::filesystem::create_directories(dir);

  result.manifest.outputs = {"manifest.json", "metrics.csv", "report.txt",
                             "rounds.csv"};
  write_text(dir / "metrics.csv", format_metrics_csv(result.history));
  write_text(dir / "report.txt", format_report(result, config));
  write_text(dir / "rounds.csv", format_rounds_csv(result.rounds));
  if (!result.gate_stats.empty()) {
    result.manifest.outputs.push_back("gate_stats.csv");
    write_text(dir / "gate_stats.csv",
               format_gate_stats_csv(result.gate_stats));
  }
  if (std::filesystem::exists(dir / "snapshot.bin"))
    result.manifest.outputs.push_back("snapshot.bin");
  write_text(dir / "manifest.json", manifest_json(result.manifest));
  return dir;
}

}  // namespace fedrkg
