#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "htmdp/errors.hpp"
#include "htmdp/harness.hpp"
#include "json.hpp"

namespace htmdp {

namespace {

constexpr const char* kSeriesHeader =
    "episode,replica,regret,expected_loss_pi_t,expected_loss_benchmark,epoch,solver_gap,skip_events";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& text) {
  size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw StructuralError("bad number '" + text + "'");
  return v;
}

long long to_int(const std::string& text) {
  size_t used = 0;
  const long long v = std::stoll(text, &used);
  if (used != text.size()) throw StructuralError("bad integer '" + text + "'");
  return v;
}

void write_key_values(std::ostream& out, const KeyValueFile& kv) {
  for (const auto& [key, value] : kv.entries()) out << key << " = " << value << '\n';
}

}  // namespace

void write_series_csv(std::ostream& out, const std::vector<ReplicaSeries>& replicas) {
  out << kSeriesHeader << '\n';
  for (const auto& rep : replicas) {
    for (size_t i = 0; i < rep.regret.size(); ++i) {
      out << (i + 1) << ',' << rep.replica << ',' << format_double(rep.regret[i]) << ','
          << format_double(rep.loss_policy[i]) << ',' << format_double(rep.loss_benchmark[i]) << ','
          << rep.epoch[i] << ',' << format_double(rep.solver_gap[i]) << ',' << rep.skip_events[i] << '\n';
    }
  }
}

std::vector<ReplicaSeries> read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader) throw StructuralError("series file has an unexpected header");
  std::vector<ReplicaSeries> out;
  std::map<int, size_t> slot;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw StructuralError("series row needs 8 fields: " + line);
    const int replica = static_cast<int>(to_int(f[1]));
    auto it = slot.find(replica);
    if (it == slot.end()) {
      it = slot.emplace(replica, out.size()).first;
      out.emplace_back();
      out.back().replica = replica;
    }
    auto& rep = out[it->second];
    if (to_int(f[0]) != static_cast<long long>(rep.regret.size()) + 1) {
      throw StructuralError("episodes out of order for replica " + f[1]);
    }
    rep.regret.push_back(to_double(f[2]));
    rep.loss_policy.push_back(to_double(f[3]));
    rep.loss_benchmark.push_back(to_double(f[4]));
    rep.epoch.push_back(static_cast<int>(to_int(f[5])));
    rep.solver_gap.push_back(to_double(f[6]));
    rep.skip_events.push_back(static_cast<int>(to_int(f[7])));
  }
  return out;
}

void write_series_json(std::ostream& out, const std::vector<ReplicaSeries>& replicas) {
  nlohmann::ordered_json doc;
  doc["columns"] = {"episode", "replica", "regret", "expected_loss_pi_t", "expected_loss_benchmark",
                    "epoch", "solver_gap", "skip_events"};
  doc["replicas"] = nlohmann::ordered_json::array();
  for (const auto& rep : replicas) {
    nlohmann::ordered_json r;
    r["replica"] = rep.replica;
    r["regret"] = rep.regret;
    r["expected_loss_pi_t"] = rep.loss_policy;
    r["expected_loss_benchmark"] = rep.loss_benchmark;
    r["epoch"] = rep.epoch;
    r["solver_gap"] = rep.solver_gap;
    r["skip_events"] = rep.skip_events;
    doc["replicas"].push_back(std::move(r));
  }
  out << doc.dump() << '\n';
}

std::vector<ReplicaSeries> read_series_json(std::istream& in) {
  const auto doc = nlohmann::json::parse(in);
  std::vector<ReplicaSeries> out;
  for (const auto& r : doc.at("replicas")) {
    ReplicaSeries rep;
    rep.replica = r.at("replica").get<int>();
    rep.regret = r.at("regret").get<std::vector<double>>();
    rep.loss_policy = r.at("expected_loss_pi_t").get<std::vector<double>>();
    rep.loss_benchmark = r.at("expected_loss_benchmark").get<std::vector<double>>();
    rep.epoch = r.at("epoch").get<std::vector<int>>();
    rep.solver_gap = r.at("solver_gap").get<std::vector<double>>();
    rep.skip_events = r.at("skip_events").get<std::vector<int>>();
    out.push_back(std::move(rep));
  }
  return out;
}

void write_file_atomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot move " + tmp + " into place: " + ec.message());
}

void export_results(const ExperimentResults& results, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);

  std::ostringstream config;
  write_key_values(config, results.config.to_key_values());
  write_file_atomically((base / "config.txt").string(), config.str());

  std::ostringstream meta;
  meta << "sigma = " << format_double(results.sigma) << '\n';
  meta << "benchmark =";
  for (int a : results.benchmark) meta << ' ' << a;
  meta << '\n' << "benchmark_tie = " << (results.benchmark_tie ? "true" : "false") << '\n';
  write_file_atomically((base / "meta.txt").string(), meta.str());

  std::ostringstream series;
  if (results.config.format == "json") {
    write_series_json(series, results.replicas);
    write_file_atomically((base / "series.json").string(), series.str());
  } else {
    write_series_csv(series, results.replicas);
    write_file_atomically((base / "series.csv").string(), series.str());
  }

  std::ostringstream reps;
  reps << "replica,final_regret,max_gate_ratio,max_feasibility,unconverged_solves,skip_events,epochs,"
          "uob_dominance_violations,uob_floor_violations,kernel_always_covered\n";
  for (const auto& rep : results.replicas) {
    const auto& d = rep.diagnostics;
    reps << rep.replica << ',' << format_double(rep.regret.empty() ? 0.0 : rep.regret.back()) << ','
         << format_double(d.max_gate_ratio) << ',' << format_double(d.max_feasibility) << ','
         << d.unconverged_solves << ',' << d.skip_events << ',' << d.epochs << ',' << d.uob_dominance_violations
         << ',' << d.uob_floor_violations << ',' << (d.kernel_always_covered ? 1 : 0) << '\n';
  }
  write_file_atomically((base / "replicas.csv").string(), reps.str());

  std::ostringstream epochs;
  epochs << "replica,epoch,start,trigger_episode,trigger_state,trigger_action\n";
  for (const auto& rep : results.replicas) {
    for (const auto& e : rep.epoch_log) {
      epochs << rep.replica << ',' << e.epoch << ',' << e.start << ',' << e.trigger_episode << ','
             << e.trigger.state << ',' << e.trigger.action << '\n';
    }
  }
  write_file_atomically((base / "epochs.csv").string(), epochs.str());
}

ExperimentResults load_results(const std::string& dir) {
  const std::filesystem::path base(dir);
  ExperimentResults results;
  results.config = ExperimentConfig::load((base / "config.txt").string());
  const auto meta = KeyValueFile::load((base / "meta.txt").string());
  results.sigma = meta.get_double("sigma");
  results.benchmark = meta.get_ints("benchmark");
  results.benchmark_tie = meta.get_bool_or("benchmark_tie", false);

  const auto csv = base / "series.csv";
  const auto json = base / "series.json";
  if (std::filesystem::exists(csv)) {
    std::ifstream in(csv);
    results.replicas = read_series_csv(in);
  } else if (std::filesystem::exists(json)) {
    std::ifstream in(json);
    results.replicas = read_series_json(in);
  } else {
    throw std::runtime_error("no series file in " + dir);
  }

  std::ifstream reps(base / "replicas.csv");
  std::string line;
  if (reps && std::getline(reps, line)) {
    std::map<int, ReplicaSeries*> by_id;
    for (auto& rep : results.replicas) by_id[rep.replica] = &rep;
    while (std::getline(reps, line)) {
      const auto f = split(line, ',');
      if (f.size() != 10) continue;
      auto it = by_id.find(static_cast<int>(to_int(f[0])));
      if (it == by_id.end()) continue;
      auto& d = it->second->diagnostics;
      d.max_gate_ratio = to_double(f[2]);
      d.max_feasibility = to_double(f[3]);
      d.unconverged_solves = static_cast<int>(to_int(f[4]));
      d.skip_events = to_int(f[5]);
      d.epochs = static_cast<int>(to_int(f[6]));
      d.uob_dominance_violations = to_int(f[7]);
      d.uob_floor_violations = to_int(f[8]);
      d.kernel_always_covered = f[9] == "1";
    }
  }
  return results;
}

}  // namespace htmdp
