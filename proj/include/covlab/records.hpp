#pragma once

// Run records (JSON lines, schema covlab.run/1) and their summaries (CSV).
//
// Record fields:
//   schema       "covlab.run/1"
//   experiment   experiment kind
//   group        summary group label, e.g. "r=30"
//   params       echo of the parameters that produced the run
//   run          run index
//   seed         master seed
//   outputs      primary results, numbers only
//   diagnostics  flags and secondary numbers
//   wall_ms      wall time; excluded from the determinism contract
//
// Summary CSV columns:
//   experiment,group,metric,count,mean,std_error,median,q05,q95

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "covlab/stats.hpp"

namespace covlab {

inline constexpr const char* kRecordSchema = "covlab.run/1";

struct RunRecord {
  std::string experiment;
  std::string group;
  nlohmann::json params = nlohmann::json::object();
  std::int64_t run = 0;
  std::uint64_t seed = 0;
  nlohmann::json outputs = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  double wall_ms = 0.0;

  nlohmann::json to_json(bool with_wall = true) const {
    nlohmann::json j;
    j["schema"] = kRecordSchema;
    j["experiment"] = experiment;
    j["group"] = group;
    j["params"] = params;
    j["run"] = run;
    j["seed"] = seed;
    j["outputs"] = outputs;
    j["diagnostics"] = diagnostics;
    if (with_wall) j["wall_ms"] = wall_ms;
    return j;
  }

  static RunRecord from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != kRecordSchema)
      throw std::runtime_error("unsupported record schema: " + j.value("schema", std::string("?")));
    RunRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    r.group = j.at("group").get<std::string>();
    r.params = j.at("params");
    r.run = j.at("run").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.outputs = j.at("outputs");
    r.diagnostics = j.at("diagnostics");
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
  }
};

inline std::vector<RunRecord> read_records(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
  return out;
}

/// Serialises record emission from concurrent producers.
class RecordAppender {
 public:
  explicit RecordAppender(std::ostream* out, bool with_wall = true) : out_(out), with_wall_(with_wall) {}
  void append(const RunRecord& r) {
    std::lock_guard lock(mu_);
    if (out_) *out_ << r.to_json(with_wall_).dump() << '\n';
    ++count_;
  }
  std::int64_t count() const { return count_; }

 private:
  std::ostream* out_;
  bool with_wall_;
  std::mutex mu_;
  std::int64_t count_ = 0;
};

struct SummaryRow {
  std::string experiment;
  std::string group;
  std::string metric;
  std::int64_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

/// Groups records by (experiment, group) in first-appearance order and
/// summarises every numeric output. Depends on nothing but the records.
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> data;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.experiment, r.group);
    if (!data.count(key)) order.push_back(key);
    auto& metrics = data[key];
    for (auto it = r.outputs.begin(); it != r.outputs.end(); ++it)
      if (it.value().is_number()) metrics[it.key()].push_back(it.value().get<double>());
  }
  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    for (const auto& [metric, xs] : data[key]) {
      SummaryRow row{key.first, key.second, metric};
      const auto m = moments(xs);
      row.count = m.count;
      row.mean = m.mean;
      row.std_error = m.count > 1 ? m.std_error() : 0.0;
      row.median = median(xs);
      row.q05 = quantile(xs, 0.05);
      row.q95 = quantile(xs, 0.95);
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "experiment,group,metric,count,mean,std_error,median,q05,q95\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.experiment << ',' << r.group << ',' << r.metric << ',' << r.count << ',' << r.mean << ','
        << r.std_error << ',' << r.median << ',' << r.q05 << ',' << r.q95 << '\n';
}

}  // namespace covlab
