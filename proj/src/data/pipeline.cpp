#include "fedboost/data/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fedboost::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw IngestError("'" + path.string() + "' is empty");
  const std::vector<std::string> header = split_line(chomp(line));

  auto find_column = [&](const std::string& name, const char* role) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw IngestError("'" + path.string() + "' is missing the " + std::string(role) +
                        " column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t node_col = find_column(schema.node_type_column, "node_type");
  const std::size_t load_col = find_column(schema.load_level_column, "load_level");
  const std::size_t target_col = find_column(schema.target_column, "target");

  Dataset data;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == node_col || c == load_col || c == target_col) continue;
    if (header[c].empty())
      throw IngestError("'" + path.string() + "' has an unnamed column at position " +
                        std::to_string(c + 1));
    feature_cols.push_back(c);
    data.feature_names.push_back(header[c]);
  }

  std::size_t row_number = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_number;
    line = chomp(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw IngestError("'" + path.string() + "' row " + std::to_string(row_number) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));

    Sample s;
    s.node_type = cells[node_col];
    const auto load = parse_real(cells[load_col]);
    if (!load)
      throw IngestError("'" + path.string() + "' row " + std::to_string(row_number) +
                        ": unparseable load_level '" + cells[load_col] + "'");
    if (*load < 0.0 || *load > 100.0)
      throw IngestError("'" + path.string() + "' row " + std::to_string(row_number) +
                        ": load_level " + cells[load_col] + " outside [0, 100]");
    s.load_level = *load;

    const auto target = parse_real(cells[target_col]);
    if (!target)
      throw IngestError("'" + path.string() + "' row " + std::to_string(row_number) +
                        ": unparseable target '" + cells[target_col] + "' in column '" +
                        schema.target_column + "'");
    if (*target < 0.0)
      throw IngestError("'" + path.string() + "' row " + std::to_string(row_number) +
                        ": negative power " + cells[target_col]);
    s.target_power = *target;

    s.features.reserve(feature_cols.size());
    for (const std::size_t c : feature_cols) {
      const auto v = parse_real(cells[c]);
      s.features.push_back(v ? *v : kMissing);  // non-numeric cells become missing
    }
    data.samples.push_back(std::move(s));
  }

  if (data.samples.empty())
    throw IngestError("'" + path.string() + "' contains a header but no data rows");
  return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write '" + path.string() + "'");

  out << schema.node_type_column << ',' << schema.load_level_column;
  for (const auto& name : data.feature_names) {
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
      throw IngestError("feature name '" + name + "' is not CSV-safe");
    out << ',' << name;
  }
  out << ',' << schema.target_column << '\n';

  for (const Sample& s : data.samples) {
    if (s.node_type.find(',') != std::string::npos || s.node_type.find('\n') != std::string::npos)
      throw IngestError("node_type '" + s.node_type + "' is not CSV-safe");
    out << s.node_type << ',' << real_to_string(s.load_level);
    for (const double v : s.features) {
      out << ',';
      if (!std::isnan(v)) out << real_to_string(v);
    }
    out << ',' << real_to_string(s.target_power) << '\n';
  }
  if (!out) throw IngestError("write to '" + path.string() + "' failed");
}

Dataset min_idle_isolate(const Dataset& data) {
  if (data.isolated) throw PipelineError("dataset is already idle-isolated");

  // Per node_type: minimum observed load level, then the minimum target at
  // that load level.
  std::map<std::string, double> min_load;
  for (const Sample& s : data.samples) {
    auto [it, inserted] = min_load.try_emplace(s.node_type, s.load_level);
    if (!inserted) it->second = std::min(it->second, s.load_level);
  }
  std::map<std::string, double> idle_floor;
  for (const Sample& s : data.samples) {
    if (s.load_level != min_load.at(s.node_type)) continue;
    auto [it, inserted] = idle_floor.try_emplace(s.node_type, s.target_power);
    if (!inserted) it->second = std::min(it->second, s.target_power);
  }

  Dataset out = data;
  for (Sample& s : out.samples) s.target_power -= idle_floor.at(s.node_type);
  out.isolated = true;
  return out;
}

const std::vector<std::string>& default_bpf_whitelist() {
  static const std::vector<std::string> names = {"cpu_util", "bpf_instructions",
                                                 "bpf_cache_misses"};
  return names;
}

Dataset select_feature_group(const Dataset& data, FeatureGroup group,
                             const std::vector<std::string>& bpf_whitelist) {
  if (group == FeatureGroup::all) return data;

  const std::set<std::string> keep(bpf_whitelist.begin(), bpf_whitelist.end());
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < data.feature_names.size(); ++c)
    if (keep.count(data.feature_names[c]) != 0) cols.push_back(c);
  if (cols.empty())
    throw PipelineError("feature group selects zero columns; whitelist matches nothing");

  Dataset out;
  out.isolated = data.isolated;
  for (const std::size_t c : cols) out.feature_names.push_back(data.feature_names[c]);
  out.samples.reserve(data.samples.size());
  for (const Sample& s : data.samples) {
    Sample t;
    t.node_type = s.node_type;
    t.load_level = s.load_level;
    t.target_power = s.target_power;
    t.features.reserve(cols.size());
    for (const std::size_t c : cols) t.features.push_back(s.features[c]);
    out.samples.push_back(std::move(t));
  }
  return out;
}

std::vector<ClientSplit> partition(const Dataset& data, const PartitionPlan& plan) {
  if (plan.num_clients < 1) throw PipelineError("partition: num_clients must be >= 1");
  if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0))
    throw PipelineError("partition: test_fraction must be in (0, 1)");

  std::set<std::string> type_set;
  for (const Sample& s : data.samples) type_set.insert(s.node_type);
  const std::vector<std::string> types(type_set.begin(), type_set.end());  // sorted

  if (static_cast<std::size_t>(plan.num_clients) > types.size())
    throw PipelineError("partition infeasible: " + std::to_string(plan.num_clients) +
                        " clients but only " + std::to_string(types.size()) +
                        " distinct node_types");

  std::map<std::string, std::int32_t> owner;
  if (plan.assignment.empty()) {
    for (std::size_t i = 0; i < types.size(); ++i)
      owner[types[i]] = static_cast<std::int32_t>(i % static_cast<std::size_t>(plan.num_clients));
  } else {
    for (const auto& type : types) {
      const auto it = plan.assignment.find(type);
      if (it == plan.assignment.end())
        throw PipelineError("partition plan does not assign node_type '" + type + "'");
      if (it->second < 0 || it->second >= plan.num_clients)
        throw PipelineError("partition plan assigns '" + type + "' to client " +
                            std::to_string(it->second) + ", outside 0.." +
                            std::to_string(plan.num_clients - 1));
      owner[type] = it->second;
    }
    std::set<std::int32_t> used;
    for (const auto& [type, client] : owner) used.insert(client);
    if (static_cast<std::int32_t>(used.size()) != plan.num_clients)
      throw PipelineError("partition plan leaves some client without any node_type");
  }

  // Row indices per client, in dataset order.
  std::vector<std::vector<std::size_t>> client_rows(static_cast<std::size_t>(plan.num_clients));
  for (std::size_t r = 0; r < data.samples.size(); ++r)
    client_rows[static_cast<std::size_t>(owner.at(data.samples[r].node_type))].push_back(r);

  std::vector<ClientSplit> splits(static_cast<std::size_t>(plan.num_clients));
  for (std::size_t c = 0; c < client_rows.size(); ++c) {
    const auto& rows = client_rows[c];
    const std::size_t n = rows.size();
    if (n < 2)
      throw PipelineError("client " + std::to_string(c) + " has only " + std::to_string(n) +
                          " samples; cannot reserve a test split");

    // The shuffle picks membership; each split then restores dataset order.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(static_cast<std::uint64_t>(plan.split_seed), static_cast<std::uint64_t>(c));
    rng.shuffle(order);

    std::size_t test_count =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * plan.test_fraction + 0.5));
    test_count = std::clamp<std::size_t>(test_count, 1, n - 1);

    std::vector<bool> is_test(n, false);
    for (std::size_t i = 0; i < test_count; ++i) is_test[order[i]] = true;

    ClientSplit& split = splits[c];
    split.train.feature_names = data.feature_names;
    split.train.isolated = data.isolated;
    split.test.feature_names = data.feature_names;
    split.test.isolated = data.isolated;
    for (std::size_t i = 0; i < n; ++i)
      (is_test[i] ? split.test : split.train).samples.push_back(data.samples[rows[i]]);
  }
  return splits;
}

}  // namespace fedboost::data
