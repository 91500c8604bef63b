#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fedboost/data/dataset.hpp"

namespace fedboost::data {

// CSV layout: UTF-8, one header row, comma separated, no quoting. The
// canonical column order on output is node_type,load_level,<features...>,power
// but ingestion locates the named columns anywhere in the header. A missing
// value is an empty cell; any non-numeric feature cell also ingests as
// missing.
struct CsvSchema {
  std::string node_type_column = "node_type";
  std::string load_level_column = "load_level";
  std::string target_column = "power";
};

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const CsvSchema& schema = {});

// Subtracts each node_type's idle floor from its targets: the floor is the
// minimum target among that type's samples at its minimum observed load
// level. The result models dynamic (activity-driven) power; applying it
// twice is an error.
Dataset min_idle_isolate(const Dataset& data);

enum class FeatureGroup { bpf_only, all };

// Keeps only the columns whitelisted for the group, preserving dataset
// column order. `all` is the identity; an empty survivor set is an error.
Dataset select_feature_group(const Dataset& data, FeatureGroup group,
                             const std::vector<std::string>& bpf_whitelist);

// Default BPFOnly whitelist used when the config does not override it:
// cpu_util plus the kernel-counter style columns of the synthetic schema.
const std::vector<std::string>& default_bpf_whitelist();

struct PartitionPlan {
  std::int32_t num_clients = 1;
  // node_type -> client index. Empty means round-robin over node types in
  // sorted order.
  std::map<std::string, std::int32_t> assignment;
  double test_fraction = 0.2;
  std::int64_t split_seed = 0;
};

struct ClientSplit {
  Dataset train;
  Dataset test;
};

// Assigns node_types to clients and reserves a seeded per-client test split.
// Every input sample lands in exactly one client's train or test set; within
// each split, samples keep their original dataset order (the shuffle decides
// membership only).
std::vector<ClientSplit> partition(const Dataset& data, const PartitionPlan& plan);

}  // namespace fedboost::data
