#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluxnet/dataset.hpp"
#include "fluxnet/processing.hpp"
#include "fluxnet/trainer.hpp"
#include "fluxnet/vnet.hpp"

namespace fluxnet {

// Binary files share one layout: a magic line, a single-line JSON header and
// a payload of little-endian 64-bit floats. The header carries the payload
// CRC-32.

struct DatasetFile {
  Dataset entries;
  nlohmann::json config;  // generator settings echoed at creation
  std::uint64_t seed = 0;
};

void save_dataset(const std::filesystem::path& path, const DatasetFile& file);
DatasetFile load_dataset(const std::filesystem::path& path);

struct ModelFile {
  VNetParams params;
  PipelineConfig pipeline;
  StandardizationStats stats;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  std::vector<std::size_t> test_entries;  // held-out entry indices of the training dataset
  nlohmann::json extra;                   // free-form metadata (train config, history summary)
};

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const TrainCheckpoint& ck);
TrainCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Magic line and header of any of the three formats, payload left unread.
struct FileSummary {
  std::string kind;
  nlohmann::json header;
  std::uintmax_t bytes = 0;
};
FileSummary inspect_file(const std::filesystem::path& path);

/// Comma-separated output with a single header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);

  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

}  // namespace fluxnet
