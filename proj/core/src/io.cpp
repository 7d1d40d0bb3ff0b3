#include "fluxnet/io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "fluxnet/error.hpp"
#include "fluxnet/json_config.hpp"

namespace fluxnet {
namespace {

using nlohmann::json;

constexpr const char* kDatasetMagic = "fluxnet-dataset v1";
constexpr const char* kModelMagic = "fluxnet-model v1";
constexpr const char* kCheckpointMagic = "fluxnet-checkpoint v1";

void append_le(std::string& buf, std::span<const double> values) {
  const std::size_t start = buf.size();
  buf.resize(start + values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) buf[start + i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
}

class PayloadReader {
 public:
  explicit PayloadReader(const std::string& bytes) : bytes_(bytes) {}

  void read(std::span<double> out) {
    if (pos_ + out.size() * 8 > bytes_.size()) throw IoError("payload truncated");
    for (double& v : out) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
      v = std::bit_cast<double>(bits);
      pos_ += 8;
    }
  }
  std::vector<double> read(std::size_t n) {
    std::vector<double> v(n);
    read(v);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::string& payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* data = reinterpret_cast<const Bytef*>(payload.data());
  std::size_t left = payload.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_file(const std::filesystem::path& path, const char* magic, json header,
                const std::string& payload) {
  header["payload_bytes"] = payload.size();
  header["crc32"] = crc32_of(payload);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << magic << '\n' << header.dump() << '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

struct RawFile {
  std::string magic;
  json header;
  std::string payload;
};

RawFile read_file(const std::filesystem::path& path, bool with_payload = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  RawFile f;
  std::string header_line;
  if (!std::getline(in, f.magic) || !std::getline(in, header_line))
    throw IoError(path.string() + ": missing header");
  try {
    f.header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  if (!with_payload) return f;
  std::ostringstream ss;
  ss << in.rdbuf();
  f.payload = ss.str();
  const auto expected = f.header.value("payload_bytes", std::uint64_t{0});
  if (f.payload.size() != expected)
    throw IoError(path.string() + ": payload length " + std::to_string(f.payload.size()) +
                  " does not match header " + std::to_string(expected));
  if (crc32_of(f.payload) != f.header.value("crc32", std::uint32_t{0}))
    throw IoError(path.string() + ": checksum mismatch");
  return f;
}

void expect_magic(const RawFile& f, const char* magic, const std::filesystem::path& path) {
  if (f.magic != magic)
    throw IoError(path.string() + ": expected '" + magic + "', found '" + f.magic + "'");
}

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void save_dataset(const std::filesystem::path& path, const DatasetFile& file) {
  const std::size_t count = file.entries.size();
  const int n = count ? file.entries.front().size() : 0;
  json prov = json::array();
  std::string payload;
  payload.reserve(count * (1 + 4 * static_cast<std::size_t>(n)) * 8);
  for (const auto& e : file.entries) {
    if (e.size() != n || static_cast<int>(e.u.size()) != n || static_cast<int>(e.T.size()) != n ||
        static_cast<int>(e.q.size()) != n)
      throw ConfigError("save_dataset: entries must share one resolution");
    const double eps = e.eps;
    append_le(payload, std::span<const double>(&eps, 1));
    append_le(payload, e.rho);
    append_le(payload, e.u);
    append_le(payload, e.T);
    append_le(payload, e.q);
    prov.push_back({e.provenance.run_id, e.provenance.time, e.provenance.seed});
  }
  json header{{"format_version", 1}, {"count", count},        {"resolution", n},
              {"seed", file.seed},   {"config", file.config}, {"provenance", prov}};
  write_file(path, kDatasetMagic, header, payload);
}

DatasetFile load_dataset(const std::filesystem::path& path) {
  const RawFile raw = read_file(path);
  expect_magic(raw, kDatasetMagic, path);
  DatasetFile file;
  const auto count = raw.header.at("count").get<std::size_t>();
  const auto n = raw.header.at("resolution").get<std::size_t>();
  file.seed = raw.header.value("seed", std::uint64_t{0});
  file.config = raw.header.value("config", json::object());
  if (raw.payload.size() != count * (1 + 4 * n) * 8)
    throw IoError(path.string() + ": payload size does not match count and resolution");
  const json& prov = raw.header.at("provenance");
  if (prov.size() != count) throw IoError(path.string() + ": provenance count mismatch");
  PayloadReader reader(raw.payload);
  file.entries.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    DatasetEntry e;
    double eps = 0.0;
    reader.read(std::span<double>(&eps, 1));
    e.eps = eps;
    e.rho = reader.read(n);
    e.u = reader.read(n);
    e.T = reader.read(n);
    e.q = reader.read(n);
    e.provenance = {prov[k][0].get<std::int64_t>(), prov[k][1].get<double>(),
                    prov[k][2].get<std::uint64_t>()};
    file.entries.push_back(std::move(e));
  }
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  const std::size_t expected = param_count(file.params.config);
  if (file.params.values.size() != expected)
    throw ConfigError("save_model: parameter count does not match config");
  json header{{"format_version", 1},
              {"vnet", file.params.config},
              {"pipeline", file.pipeline},
              {"stats", file.stats},
              {"seed", file.seed},
              {"best_epoch", file.best_epoch},
              {"param_count", expected},
              {"test_entries", file.test_entries},
              {"extra", file.extra}};
  std::string payload;
  append_le(payload, file.params.values);
  write_file(path, kModelMagic, header, payload);
}

ModelFile load_model(const std::filesystem::path& path) {
  const RawFile raw = read_file(path);
  expect_magic(raw, kModelMagic, path);
  ModelFile file;
  try {
    file.params.config = raw.header.at("vnet").get<VNetConfig>();
    file.pipeline = raw.header.at("pipeline").get<PipelineConfig>();
    file.stats = raw.header.at("stats").get<StandardizationStats>();
  } catch (const ConfigError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  file.seed = raw.header.value("seed", std::uint64_t{0});
  file.best_epoch = raw.header.value("best_epoch", -1);
  file.test_entries = raw.header.value("test_entries", std::vector<std::size_t>{});
  file.extra = raw.header.value("extra", json::object());
  const std::size_t n = param_count(file.params.config);
  if (raw.header.at("param_count").get<std::size_t>() != n || raw.payload.size() != n * 8)
    throw IoError(path.string() + ": parameter payload does not match the network config");
  PayloadReader reader(raw.payload);
  file.params.values = reader.read(n);
  return file;
}

void save_checkpoint(const std::filesystem::path& path, const TrainCheckpoint& ck) {
  const std::size_t n = ck.params.size();
  if (ck.best_params.size() != n || (!ck.adam.m.empty() && (ck.adam.m.size() != n || ck.adam.v.size() != n)))
    throw ConfigError("save_checkpoint: inconsistent vector lengths");
  json hist = json::array();
  for (const auto& r : ck.history)
    hist.push_back({r.series, r.epoch, double_or_null(r.train_mae), double_or_null(r.val_mae), r.lr});
  json header{{"format_version", 1},          {"param_count", n},
              {"next_epoch", ck.next_epoch},  {"best_val", double_or_null(ck.best_val)},
              {"best_epoch", ck.best_epoch},  {"adam_t", ck.adam.t},
              {"has_moments", !ck.adam.m.empty()}, {"history", hist}};
  std::string payload;
  append_le(payload, ck.params);
  append_le(payload, ck.best_params);
  if (!ck.adam.m.empty()) {
    append_le(payload, ck.adam.m);
    append_le(payload, ck.adam.v);
  }
  write_file(path, kCheckpointMagic, header, payload);
}

TrainCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const RawFile raw = read_file(path);
  expect_magic(raw, kCheckpointMagic, path);
  TrainCheckpoint ck;
  const auto n = raw.header.at("param_count").get<std::size_t>();
  ck.next_epoch = raw.header.at("next_epoch").get<int>();
  const auto& bv = raw.header.at("best_val");
  ck.best_val = bv.is_null() ? std::numeric_limits<double>::infinity() : bv.get<double>();
  ck.best_epoch = raw.header.at("best_epoch").get<int>();
  ck.adam.t = raw.header.at("adam_t").get<std::int64_t>();
  for (const auto& r : raw.header.at("history")) {
    auto num = [](const json& v) {
      return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    ck.history.push_back({r[0].get<int>(), r[1].get<int>(), num(r[2]), num(r[3]), r[4].get<double>()});
  }
  PayloadReader reader(raw.payload);
  ck.params = reader.read(n);
  ck.best_params = reader.read(n);
  if (raw.header.at("has_moments").get<bool>()) {
    ck.adam.m = reader.read(n);
    ck.adam.v = reader.read(n);
  }
  if (!reader.done()) throw IoError(path.string() + ": trailing bytes in checkpoint");
  return ck;
}

FileSummary inspect_file(const std::filesystem::path& path) {
  const RawFile raw = read_file(path, false);
  FileSummary s;
  if (raw.magic == kDatasetMagic)
    s.kind = "dataset";
  else if (raw.magic == kModelMagic)
    s.kind = "model";
  else if (raw.magic == kCheckpointMagic)
    s.kind = "checkpoint";
  else
    throw IoError(path.string() + ": unrecognized file type");
  s.header = raw.header;
  s.bytes = std::filesystem::file_size(path);
  return s;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
    : columns_(columns.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_.precision(17);
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  out_ << (in_row_++ ? "," : "") << v;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) {
  out_ << (in_row_++ ? "," : "");
  if (std::isfinite(v))
    out_ << v;
  else
    out_ << "nan";
  return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
  out_ << (in_row_++ ? "," : "") << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw ConfigError("CsvWriter: row has the wrong number of cells");
  out_ << '\n';
  in_row_ = 0;
  if (!out_) throw IoError("CSV write failed");
}

}  // namespace fluxnet
