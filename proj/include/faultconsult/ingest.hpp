#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "faultconsult/domain.hpp"

namespace faultconsult {

inline constexpr int kManifestVersion = 1;

struct SensorFileEntry {
  std::filesystem::path path;  // resolved against the manifest directory
  Channel channel = Channel::vibration;
  double sample_rate_hz = 0.0;
  Timestamp start_time{};

  bool operator==(const SensorFileEntry&) const = default;
};

struct ManifestEntry {
  std::string machine_id;
  std::string machine_type;
  double rotation_freq_hz = 0.0;
  // Raw token as written; interpreted by load_dataset.
  std::optional<std::string> gold_label;
  std::vector<SensorFileEntry> sensor_files;
  std::optional<std::filesystem::path> maintenance_file;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  int version = kManifestVersion;
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> machines;
};

// Parses and structurally validates a manifest. Relative paths are resolved
// against the manifest's directory. Existence of referenced files is
// checked later by load_dataset so the failure can name the machine.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Serializes a manifest; paths are written relative to `base_dir` when they
// live beneath it.
std::string manifest_to_json(const DatasetManifest& manifest);

// Header `timestamp,value`, then `<RFC3339>,<decimal>` rows with strictly
// increasing timestamps. Line numbers in errors are 1-based.
SensorSeries parse_sensor_csv(const std::filesystem::path& path, Channel channel, double sample_rate_hz,
                              Timestamp start_time);

// One JSON object per line with `timestamp`, `category`, `text`. Blank lines
// are skipped. Result is stably sorted by timestamp.
std::vector<MaintenanceEvent> parse_maintenance_jsonl(const std::filesystem::path& path);

// Loads every machine in manifest order. Loading fans out over `workers`
// threads; errors are tagged with the machine id.
std::vector<MachineRecord> load_dataset(const DatasetManifest& manifest, unsigned workers = 1);

// Reads a whole file; IoError when unreadable.
std::string read_file(const std::filesystem::path& path);

}  // namespace faultconsult
