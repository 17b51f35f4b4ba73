#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faultconsult/domain.hpp"
#include "faultconsult/ingest.hpp"

namespace faultconsult {

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_per_class = 1;
  // Vibration snapshot length; duration_s * rotation_freq_hz must be whole.
  double duration_s = 8.0;
  double vib_rate_hz = 256.0;
  double temp_rate_hz = 1.0;
  double rotation_freq_hz = 10.0;
  // Temperature log window. The vibration snapshot covers its last duration_s.
  double temp_duration_s = 7200.0;
};

// Signature constants shared by the generator and its tests.
namespace signature {
inline constexpr double kBaseVibAmplitude = 0.10;
inline constexpr double kVibNoiseSigma = 0.05;
inline constexpr double kBaseTempC = 40.0;
inline constexpr double kTempNoiseSigma = 0.3;
inline constexpr double kHarmonicAmplitude = 0.30;
inline constexpr double kImpulseFraction = 0.01;
inline constexpr double kRampCPerHour = 8.0;
}  // namespace signature

// Oracle rule thresholds.
namespace oracle_rule {
inline constexpr double kSlopeCPerHour = 2.0;
inline constexpr double kFinalQuartileMeanC = 45.0;
inline constexpr double kExcessKurtosis = 3.0;
inline constexpr double kHarmonicRatio = 1.5;
}  // namespace oracle_rule

// Throws ConfigInvalid on Nyquist, whole-cycle, or non-positive parameters.
void validate_config(const SynthConfig& config);

// Deterministic in (seed, label, config). `label` must not be unknown.
MachineRecord generate_machine(std::uint64_t seed, FaultLabel label, const SynthConfig& config,
                               std::string machine_id = {});

// 4 * n_per_class machines; machine i has class kGoldLabels[i % 4], id
// "M%04d", and seed derive_seed(config.seed, i).
std::vector<MachineRecord> generate_dataset(const SynthConfig& config);

// Rule-based diagnosis in priority order: overheating, bearing_wear,
// misalignment, otherwise normal. Never returns unknown.
FaultLabel oracle_diagnose(const MachineRecord& record);

// Writes the ingest formats (one CSV per series, one JSONL per machine, one
// manifest.json) into out_dir and returns the manifest.
DatasetManifest write_dataset(std::span<const MachineRecord> records, const std::filesystem::path& out_dir);

}  // namespace faultconsult
