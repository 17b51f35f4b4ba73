#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faultconsult/timeutil.hpp"

namespace faultconsult {

enum class FaultLabel { normal, misalignment, bearing_wear, overheating, unknown };

inline constexpr std::array<FaultLabel, 5> kAllLabels = {
    FaultLabel::normal, FaultLabel::misalignment, FaultLabel::bearing_wear, FaultLabel::overheating,
    FaultLabel::unknown};

// Labels a machine can actually carry, in generation order.
inline constexpr std::array<FaultLabel, 4> kGoldLabels = {
    FaultLabel::normal, FaultLabel::misalignment, FaultLabel::bearing_wear, FaultLabel::overheating};

// The three fault classes reported per-class in accuracy tables.
inline constexpr std::array<FaultLabel, 3> kFaultClasses = {
    FaultLabel::misalignment, FaultLabel::bearing_wear, FaultLabel::overheating};

std::string_view to_token(FaultLabel label);

// Human-readable name used in report rows ("Bearing Wear").
std::string_view display_name(FaultLabel label);

// Total, case-insensitive label recognition. Canonical tokens and synonyms
// are matched on word boundaries anywhere in the text; when several labels
// match, the most severe wins (overheating > bearing_wear > misalignment >
// normal). No match yields FaultLabel::unknown.
FaultLabel parse_fault_label(std::string_view text);

// Exact token lookup (no synonyms); nullopt for anything else.
std::optional<FaultLabel> label_from_token(std::string_view token);

enum class Channel { vibration, temperature };

std::string_view to_token(Channel channel);
std::optional<Channel> channel_from_token(std::string_view token);
// "g" for vibration, "degC" for temperature.
std::string_view unit_for(Channel channel);

struct SensorSeries {
  Channel channel = Channel::vibration;
  std::string unit;
  double sample_rate_hz = 0.0;
  Timestamp start_time{};
  std::vector<double> values;

  bool operator==(const SensorSeries&) const = default;
};

enum class MaintenanceCategory { inspection, repair, replacement, note };

std::string_view to_token(MaintenanceCategory category);
// Unknown categories fold into `note`.
MaintenanceCategory category_from_token(std::string_view token);

struct MaintenanceEvent {
  Timestamp timestamp{};
  MaintenanceCategory category = MaintenanceCategory::note;
  std::string text;

  bool operator==(const MaintenanceEvent&) const = default;
};

struct MachineRecord {
  std::string machine_id;
  std::string machine_type;
  double rotation_freq_hz = 0.0;
  std::vector<SensorSeries> series;
  std::vector<MaintenanceEvent> maintenance;
  std::optional<FaultLabel> gold_label;

  bool operator==(const MachineRecord&) const = default;
};

enum class ViolationCode {
  EmptyMachineId,
  NonPositiveRotationFrequency,
  NoSeries,
  MissingVibrationSeries,
  MissingTemperatureSeries,
  NonPositiveSampleRate,
  SeriesTooShort,
  NonFiniteValue,
  UnitMismatch,
  EmptyMaintenanceText,
  GoldLabelUnknown,
  DuplicateMachineId,
};

std::string_view code_name(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string detail;
};

// Every violated record invariant; empty iff the record is valid.
std::vector<Violation> validate_machine_record(const MachineRecord& record);

// Record-level checks for every machine plus dataset-wide id uniqueness.
std::vector<Violation> validate_dataset(std::span<const MachineRecord> records);

}  // namespace faultconsult
