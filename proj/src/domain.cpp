#include "faultconsult/domain.hpp"

#include <cmath>
#include <set>

namespace faultconsult {

namespace {

struct SynonymGroup {
  FaultLabel label;
  std::array<std::string_view, 5> phrases;
};

// Fixed table, listed in severity priority order. Version 1.
constexpr std::array<SynonymGroup, 4> kSynonyms = {{
    {FaultLabel::overheating, {"overheating", "overheat", "thermal runaway", "excessive temperature", ""}},
    {FaultLabel::bearing_wear, {"bearing_wear", "bearing wear", "bearing degradation", "worn bearing", ""}},
    {FaultLabel::misalignment, {"misalignment", "misaligned", "shaft misalignment", "", ""}},
    {FaultLabel::normal, {"normal", "healthy", "no fault", "ok", ""}},
}};

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Lowercase, with every whitespace run collapsed to one space.
std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    if (is_space(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(ascii_lower(c));
      in_space = false;
    }
  }
  return out;
}

bool contains_phrase(std::string_view hay, std::string_view phrase) {
  for (std::size_t pos = hay.find(phrase); pos != std::string_view::npos; pos = hay.find(phrase, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
    const std::size_t end = pos + phrase.size();
    const bool right_ok = end == hay.size() || !is_word_char(hay[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

std::string_view to_token(FaultLabel label) {
  switch (label) {
    case FaultLabel::normal: return "normal";
    case FaultLabel::misalignment: return "misalignment";
    case FaultLabel::bearing_wear: return "bearing_wear";
    case FaultLabel::overheating: return "overheating";
    case FaultLabel::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view display_name(FaultLabel label) {
  switch (label) {
    case FaultLabel::normal: return "Normal";
    case FaultLabel::misalignment: return "Misalignment";
    case FaultLabel::bearing_wear: return "Bearing Wear";
    case FaultLabel::overheating: return "Overheating";
    case FaultLabel::unknown: return "Unknown";
  }
  return "Unknown";
}

FaultLabel parse_fault_label(std::string_view text) {
  const std::string hay = normalize(text);
  for (const auto& group : kSynonyms) {
    for (std::string_view phrase : group.phrases) {
      if (!phrase.empty() && contains_phrase(hay, phrase)) return group.label;
    }
  }
  return FaultLabel::unknown;
}

std::optional<FaultLabel> label_from_token(std::string_view token) {
  for (FaultLabel l : kAllLabels) {
    if (to_token(l) == token) return l;
  }
  return std::nullopt;
}

std::string_view to_token(Channel channel) {
  return channel == Channel::vibration ? "vibration" : "temperature";
}

std::optional<Channel> channel_from_token(std::string_view token) {
  if (token == "vibration") return Channel::vibration;
  if (token == "temperature") return Channel::temperature;
  return std::nullopt;
}

std::string_view unit_for(Channel channel) { return channel == Channel::vibration ? "g" : "degC"; }

std::string_view to_token(MaintenanceCategory category) {
  switch (category) {
    case MaintenanceCategory::inspection: return "inspection";
    case MaintenanceCategory::repair: return "repair";
    case MaintenanceCategory::replacement: return "replacement";
    case MaintenanceCategory::note: return "note";
  }
  return "note";
}

MaintenanceCategory category_from_token(std::string_view token) {
  if (token == "inspection") return MaintenanceCategory::inspection;
  if (token == "repair") return MaintenanceCategory::repair;
  if (token == "replacement") return MaintenanceCategory::replacement;
  return MaintenanceCategory::note;
}

std::string_view code_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::EmptyMachineId: return "EmptyMachineId";
    case ViolationCode::NonPositiveRotationFrequency: return "NonPositiveRotationFrequency";
    case ViolationCode::NoSeries: return "NoSeries";
    case ViolationCode::MissingVibrationSeries: return "MissingVibrationSeries";
    case ViolationCode::MissingTemperatureSeries: return "MissingTemperatureSeries";
    case ViolationCode::NonPositiveSampleRate: return "NonPositiveSampleRate";
    case ViolationCode::SeriesTooShort: return "SeriesTooShort";
    case ViolationCode::NonFiniteValue: return "NonFiniteValue";
    case ViolationCode::UnitMismatch: return "UnitMismatch";
    case ViolationCode::EmptyMaintenanceText: return "EmptyMaintenanceText";
    case ViolationCode::GoldLabelUnknown: return "GoldLabelUnknown";
    case ViolationCode::DuplicateMachineId: return "DuplicateMachineId";
  }
  return "Unknown";
}

std::vector<Violation> validate_machine_record(const MachineRecord& record) {
  std::vector<Violation> out;
  auto add = [&out](ViolationCode code, std::string detail) { out.push_back({code, std::move(detail)}); };

  if (record.machine_id.empty()) add(ViolationCode::EmptyMachineId, "machine_id is empty");
  if (!(record.rotation_freq_hz > 0.0) || !std::isfinite(record.rotation_freq_hz)) {
    add(ViolationCode::NonPositiveRotationFrequency, "rotation_freq_hz must be positive");
  }
  if (record.gold_label == FaultLabel::unknown) add(ViolationCode::GoldLabelUnknown, "gold label is unknown");

  if (record.series.empty()) add(ViolationCode::NoSeries, "no sensor series");
  bool has_vib = false, has_temp = false;
  for (std::size_t i = 0; i < record.series.size(); ++i) {
    const SensorSeries& s = record.series[i];
    const std::string where = "series " + std::to_string(i) + " (" + std::string(to_token(s.channel)) + ")";
    has_vib |= s.channel == Channel::vibration;
    has_temp |= s.channel == Channel::temperature;
    if (s.unit != unit_for(s.channel)) add(ViolationCode::UnitMismatch, where + ": unit '" + s.unit + "'");
    if (!(s.sample_rate_hz > 0.0) || !std::isfinite(s.sample_rate_hz)) {
      add(ViolationCode::NonPositiveSampleRate, where + ": sample rate must be positive");
    }
    if (s.values.size() < 2) add(ViolationCode::SeriesTooShort, where + ": fewer than 2 samples");
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      if (!std::isfinite(s.values[k])) {
        add(ViolationCode::NonFiniteValue, where + ": sample " + std::to_string(k) + " is not finite");
        break;
      }
    }
  }
  if (!record.series.empty() && !has_vib) add(ViolationCode::MissingVibrationSeries, "no vibration series");
  if (!record.series.empty() && !has_temp) add(ViolationCode::MissingTemperatureSeries, "no temperature series");

  for (std::size_t i = 0; i < record.maintenance.size(); ++i) {
    if (record.maintenance[i].text.empty()) {
      add(ViolationCode::EmptyMaintenanceText, "maintenance event " + std::to_string(i) + " has empty text");
    }
  }
  return out;
}

std::vector<Violation> validate_dataset(std::span<const MachineRecord> records) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const MachineRecord& r : records) {
    for (Violation& v : validate_machine_record(r)) {
      v.detail = r.machine_id + ": " + v.detail;
      out.push_back(std::move(v));
    }
    if (!seen.insert(r.machine_id).second) {
      out.push_back({ViolationCode::DuplicateMachineId, "duplicate machine_id '" + r.machine_id + "'"});
    }
  }
  return out;
}

}  // namespace faultconsult
