#include "faultconsult/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "faultconsult/error.hpp"
#include "faultconsult/rng.hpp"
#include "faultconsult/summarize.hpp"
#include "json.hpp"

namespace faultconsult {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t { kVibNoise = 1, kTempNoise = 2, kImpulses = 3, kMeta = 4 };

constexpr std::array<std::string_view, 4> kMachineTypes = {"induction_motor", "centrifugal_pump", "fan",
                                                           "screw_compressor"};

struct CannedEvent {
  MaintenanceCategory category;
  std::string_view text;
};

// Class-consistent history that never names the fault class or a synonym.
std::array<CannedEvent, 2> canned_history(FaultLabel label) {
  switch (label) {
    case FaultLabel::misalignment:
      return {{{MaintenanceCategory::repair, "Motor remounted on a new baseplate after relocation; coupling reinstalled."},
               {MaintenanceCategory::note, "Operator reports increased axial vibration near the coupling."}}};
    case FaultLabel::bearing_wear:
      return {{{MaintenanceCategory::inspection, "Lubrication interval extended due to access restrictions."},
               {MaintenanceCategory::note, "Technician reports intermittent grinding noise at the drive-end housing."}}};
    case FaultLabel::overheating:
      return {{{MaintenanceCategory::repair, "Cooling fan guard cleaned of accumulated debris."},
               {MaintenanceCategory::note, "Operator reports the motor housing is hot to the touch late in shift."}}};
    default:
      return {{{MaintenanceCategory::inspection, "Quarterly inspection completed; lubrication topped up."},
               {MaintenanceCategory::note, "Operator reports smooth running at rated load."}}};
  }
}

bool is_whole(double v) { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); }

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); }

Timestamp epoch_start() {
  using namespace std::chrono;
  return sys_days{year{2024} / March / 1};
}

std::chrono::nanoseconds seconds_to_ns(double s) {
  return std::chrono::nanoseconds{static_cast<std::int64_t>(std::llround(s * 1e9))};
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "error writing " + path.string());
}

std::string series_csv(const SensorSeries& s) {
  std::string out = "timestamp,value\n";
  out.reserve(s.values.size() * 48);
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    const Timestamp t = s.start_time + seconds_to_ns(static_cast<double>(k) / s.sample_rate_hz);
    out += format_rfc3339(t);
    out += ',';
    out += format_double(s.values[k]);
    out += '\n';
  }
  return out;
}

}  // namespace

void validate_config(const SynthConfig& c) {
  for (double v : {c.duration_s, c.vib_rate_hz, c.temp_rate_hz, c.rotation_freq_hz, c.temp_duration_s}) {
    if (!(v > 0.0) || !std::isfinite(v)) invalid("synth parameters must be positive and finite");
  }
  if (c.n_per_class == 0) invalid("n_per_class must be positive");
  if (!(2.0 * c.rotation_freq_hz < c.vib_rate_hz / 2.0)) {
    invalid("rotation frequency and its double must lie below the vibration Nyquist frequency");
  }
  if (!is_whole(c.duration_s * c.rotation_freq_hz)) invalid("duration_s * rotation_freq_hz must be a whole number");
  if (!is_whole(c.duration_s * c.vib_rate_hz)) invalid("duration_s * vib_rate_hz must be a whole number of samples");
  if (std::llround(c.temp_duration_s * c.temp_rate_hz) < 2) invalid("temperature log needs at least 2 samples");
}

MachineRecord generate_machine(std::uint64_t seed, FaultLabel label, const SynthConfig& config,
                               std::string machine_id) {
  validate_config(config);
  if (label == FaultLabel::unknown) invalid("cannot generate a machine of class unknown");

  using namespace signature;
  const double f0 = config.rotation_freq_hz;
  const Timestamp t0 = epoch_start();

  MachineRecord rec;
  if (machine_id.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%016llx", static_cast<unsigned long long>(seed));
    machine_id = buf;
  }
  rec.machine_id = std::move(machine_id);
  rec.rotation_freq_hz = f0;
  rec.gold_label = label;

  CounterRng meta(seed, kMeta);
  rec.machine_type = std::string(kMachineTypes[meta.below(kMachineTypes.size())]);

  // Vibration snapshot at the end of the temperature window.
  SensorSeries vib;
  vib.channel = Channel::vibration;
  vib.unit = std::string(unit_for(Channel::vibration));
  vib.sample_rate_hz = config.vib_rate_hz;
  vib.start_time = t0 + seconds_to_ns(std::max(0.0, config.temp_duration_s - config.duration_s));
  const auto n_vib = static_cast<std::size_t>(std::llround(config.duration_s * config.vib_rate_hz));
  vib.values.resize(n_vib);
  CounterRng vib_noise(seed, kVibNoise);
  for (std::size_t k = 0; k < n_vib; ++k) {
    const double t = static_cast<double>(k) / config.vib_rate_hz;
    double v = kBaseVibAmplitude * std::sin(2.0 * std::numbers::pi * f0 * t) + vib_noise.normal(0.0, kVibNoiseSigma);
    if (label == FaultLabel::misalignment) v += kHarmonicAmplitude * std::sin(2.0 * std::numbers::pi * 2.0 * f0 * t);
    vib.values[k] = v;
  }
  if (label == FaultLabel::bearing_wear) {
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kImpulseFraction * n_vib)));
    std::vector<std::size_t> idx(n_vib);
    for (std::size_t k = 0; k < n_vib; ++k) idx[k] = k;
    CounterRng pick(seed, kImpulses);
    for (std::size_t k = 0; k < count; ++k) std::swap(idx[k], idx[k + pick.below(n_vib - k)]);
    std::vector<std::size_t> positions(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(positions.begin(), positions.end());
    for (std::size_t k = 0; k < positions.size(); ++k) vib.values[positions[k]] += (k % 2 == 0) ? 1.0 : -1.0;
  }

  SensorSeries temp;
  temp.channel = Channel::temperature;
  temp.unit = std::string(unit_for(Channel::temperature));
  temp.sample_rate_hz = config.temp_rate_hz;
  temp.start_time = t0;
  const auto n_temp = static_cast<std::size_t>(std::llround(config.temp_duration_s * config.temp_rate_hz));
  temp.values.resize(n_temp);
  CounterRng temp_noise(seed, kTempNoise);
  for (std::size_t k = 0; k < n_temp; ++k) {
    double v = kBaseTempC + temp_noise.normal(0.0, kTempNoiseSigma);
    if (label == FaultLabel::overheating) v += kRampCPerHour * (static_cast<double>(k) / config.temp_rate_hz / 3600.0);
    temp.values[k] = v;
  }

  rec.series.push_back(std::move(vib));
  rec.series.push_back(std::move(temp));

  const auto history = canned_history(label);
  const std::array<std::chrono::hours, 2> ago = {std::chrono::hours{24 * 30}, std::chrono::hours{24 * 3}};
  for (std::size_t i = 0; i < history.size(); ++i) {
    rec.maintenance.push_back({t0 - ago[i], history[i].category, std::string(history[i].text)});
  }
  return rec;
}

std::vector<MachineRecord> generate_dataset(const SynthConfig& config) {
  validate_config(config);
  std::vector<MachineRecord> out;
  const std::size_t total = config.n_per_class * kGoldLabels.size();
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "M%04zu", i);
    out.push_back(generate_machine(derive_seed(config.seed, i), kGoldLabels[i % kGoldLabels.size()], config, id));
  }
  return out;
}

FaultLabel oracle_diagnose(const MachineRecord& record) {
  using namespace oracle_rule;
  bool overheating = false, impulsive = false, harmonic = false;
  for (const SensorSeries& s : record.series) {
    const SeriesSummary sum = summarize_series(s, record.rotation_freq_hz);
    if (s.channel == Channel::temperature) {
      const std::size_t tail = std::max<std::size_t>(1, s.values.size() / 4);
      double acc = 0.0;
      for (std::size_t k = s.values.size() - tail; k < s.values.size(); ++k) acc += s.values[k];
      const double final_quartile_mean = acc / static_cast<double>(tail);
      overheating |= sum.slope_per_hour > kSlopeCPerHour && final_quartile_mean > kFinalQuartileMeanC;
    } else {
      impulsive |= sum.excess_kurtosis > kExcessKurtosis;
      if (sum.tone_mag_f0 && *sum.tone_mag_f0 > 0.0) harmonic |= *sum.tone_mag_2f0 / *sum.tone_mag_f0 > kHarmonicRatio;
    }
  }
  if (overheating) return FaultLabel::overheating;
  if (impulsive) return FaultLabel::bearing_wear;
  if (harmonic) return FaultLabel::misalignment;
  return FaultLabel::normal;
}

DatasetManifest write_dataset(std::span<const MachineRecord> records, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  for (const MachineRecord& rec : records) {
    ManifestEntry entry;
    entry.machine_id = rec.machine_id;
    entry.machine_type = rec.machine_type;
    entry.rotation_freq_hz = rec.rotation_freq_hz;
    if (rec.gold_label) entry.gold_label = std::string(to_token(*rec.gold_label));

    for (std::size_t i = 0; i < rec.series.size(); ++i) {
      const SensorSeries& s = rec.series[i];
      const fs::path file = out_dir / (rec.machine_id + "_s" + std::to_string(i) + "_" + std::string(to_token(s.channel)) + ".csv");
      write_text(file, series_csv(s));
      entry.sensor_files.push_back({file, s.channel, s.sample_rate_hz, s.start_time});
    }

    std::string jsonl;
    for (const MaintenanceEvent& ev : rec.maintenance) {
      nlohmann::json obj = {{"timestamp", format_rfc3339(ev.timestamp)},
                            {"category", std::string(to_token(ev.category))},
                            {"text", ev.text}};
      jsonl += obj.dump() + "\n";
    }
    const fs::path mfile = out_dir / (rec.machine_id + "_maintenance.jsonl");
    write_text(mfile, jsonl);
    entry.maintenance_file = mfile;
    manifest.machines.push_back(std::move(entry));
  }
  write_text(out_dir / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

}  // namespace faultconsult
