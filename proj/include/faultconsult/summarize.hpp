#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faultconsult/domain.hpp"

namespace faultconsult {

inline constexpr double kAnomalyZ = 3.0;

struct SeriesSummary {
  Channel channel = Channel::vibration;
  std::string unit;
  double sample_rate_hz = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double rms = 0.0;
  double excess_kurtosis = 0.0;
  double min = 0.0;
  double max = 0.0;
  double slope_per_hour = 0.0;
  std::size_t anomaly_count = 0;
  // Vibration only.
  std::optional<double> rotation_freq_hz;
  std::optional<double> tone_mag_f0;
  std::optional<double> tone_mag_2f0;
};

// Population moments over the series, a least-squares slope against hours
// since start, and for vibration the Goertzel magnitudes at f0 and 2*f0.
// Degenerate (std == 0) series report kurtosis 0 and no anomalies.
SeriesSummary summarize_series(const SensorSeries& series, std::optional<double> rotation_freq_hz);

// One summary per series, in record order.
std::vector<SeriesSummary> summarize_machine(const MachineRecord& machine);

// |sum_k x[k] exp(-2 pi i f k / fs)| via the Goertzel recurrence.
// Requires 0 < target_freq_hz < sample_rate_hz / 2.
double goertzel_magnitude(std::span<const double> values, double sample_rate_hz, double target_freq_hz);

// Number of most recent maintenance events included in the summary text.
inline constexpr std::size_t kSummaryMaintenanceEvents = 5;

// Text block fed to consultation prompts. Vibration series come first,
// then temperature; numbers use 6 significant digits.
std::string render_summary_text(const MachineRecord& machine, std::span<const SeriesSummary> summaries);

}  // namespace faultconsult
