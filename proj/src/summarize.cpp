#include "faultconsult/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "faultconsult/error.hpp"

namespace faultconsult {

double goertzel_magnitude(std::span<const double> values, double sample_rate_hz, double target_freq_hz) {
  if (!(target_freq_hz > 0.0) || !(target_freq_hz < sample_rate_hz / 2.0)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "target frequency %g Hz outside (0, %g) Hz", target_freq_hz, sample_rate_hz / 2.0);
    throw Error(ErrorCode::FrequencyOutOfRange, buf);
  }
  const double omega = 2.0 * std::numbers::pi * target_freq_hz / sample_rate_hz;
  const double c = std::cos(omega);
  const double coeff = 2.0 * c;
  double s1 = 0.0, s2 = 0.0;
  for (double x : values) {
    const double s0 = x + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  // y = s1 - e^{-i omega} s2, whose modulus equals the DFT-sum modulus.
  const double re = s1 - c * s2;
  const double im = std::sin(omega) * s2;
  return std::hypot(re, im);
}

SeriesSummary summarize_series(const SensorSeries& series, std::optional<double> rotation_freq_hz) {
  if (series.channel == Channel::vibration && !rotation_freq_hz) {
    throw Error(ErrorCode::MissingRotationFrequency, "vibration series requires a rotation frequency");
  }
  const auto& x = series.values;
  SeriesSummary s;
  s.channel = series.channel;
  s.unit = series.unit;
  s.sample_rate_hz = series.sample_rate_hz;
  s.n = x.size();
  if (x.empty()) return s;
  const double n = static_cast<double>(x.size());

  double sum = 0.0, sum_sq = 0.0;
  s.min = x.front();
  s.max = x.front();
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / n;
  s.rms = std::sqrt(sum_sq / n);

  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  s.std = std::sqrt(m2);
  s.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

  if (s.std > 0.0) {
    for (double v : x) {
      if (std::abs(v - s.mean) / s.std > kAnomalyZ) ++s.anomaly_count;
    }
  }

  // Abscissae are k / fs seconds, expressed in hours.
  const double dt_h = 1.0 / series.sample_rate_hz / 3600.0;
  const double t_mean = (n - 1.0) / 2.0 * dt_h;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dt = static_cast<double>(k) * dt_h - t_mean;
    sxy += dt * (x[k] - s.mean);
    sxx += dt * dt;
  }
  s.slope_per_hour = sxx > 0.0 ? sxy / sxx : 0.0;

  if (series.channel == Channel::vibration) {
    s.rotation_freq_hz = rotation_freq_hz;
    s.tone_mag_f0 = goertzel_magnitude(x, series.sample_rate_hz, *rotation_freq_hz);
    s.tone_mag_2f0 = goertzel_magnitude(x, series.sample_rate_hz, 2.0 * *rotation_freq_hz);
  }
  return s;
}

std::vector<SeriesSummary> summarize_machine(const MachineRecord& machine) {
  std::vector<SeriesSummary> out;
  out.reserve(machine.series.size());
  for (const SensorSeries& s : machine.series) out.push_back(summarize_series(s, machine.rotation_freq_hz));
  return out;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string signed_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.6g", v);
  return buf;
}

}  // namespace

std::string render_summary_text(const MachineRecord& machine, std::span<const SeriesSummary> summaries) {
  if (summaries.size() != machine.series.size()) {
    throw std::invalid_argument("render_summary_text: one summary per series required");
  }
  std::string out;
  auto line = [&out](const std::string& text) {
    out += text;
    out += '\n';
  };

  line("=== SENSOR SUMMARY ===");
  line("machine: " + machine.machine_id);
  line("machine type: " + machine.machine_type);
  line("rotation frequency: " + num(machine.rotation_freq_hz) + " Hz");

  for (Channel channel : {Channel::vibration, Channel::temperature}) {
    int ordinal = 0;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      const SeriesSummary& s = summaries[i];
      if (s.channel != channel) continue;
      ++ordinal;
      std::string name(to_token(channel));
      if (ordinal > 1) name += " #" + std::to_string(ordinal);
      const std::string& u = s.unit;

      line("[" + name + "] " + std::to_string(s.n) + " samples at " + num(s.sample_rate_hz) + " Hz starting " +
           format_rfc3339(machine.series[i].start_time));
      line(name + " mean: " + signed_num(s.mean) + " " + u);
      line(name + " std: " + num(s.std) + " " + u);
      line(name + " rms: " + num(s.rms) + " " + u);
      line(name + " excess kurtosis: " + signed_num(s.excess_kurtosis));
      line(name + " min: " + signed_num(s.min) + " " + u);
      line(name + " max: " + signed_num(s.max) + " " + u);
      line(name + " slope: " + signed_num(s.slope_per_hour) + " " + u + "/hour");
      line(name + " anomalies (|z| > 3): " + std::to_string(s.anomaly_count) + " of " + std::to_string(s.n));
      if (s.tone_mag_f0 && s.tone_mag_2f0 && s.rotation_freq_hz) {
        line(name + " 1x tone magnitude (" + num(*s.rotation_freq_hz) + " Hz): " + num(*s.tone_mag_f0));
        line(name + " 2x tone magnitude (" + num(2.0 * *s.rotation_freq_hz) + " Hz): " + num(*s.tone_mag_2f0));
        line(name + " 2x/1x tone ratio: " + (*s.tone_mag_f0 > 0.0 ? num(*s.tone_mag_2f0 / *s.tone_mag_f0) : "n/a"));
      }
    }
  }

  line("maintenance events (most recent " + std::to_string(kSummaryMaintenanceEvents) + "):");
  if (machine.maintenance.empty()) {
    line("none recorded");
  } else {
    std::vector<const MaintenanceEvent*> events;
    for (const MaintenanceEvent& ev : machine.maintenance) events.push_back(&ev);
    std::stable_sort(events.begin(), events.end(),
                     [](const MaintenanceEvent* a, const MaintenanceEvent* b) { return a->timestamp < b->timestamp; });
    const std::size_t first = events.size() > kSummaryMaintenanceEvents ? events.size() - kSummaryMaintenanceEvents : 0;
    for (std::size_t i = first; i < events.size(); ++i) {
      std::string text = events[i]->text;
      std::replace(text.begin(), text.end(), '\n', ' ');
      line("- " + format_rfc3339(events[i]->timestamp) + " [" + std::string(to_token(events[i]->category)) + "] " + text);
    }
  }
  line("=== END SENSOR SUMMARY ===");
  return out;
}

}  // namespace faultconsult
