#pragma once

// Test-only helpers: temporary directories, scripted backends, and
// independent reference implementations of the numeric summaries.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "faultconsult/domain.hpp"
#include "faultconsult/llm.hpp"

namespace fctest {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("faultconsult-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// Backend answering through a callback and counting calls.
class LambdaBackend final : public faultconsult::ChatBackend {
 public:
  using Fn = std::function<std::string(const faultconsult::ChatRequest&)>;
  explicit LambdaBackend(Fn fn) : fn_(std::move(fn)) {}

  std::string complete(const faultconsult::ChatRequest& request) override {
    {
      std::lock_guard lock(mu_);
      requests_.push_back(request);
    }
    ++calls_;
    return fn_(request);
  }
  std::string_view kind() const override { return "lambda"; }

  int calls() const { return calls_; }
  std::vector<faultconsult::ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  Fn fn_;
  std::atomic<int> calls_{0};
  mutable std::mutex mu_;
  std::vector<faultconsult::ChatRequest> requests_;
};

// Extended-precision recomputation of every SeriesSummary field from the
// textbook formulas, written without reference to the library code.
struct ReferenceSummary {
  long double mean = 0, std = 0, rms = 0, excess_kurtosis = 0, min = 0, max = 0, slope_per_hour = 0;
  std::size_t anomaly_count = 0;
};

inline ReferenceSummary reference_summary(const std::vector<double>& x, double fs_hz) {
  ReferenceSummary r;
  const long double n = static_cast<long double>(x.size());
  long double s = 0, sq = 0;
  r.min = r.max = x.at(0);
  for (double v : x) {
    s += v;
    sq += static_cast<long double>(v) * v;
    if (v < r.min) r.min = v;
    if (v > r.max) r.max = v;
  }
  r.mean = s / n;
  r.rms = std::sqrt(sq / n);
  long double m2 = 0, m4 = 0;
  for (double v : x) {
    const long double d = v - r.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  r.std = std::sqrt(m2);
  r.excess_kurtosis = m2 == 0 ? 0 : m4 / (m2 * m2) - 3;
  if (r.std > 0) {
    for (double v : x) {
      if (std::fabs(v - r.mean) / r.std > 3) ++r.anomaly_count;
    }
  }
  // Normal equations in raw sums, time in hours.
  long double st = 0, stt = 0, sty = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const long double t = static_cast<long double>(k) / fs_hz / 3600;
    st += t;
    stt += t * t;
    sty += t * x[k];
  }
  const long double den = n * stt - st * st;
  r.slope_per_hour = den == 0 ? 0 : (n * sty - st * s) / den;
  return r;
}

// |sum_k x[k] exp(-2 pi i f k / fs)| summed directly.
inline long double reference_dft_magnitude(const std::vector<double>& x, double fs_hz, double f_hz) {
  long double re = 0, im = 0;
  const long double w = 2 * std::numbers::pi_v<long double> * f_hz / fs_hz;
  for (std::size_t k = 0; k < x.size(); ++k) {
    re += x[k] * std::cos(w * static_cast<long double>(k));
    im -= x[k] * std::sin(w * static_cast<long double>(k));
  }
  return std::hypot(re, im);
}

inline bool rel_close(long double a, long double b, long double tol) {
  const long double scale = std::max(std::fabs(a), std::fabs(b));
  if (scale == 0) return true;
  return std::fabs(a - b) <= tol * scale;
}

// Seeded Gaussian series with an offset and a trend.
inline std::vector<double> seeded_series(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double offset = 50.0 * u(gen), sigma = 0.1 + 5.0 * (u(gen) + 1.0), trend = 0.01 * u(gen);
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = offset + trend * static_cast<double>(k) + sigma * noise(gen);
  return x;
}

}  // namespace fctest
