// Writes the bundled two-subject fixture: 4 Hz wrist-like recordings where the
// baseline half is a flat level plus noise and the stress half carries a skin
// conductance response every 40-50 s.
//
//   make_fixture <out-dir>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>

#include "gsr/ingest.hpp"

namespace {

double scr(double t) { return t < 0.0 ? 0.0 : std::exp(-t / 2.0) - std::exp(-t / 0.7); }

gsr::Recording subject(const std::string& id, std::uint64_t seed, bool stress_first) {
  constexpr double fs = 4.0;
  constexpr double half_s = 600.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.002);
  std::uniform_real_distribution<double> gap(40.0, 50.0), amp(0.4, 0.7);

  const double stress_begin = stress_first ? 0.0 : half_s;
  std::vector<std::pair<double, double>> pulses;  // onset, amplitude
  for (double t = stress_begin + 3.0; t < stress_begin + half_s; t += gap(rng)) pulses.emplace_back(t, amp(rng));

  gsr::Recording rec;
  rec.id = id;
  rec.trace.fs = fs;
  const auto n = static_cast<std::size_t>(2 * half_s * fs);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double v = 2.0 + 0.05 * std::sin(2 * M_PI * t / 900.0) + noise(rng);
    for (const auto& [onset, a] : pulses) v += a * scr(t - onset);
    rec.trace.samples.push_back(v);
    const bool stressed = (t >= stress_begin) == (t < stress_begin + half_s);
    rec.labels.push_back(stressed ? gsr::kStressed : gsr::kNotStressed);
  }
  return rec;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <out-dir>\n";
    return 1;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  gsr::write_recording_csv(dir / "S1.csv", subject("S1", 1001, false));
  gsr::write_recording_csv(dir / "S2.csv", subject("S2", 1002, true));
  return 0;
}
