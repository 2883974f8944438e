// Library walk-through on one recording: preprocess, decompose, detect peaks
// and print per-window statistical features.
//
//   basic_usage <recording.csv> [config]

#include <iostream>

#include "gsr/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: basic_usage <recording.csv> [config]\n";
    return 1;
  }
  try {
    const gsr::PipelineConfig cfg = argc > 2 ? gsr::load_config(argv[2]) : gsr::PipelineConfig{};
    const auto rec = gsr::parse_recording_csv(std::filesystem::path(argv[1]));
    const auto a = gsr::analyze_recording(rec, cfg, rec.has_labels());

    std::cout << rec.id << ": " << rec.trace.size() << " samples at " << rec.trace.fs << " Hz -> "
              << a.preprocessed.trace.size() << " at " << a.preprocessed.trace.fs << " Hz\n";
    std::cout << "decomposition " << gsr::qp::to_string(a.decomposition.status) << " after "
              << a.decomposition.iterations << " iterations, " << a.peaks.size() << " peaks\n";
    for (const auto& p : a.peaks)
      std::cout << "  peak at " << p.time_s << " s, amplitude " << p.amplitude << "\n";
    for (std::size_t i = 0; i < a.windows.size(); ++i)
      std::cout << "  window " << a.windows[i].start_s << "-" << a.windows[i].end_s << " s label "
                << a.windows[i].label << ": peaks " << a.stats[i].num_peaks << ", mean " << a.stats[i].mean_gsr
                << ", max amp " << a.stats[i].max_peak_amp << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
