#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsim/fed/round.hpp"
#include "fedsim/harness/config.hpp"

namespace fedsim::harness {

// One metrics.csv row.
struct RoundRecord {
    int round = 0;
    std::vector<std::size_t> selected;
    std::size_t uploads_ok = 0;
    double test_acc = 0.0;
    double test_loss = 0.0;
    double c_time = 0.0;
    double c_qu = 0.0;
    double c_total = 0.0;
    double reward = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "round,selected,uploads_ok,test_acc,test_loss,c_time,c_qu,c_total,reward";

struct RunOptions {
    std::size_t workers = 1;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> output_override;
    // Raw config text, copied verbatim into the run directory.
    std::string config_text;
};

struct RunResult {
    std::string run_dir;
    std::vector<RoundRecord> records;
    fed::StopReason stop = fed::StopReason::none;
    double final_accuracy = 0.0;
    int rounds_completed = 0;     // across all episodes
    int rounds_to_target = -1;    // within the first episode; -1 = not reached
};

// Executes the configured experiment and writes metrics.csv, a config
// snapshot, summary.txt and the final model checkpoint into the run
// directory. Identical config + seed reproduce metrics.csv byte for byte.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});
RunResult run_file(const std::string& config_path, RunOptions options = {});

struct SweepRow {
    std::string value;
    int rounds_to_target = -1;
    double final_accuracy = 0.0;
    std::string run_dir;
};

struct SweepResult {
    std::string summary_path;
    std::vector<SweepRow> rows;
};

// Runs the base config once per axis value (axis one of C, E, B, EB) with a
// shared seed and the given target accuracy; writes summary.csv with a
// "-" sentinel where the target was not reached.
SweepResult sweep(const ExperimentConfig& base, const std::string& axis,
                  const std::vector<std::string>& values, double target_accuracy,
                  const RunOptions& options = {});

// Writes accuracy.dat and loss.dat (round vs value, whitespace-separated)
// next to an existing metrics.csv; values are copied, never recomputed.
void emit_plot_series(const std::string& run_dir);

// Shortest round-trip decimal form, used for all CSV numbers.
std::string format_double(double v);

}  // namespace fedsim::harness
