#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "w2w/pipeline.hpp"

namespace w2w::cli {

struct SweepPoint {
  int paragraphs_min = 4;
  int paragraphs_max = 5;
  int objectives = 8;
  int important_cap = 15;
};

// "4-5,8,15" or "4,8,15".
SweepPoint parse_sweep_point(std::string_view text);
std::string sweep_label(const SweepPoint& p);

struct CliConfig {
  RunConfig run;
  int batch_runs = 10;
  std::vector<SweepPoint> sweep;  // empty: the run config's own values
  int workers = 0;                // 0: one per sweep point
  int coherence_threshold = 70;
};

// Built-in defaults: shipped placeholder tiles, source-tree templates.
CliConfig default_config();

// Overlays a TOML file onto `base`. Keys mirror RunConfig field names;
// relative tileset, script and template paths resolve against the file.
CliConfig load_config_file(const std::string& path, CliConfig base);

// Reads the script file (when one is set) into a fresh mock provider.
void attach_script(RunConfig& run);

struct RunOutcome {
  std::string run_dir;
  bool completed = false;
  std::optional<EvaluationReport> final_evaluation;
  std::string error;  // hard error text, empty otherwise
};

struct BatchRow {
  SweepPoint point;
  int runs = 0;
  int novelty = 0;
  int playability = 0;
  int novel_and_playable = 0;
  int completion = 0;
  std::optional<double> coherence_mean;
  int coherence_at_threshold = 0;
  std::optional<double> reward_mean;
  std::optional<double> reward_std;  // population
  std::vector<std::string> run_dirs;
};

BatchRow summarize(const SweepPoint& point, const std::vector<RunOutcome>& outcomes, int coherence_threshold);

// "0.3421 ± 0.37"
std::string format_mean_std(double mean, double std);

struct BatchReport {
  std::string mode;
  int runs_per_point = 0;
  int coherence_threshold = 70;
  std::vector<BatchRow> rows;
};

Json report_to_json(const BatchReport& r);
std::string report_table(const BatchReport& r);

// Runs every sweep point `batch_runs` times on a worker pool and writes
// batch_report.json and batch_report.txt into the output root.
BatchReport run_batch(const CliConfig& config);

// Story package from an extractions.json / StoryPackage file, or a bare
// legend object.
StoryPackage load_package_file(const std::string& path);

// Whole command line; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace w2w::cli
