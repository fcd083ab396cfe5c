#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rescnet/residual.hpp"

namespace rescnet::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kCheckpointError = 4;

inline constexpr const char* kMetricsHeader = "layer,alpha,n_p,n_n,train_acc,val_acc";

void write_metrics_csv(const std::vector<ProgressRecord>& progress, std::ostream& out);
void write_metrics_csv(const std::vector<ProgressRecord>& progress, const std::filesystem::path& path);
std::vector<ProgressRecord> read_metrics_csv(std::istream& in);

struct FitOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> data_dir;
  std::filesystem::path out;
  std::optional<std::filesystem::path> metrics;  // defaults to <out>.metrics.csv
  std::optional<std::uint64_t> seed;
};

struct ResumeOptions {
  std::filesystem::path checkpoint;
  int additional_layers = 0;
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> out;  // defaults to overwriting the checkpoint
  std::optional<std::filesystem::path> metrics;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data_dir;
  bool per_layer = false;
  bool on_train = false;
};

// Each command reports problems on `err` and returns an exit code.
int cmd_fit(const FitOptions& opts, std::ostream& out, std::ostream& err);
int cmd_resume(const ResumeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_export_metrics(const std::filesystem::path& checkpoint, const std::filesystem::path& csv,
                       std::ostream& err);

// Parses argv (fit | resume | eval | export-metrics) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rescnet::cli
