#include "rescnet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rescnet/checkpoint.hpp"
#include "rescnet/config.hpp"
#include "rescnet/errors.hpp"

namespace rescnet::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path default_metrics_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".metrics.csv";
  return p;
}

// Maps library exceptions onto exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kCheckpointError;
  } catch (const IoError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

void print_progress(std::ostream& out, const ProgressRecord& r) {
  out << "layer " << r.layer << "  alpha " << r.alpha << "  n_p " << r.n_p << "  n_n " << r.n_n
      << "  train_acc " << r.train_accuracy;
  if (r.val_accuracy) out << "  val_acc " << *r.val_accuracy;
  out << std::endl;
}

Checkpoint snapshot(const RunConfig& config, const TrainingSession& session) {
  return Checkpoint{config, session.model(), session.train_posteriors()};
}

// Data errors raised while loading are reported with exit code 3 even when
// the loader threw a DomainError (e.g. labels out of range).
template <class Load>
auto load_data(Load&& load) {
  try {
    return load();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(e.what());
  }
}

int train_and_save(RunConfig config, std::optional<Checkpoint> resume_from, std::size_t target_depth,
                   const fs::path& out_path, const fs::path& metrics_path, std::ostream& out) {
  DataSplits data = load_data([&] { return load_training_data(config.data); });
  std::optional<TrainingSession> session;
  if (resume_from) {
    session.emplace(std::move(resume_from->model), std::move(data.train), std::move(data.validation));
    if (session->train_posteriors().rows() != resume_from->train_posteriors.rows() ||
        session->train_posteriors().cols() != resume_from->train_posteriors.cols() ||
        session->train_posteriors() != resume_from->train_posteriors) {
      throw IoError("training data does not reproduce the checkpoint's posteriors");
    }
  } else {
    session.emplace(std::move(data.train), config.train, std::move(data.validation));
  }
  session->model().config = config.train;

  session->run(target_depth, [&](const ProgressRecord& r) {
    print_progress(out, r);
    save_checkpoint(snapshot(config, *session), out_path);
  });
  save_checkpoint(snapshot(config, *session), out_path);
  write_metrics_csv(session->model().progress, metrics_path);
  return kOk;
}

}  // namespace

void write_metrics_csv(const std::vector<ProgressRecord>& progress, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const auto& r : progress) {
    out << r.layer << ',' << fmt(r.alpha) << ',' << r.n_p << ',' << r.n_n << ','
        << fmt(r.train_accuracy) << ',';
    if (r.val_accuracy) out << fmt(*r.val_accuracy);
    out << '\n';
  }
}

void write_metrics_csv(const std::vector<ProgressRecord>& progress, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metrics to " + path.string());
  write_metrics_csv(progress, out);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ProgressRecord> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError("metrics: bad header");
  std::vector<ProgressRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 5) cells.emplace_back();
    if (cells.size() != 6) throw FormatError("metrics: expected 6 columns in '" + line + "'");
    ProgressRecord r;
    r.layer = std::stoi(cells[0]);
    r.alpha = std::stod(cells[1]);
    r.n_p = std::stoull(cells[2]);
    r.n_n = std::stoull(cells[3]);
    r.train_accuracy = std::stod(cells[4]);
    if (!cells[5].empty()) r.val_accuracy = std::stod(cells[5]);
    out.push_back(r);
  }
  return out;
}

int cmd_fit(const FitOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = load_config(opts.config);
    if (opts.data_dir) config.data.dir = opts.data_dir->string();
    if (opts.seed) config.train.seed = *opts.seed;
    return train_and_save(config, std::nullopt, static_cast<std::size_t>(config.train.max_layers), opts.out,
                          opts.metrics.value_or(default_metrics_path(opts.out)), out);
  });
}

int cmd_resume(const ResumeOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.additional_layers < 0) throw ConfigError("layers", "must be >= 0");
    Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    RunConfig config = ckpt.config;
    if (opts.data_dir) config.data.dir = opts.data_dir->string();
    // The stored budget only grows, so a split run ends with the same
    // snapshot as a single run and "+0" leaves the file untouched.
    const std::size_t target = ckpt.model.depth() + static_cast<std::size_t>(opts.additional_layers);
    config.train.max_layers = std::max(config.train.max_layers, static_cast<int>(target));
    ckpt.model.config = config.train;
    const fs::path out_path = opts.out.value_or(opts.checkpoint);
    return train_and_save(config, std::move(ckpt), target, out_path,
                          opts.metrics.value_or(default_metrics_path(out_path)), out);
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    DataConfig data = ckpt.config.data;
    if (opts.data_dir) data.dir = opts.data_dir->string();
    const ImageSet set = load_data([&] {
      if (!opts.on_train) return load_test_data(data);
      data.augment_hflip = false;
      return load_training_data(data).train;
    });
    if (opts.per_layer) {
      out << "layer,accuracy\n";
      const auto all = predict_all_depths(ckpt.model, set.images);
      for (std::size_t i = 0; i < all.size(); ++i) {
        out << i + 1 << ',' << fmt(accuracy(argmax_rows(all[i]), set.labels)) << '\n';
      }
    } else {
      out << "accuracy " << fmt(evaluate(ckpt.model, set)) << '\n';
    }
    return kOk;
  });
}

int cmd_export_metrics(const fs::path& checkpoint, const fs::path& csv, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    write_metrics_csv(ckpt.model.progress, csv);
    return kOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual compensation convolutional network: gradient-free training and evaluation"};
  app.require_subcommand(1);

  FitOptions fit;
  std::string fit_data, fit_metrics;
  std::uint64_t fit_seed = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Train a new model, checkpointing after every layer");
  fit_cmd->add_option("--config", fit.config, "Config file")->required();
  fit_cmd->add_option("--data-dir", fit_data, "Directory holding the dataset files");
  fit_cmd->add_option("--out", fit.out, "Checkpoint path")->required();
  fit_cmd->add_option("--metrics", fit_metrics, "Metrics CSV path (default <out>.metrics.csv)");
  auto* seed_opt = fit_cmd->add_option("--seed", fit_seed, "Override the config seed");

  ResumeOptions resume;
  std::string resume_data, resume_out, resume_metrics;
  auto* resume_cmd = app.add_subcommand("resume", "Add layers to a checkpointed model");
  resume_cmd->add_option("checkpoint", resume.checkpoint, "Checkpoint to continue")->required();
  resume_cmd->add_option("--layers", resume.additional_layers, "Layers to add")->required();
  resume_cmd->add_option("--data-dir", resume_data, "Override the stored data directory");
  resume_cmd->add_option("--out", resume_out, "Output checkpoint (default: overwrite input)");
  resume_cmd->add_option("--metrics", resume_metrics, "Metrics CSV path");

  EvalOptions eval;
  std::string eval_data;
  auto* eval_cmd = app.add_subcommand("eval", "Report accuracy of a checkpoint");
  eval_cmd->add_option("checkpoint", eval.checkpoint, "Checkpoint")->required();
  eval_cmd->add_option("--data-dir", eval_data, "Override the stored data directory");
  eval_cmd->add_flag("--per-layer", eval.per_layer, "Accuracy after every layer");
  eval_cmd->add_flag("--train", eval.on_train, "Evaluate on the training split instead of test");

  std::string export_ckpt, export_csv;
  auto* export_cmd = app.add_subcommand("export-metrics", "Write the per-layer log as CSV");
  export_cmd->add_option("checkpoint", export_ckpt, "Checkpoint")->required();
  export_cmd->add_option("--out", export_csv, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  if (*fit_cmd) {
    if (!fit_data.empty()) fit.data_dir = fit_data;
    if (!fit_metrics.empty()) fit.metrics = fit_metrics;
    if (seed_opt->count() > 0) fit.seed = fit_seed;
    return cmd_fit(fit, out, err);
  }
  if (*resume_cmd) {
    if (!resume_data.empty()) resume.data_dir = resume_data;
    if (!resume_out.empty()) resume.out = resume_out;
    if (!resume_metrics.empty()) resume.metrics = resume_metrics;
    return cmd_resume(resume, out, err);
  }
  if (*eval_cmd) {
    if (!eval_data.empty()) eval.data_dir = eval_data;
    return cmd_eval(eval, out, err);
  }
  return cmd_export_metrics(export_ckpt, export_csv, err);
}

}  // namespace rescnet::cli
