#include "rescnet/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "rescnet/errors.hpp"

namespace rescnet {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 0) throw ConfigError(key, "must be >= 0");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

// "7x5" or "7" (square).
std::pair<long long, long long> to_dims(const std::string& key, const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) {
    const auto n = to_int(key, v);
    return {n, n};
  }
  return {to_int(key, v.substr(0, x)), to_int(key, v.substr(x + 1))};
}

DataFormat to_format(const std::string& key, const std::string& v) {
  if (v == "mnist") return DataFormat::mnist;
  if (v == "cifar10") return DataFormat::cifar10;
  if (v == "cifar100") return DataFormat::cifar100;
  if (v == "folder") return DataFormat::folder;
  throw ConfigError(key, "unknown data format '" + v + "'");
}

std::string_view format_name(DataFormat f) {
  switch (f) {
    case DataFormat::mnist: return "mnist";
    case DataFormat::cifar10: return "cifar10";
    case DataFormat::cifar100: return "cifar100";
    case DataFormat::folder: return "folder";
  }
  return "mnist";
}

template <class Parse>
auto checked(const std::string& key, Parse&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

using Setter = void (*)(RunConfig&, const std::string& key, const std::string& value);

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"data",
       {
           {"format", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.format = to_format(k, v); }},
           {"dir", [](RunConfig& c, const std::string&, const std::string& v) { c.data.dir = v; }},
           {"train_images", [](RunConfig& c, const std::string&, const std::string& v) { c.data.train_images = v; }},
           {"train_labels", [](RunConfig& c, const std::string&, const std::string& v) { c.data.train_labels = v; }},
           {"test_images", [](RunConfig& c, const std::string&, const std::string& v) { c.data.test_images = v; }},
           {"test_labels", [](RunConfig& c, const std::string&, const std::string& v) { c.data.test_labels = v; }},
           {"train_batches", [](RunConfig& c, const std::string&, const std::string& v) { c.data.train_batches = split_list(v); }},
           {"test_batches", [](RunConfig& c, const std::string&, const std::string& v) { c.data.test_batches = split_list(v); }},
           {"train_root", [](RunConfig& c, const std::string&, const std::string& v) { c.data.train_root = v; }},
           {"train_manifest", [](RunConfig& c, const std::string&, const std::string& v) { c.data.train_manifest = v; }},
           {"test_root", [](RunConfig& c, const std::string&, const std::string& v) { c.data.test_root = v; }},
           {"test_manifest", [](RunConfig& c, const std::string&, const std::string& v) { c.data.test_manifest = v; }},
           {"train_limit", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.train_limit = to_count(k, v); }},
           {"test_limit", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.test_limit = to_count(k, v); }},
           {"validation_count", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.validation_count = to_count(k, v); }},
           {"augment_hflip", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.augment_hflip = to_bool(k, v); }},
       }},
      {"train",
       {
           {"lambda", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lambda = to_double(k, v); }},
           {"alpha0", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr.alpha0 = to_double(k, v); }},
           {"lr_decay", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.lr.decay = v == "none" ? 0.0 : to_double(k, v);
            }},
           {"lr_period", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr.period = static_cast<int>(to_int(k, v)); }},
           {"lr_floor", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr.floor = to_double(k, v); }},
           {"max_layers", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.max_layers = static_cast<int>(to_int(k, v)); }},
           {"ridge", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.ridge = to_double(k, v);
            }},
           {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
           {"stop_at_zero_train_error", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.stop_at_zero_train_error = to_bool(k, v); }},
           {"patience", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.patience = static_cast<int>(to_int(k, v)); }},
       }},
      {"filters",
       {
           {"filters_per_layer", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.count = c.train.rest_filters.count = static_cast<int>(to_int(k, v));
            }},
           {"filter_size_first", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.first_filters.patch_size = static_cast<int>(to_int(k, v)); }},
           {"filter_size_rest", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.rest_filters.patch_size = static_cast<int>(to_int(k, v)); }},
           {"filter_kind_first", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.kind = checked(k, [&] { return parse_filter_kind(v); });
            }},
           {"filter_kind_rest", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.rest_filters.kind = checked(k, [&] { return parse_filter_kind(v); });
            }},
           {"mix_ratio", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.mix_ratio = c.train.rest_filters.mix_ratio = to_double(k, v);
            }},
           {"max_patches", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.max_patches = c.train.rest_filters.max_patches = to_count(k, v);
            }},
           {"n_positives", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.n_positives = c.train.rest_filters.n_positives = static_cast<int>(to_int(k, v));
            }},
           {"n_negatives", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.n_negatives = c.train.rest_filters.n_negatives = static_cast<int>(to_int(k, v));
            }},
           {"tol", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.tol = c.train.rest_filters.tol = to_double(k, v);
            }},
           {"lda_ridge", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.ridge = c.train.rest_filters.ridge = to_double(k, v);
            }},
           {"max_attempts", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.first_filters.max_attempts_per_filter = c.train.rest_filters.max_attempts_per_filter =
                  static_cast<int>(to_int(k, v));
            }},
       }},
      {"pooling",
       {
           {"sop_block", [](RunConfig& c, const std::string& k, const std::string& v) {
              const auto [r, cc] = to_dims(k, v);
              if (r < 1 || cc < 1) throw ConfigError(k, "must be positive");
              c.train.pooling.block_rows = static_cast<std::size_t>(r);
              c.train.pooling.block_cols = static_cast<std::size_t>(cc);
            }},
           {"sop_stride", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.pooling.stride = to_count(k, v); }},
           {"pyramid_levels", [](RunConfig& c, const std::string& k, const std::string& v) {
              PyramidLevels levels;
              for (const auto& item : split_list(v)) {
                const auto [r, cc] = to_dims(k, item);
                levels.emplace_back(static_cast<int>(r), static_cast<int>(cc));
              }
              c.train.pooling.levels = levels;
            }},
           {"pyramid_reduction", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.pooling.reduction = checked(k, [&] { return parse_pyramid_reduction(v); });
            }},
       }},
      {"posterior",
       {
           {"transform", [](RunConfig& c, const std::string& k, const std::string& v) {
              c.train.transform.kind = checked(k, [&] { return parse_posterior_kind(v); });
            }},
           {"sigmoid_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.transform.sigmoid_scale = to_double(k, v); }},
           {"softmax_beta", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.transform.softmax_beta = to_double(k, v); }},
       }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<syntax>", e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig config;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    const auto sec = table.find(section);
    if (sec == table.end()) {
      if (body.empty()) throw ConfigError(section, "keys must live inside a section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError(key, "unknown key in [" + section + "]");
      setter->second(config, key, value.data());
    }
  }
  config.train.validate();
  return config;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const RunConfig& c) {
  const auto& d = c.data;
  const auto& t = c.train;
  const auto& ff = t.first_filters;
  const auto& rf = t.rest_filters;
  std::ostringstream out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };

  out << "[data]\n";
  line("format", std::string(format_name(d.format)));
  line("dir", d.dir);
  line("train_images", d.train_images);
  line("train_labels", d.train_labels);
  line("test_images", d.test_images);
  line("test_labels", d.test_labels);
  line("train_batches", join(d.train_batches));
  line("test_batches", join(d.test_batches));
  line("train_root", d.train_root);
  line("train_manifest", d.train_manifest);
  line("test_root", d.test_root);
  line("test_manifest", d.test_manifest);
  line("train_limit", std::to_string(d.train_limit));
  line("test_limit", std::to_string(d.test_limit));
  line("validation_count", std::to_string(d.validation_count));
  line("augment_hflip", b(d.augment_hflip));

  out << "\n[train]\n";
  line("lambda", format_double(t.lambda));
  line("alpha0", format_double(t.lr.alpha0));
  line("lr_decay", format_double(t.lr.decay));
  line("lr_period", std::to_string(t.lr.period));
  line("lr_floor", format_double(t.lr.floor));
  line("max_layers", std::to_string(t.max_layers));
  line("ridge", format_double(t.ridge));
  line("seed", std::to_string(t.seed));
  line("stop_at_zero_train_error", b(t.stop_at_zero_train_error));
  line("patience", std::to_string(t.patience));

  out << "\n[filters]\n";
  line("filters_per_layer", std::to_string(rf.count));
  line("filter_size_first", std::to_string(ff.patch_size));
  line("filter_size_rest", std::to_string(rf.patch_size));
  line("filter_kind_first", std::string(to_string(ff.kind)));
  line("filter_kind_rest", std::string(to_string(rf.kind)));
  line("mix_ratio", format_double(rf.mix_ratio));
  line("max_patches", std::to_string(rf.max_patches));
  line("n_positives", std::to_string(rf.n_positives));
  line("n_negatives", std::to_string(rf.n_negatives));
  line("tol", format_double(rf.tol));
  line("lda_ridge", format_double(rf.ridge));
  line("max_attempts", std::to_string(rf.max_attempts_per_filter));

  out << "\n[pooling]\n";
  line("sop_block", std::to_string(t.pooling.block_rows) + "x" + std::to_string(t.pooling.block_cols));
  line("sop_stride", std::to_string(t.pooling.stride));
  std::vector<std::string> levels;
  for (const auto& [r, cc] : t.pooling.levels) levels.push_back(std::to_string(r) + "x" + std::to_string(cc));
  line("pyramid_levels", join(levels));
  line("pyramid_reduction", std::string(to_string(t.pooling.reduction)));

  out << "\n[posterior]\n";
  line("transform", std::string(to_string(t.transform.kind)));
  line("sigmoid_scale", format_double(t.transform.sigmoid_scale));
  line("softmax_beta", format_double(t.transform.softmax_beta));
  return out.str();
}

namespace {

std::vector<fs::path> resolve_all(const fs::path& dir, const std::vector<std::string>& names) {
  std::vector<fs::path> out;
  for (const auto& n : names) out.push_back(dir / n);
  return out;
}

ImageSet load_split(const DataConfig& d, bool train) {
  const fs::path dir = d.dir;
  switch (d.format) {
    case DataFormat::mnist:
      return train ? load_mnist(dir / d.train_images, dir / d.train_labels)
                   : load_mnist(dir / d.test_images, dir / d.test_labels);
    case DataFormat::cifar10:
    case DataFormat::cifar100: {
      const auto variant = d.format == DataFormat::cifar10 ? CifarVariant::cifar10 : CifarVariant::cifar100;
      const auto paths = resolve_all(dir, train ? d.train_batches : d.test_batches);
      if (paths.empty()) throw ConfigError(train ? "train_batches" : "test_batches", "no files listed");
      return load_cifar(paths, variant);
    }
    case DataFormat::folder:
      return train ? load_folder_dataset(dir / d.train_root, dir / d.train_manifest)
                   : load_folder_dataset(dir / d.test_root, dir / d.test_manifest);
  }
  throw ConfigError("format", "unsupported");
}

}  // namespace

DataSplits load_training_data(const DataConfig& d) {
  ImageSet all = take_prefix(load_split(d, true), d.train_limit);
  DataSplits out;
  if (d.validation_count > 0) {
    if (d.validation_count >= all.size()) {
      throw ConfigError("validation_count", "leaves no training samples");
    }
    const std::size_t keep = all.size() - d.validation_count;
    std::vector<std::size_t> head(keep), tail(d.validation_count);
    std::iota(head.begin(), head.end(), std::size_t{0});
    std::iota(tail.begin(), tail.end(), keep);
    out.validation = select(all, tail);
    all = select(all, head);
  }
  out.train = d.augment_hflip ? augment_hflip(all) : std::move(all);
  validate(out.train);
  return out;
}

ImageSet load_test_data(const DataConfig& d) {
  ImageSet set = take_prefix(load_split(d, false), d.test_limit);
  validate(set);
  return set;
}

}  // namespace rescnet
