#include "rescnet/filter_bank.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "rescnet/errors.hpp"

namespace rescnet {

using linalg::Matrix;
using linalg::Vector;

PatchMatrix extract_patches(const Tensor4& images, int patch_size,
                            std::optional<std::size_t> max_samples, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(patch_size);
  if (patch_size < 1 || k > images.height() || k > images.width()) {
    throw DimensionError("extract_patches: patch size " + std::to_string(patch_size) +
                         " does not fit " + std::to_string(images.height()) + "x" +
                         std::to_string(images.width()) + " images");
  }
  const std::size_t rows_out = images.height() - k + 1;
  const std::size_t cols_out = images.width() - k + 1;
  const std::size_t per_image = rows_out * cols_out;
  const std::size_t total = per_image * images.count();

  // Column j of the unsampled matrix is image j / per_image, position
  // (p % rows_out, p / rows_out) with p = j % per_image.
  std::vector<std::size_t> picks;
  if (max_samples && *max_samples < total) {
    picks.reserve(*max_samples);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(picks), *max_samples, rng);
  } else {
    picks.resize(total);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
  }

  const std::size_t channels = images.channels();
  PatchMatrix out{Matrix(static_cast<Eigen::Index>(k * k * channels),
                         static_cast<Eigen::Index>(picks.size())),
                  patch_size, static_cast<int>(channels), per_image,
                  std::vector<std::size_t>(picks.size())};
  for (std::size_t j = 0; j < picks.size(); ++j) {
    const std::size_t s = picks[j] / per_image;
    const std::size_t pos = picks[j] % per_image;
    const std::size_t r0 = pos % rows_out;
    const std::size_t c0 = pos / rows_out;
    out.source[j] = s;
    double* col = out.data.col(static_cast<Eigen::Index>(j)).data();
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const auto plane = images.plane(s, ch);
      for (std::size_t dc = 0; dc < k; ++dc) {
        const double* src = plane.data() + (c0 + dc) * images.height() + r0;
        std::copy(src, src + k, col + ch * k * k + dc * k);
      }
    }
  }
  return out;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::pca: return "pca";
    case Provenance::stacked_lda: return "stacked_lda";
    case Provenance::mixed: return "mixed";
  }
  return "unknown";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "pca") return Provenance::pca;
  if (text == "stacked_lda") return Provenance::stacked_lda;
  if (text == "mixed") return Provenance::mixed;
  throw DomainError("unknown filter provenance '" + std::string(text) + "'");
}

FilterBank fit_pca_filters(const PatchMatrix& patches, int num_filters) {
  const auto dim = patches.data.rows();
  if (num_filters < 1 || num_filters > dim) {
    throw DimensionError("fit_pca_filters: " + std::to_string(num_filters) +
                         " filters requested from " + std::to_string(dim) + "-dim patches");
  }
  if (patches.data.cols() < num_filters || patches.data.cols() < 2) {
    throw InsufficientDataError("fit_pca_filters: " + std::to_string(patches.data.cols()) +
                                " patches for " + std::to_string(num_filters) + " filters");
  }
  const Vector mean = patches.data.rowwise().mean();
  const Matrix centered = patches.data.colwise() - mean;
  Matrix scatter = centered * centered.transpose();
  scatter = 0.5 * (scatter + scatter.transpose());
  const auto eig = linalg::sym_eig(scatter);

  return FilterBank{patches.patch_size, patches.in_channels, eig.vectors.leftCols(num_filters),
                    Vector::Zero(num_filters), Provenance::pca};
}

namespace {

// Uniform draw of `count` distinct elements of `pool`.
void draw_distinct(const std::vector<std::size_t>& pool, int count, std::mt19937_64& rng,
                   std::vector<std::size_t>& out) {
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), count, rng);
}

// Uniform draw of `count` distinct patch indices whose label is not `cls`.
void draw_complement(std::span<const int> labels, int cls, int count, std::mt19937_64& rng,
                     std::vector<std::size_t>& out) {
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
  const std::size_t start = out.size();
  while (out.size() - start < static_cast<std::size_t>(count)) {
    const std::size_t j = pick(rng);
    if (labels[j] == cls) continue;
    if (std::find(out.begin() + static_cast<std::ptrdiff_t>(start), out.end(), j) != out.end()) {
      continue;
    }
    out.push_back(j);
  }
}

}  // namespace

FilterBank fit_stacked_lda_filters(const PatchMatrix& patches, std::span<const int> patch_labels,
                                   const StackedLdaParams& params, StackedLdaReport* report) {
  const auto n = static_cast<std::size_t>(patches.data.cols());
  if (patch_labels.size() != n) {
    throw DimensionError("fit_stacked_lda_filters: " + std::to_string(patch_labels.size()) +
                         " labels for " + std::to_string(n) + " patches");
  }
  if (params.n_positives < 1 || params.n_negatives < 1 || params.n_classes < 1 ||
      params.max_attempts_per_filter < 1) {
    throw DomainError("fit_stacked_lda_filters: counts must be positive");
  }

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t j = 0; j < n; ++j) members[patch_labels[j]].push_back(j);
  std::vector<int> eligible;
  for (const auto& [cls, idx] : members) {
    if (idx.size() >= static_cast<std::size_t>(params.n_positives) &&
        n - idx.size() >= static_cast<std::size_t>(params.n_negatives)) {
      eligible.push_back(cls);
    }
  }
  if (eligible.empty()) {
    throw InsufficientDataError(
        "fit_stacked_lda_filters: no class has enough positives and negatives");
  }

  const auto dim = patches.data.rows();
  const int batch = params.n_positives + params.n_negatives;
  std::mt19937_64 rng(params.rng_seed);
  std::uniform_int_distribution<std::size_t> pick_class(0, eligible.size() - 1);
  std::vector<int> batch_labels(static_cast<std::size_t>(batch), 0);
  std::fill_n(batch_labels.begin(), params.n_positives, 1);

  FilterBank bank{patches.patch_size, patches.in_channels, Matrix(dim, params.n_classes),
                  Vector(params.n_classes), Provenance::stacked_lda};
  if (report) *report = {};
  std::vector<std::size_t> chosen;
  Matrix sample(batch, dim);
  for (int f = 0; f < params.n_classes; ++f) {
    bool accepted = false;
    int attempt = 0;
    while (!accepted) {
      if (attempt == params.max_attempts_per_filter) throw NonSeparableError(f, attempt);
      ++attempt;
      const int cls = eligible[pick_class(rng)];
      chosen.clear();
      draw_distinct(members[cls], params.n_positives, rng, chosen);
      draw_complement(patch_labels, cls, params.n_negatives, rng, chosen);
      for (int i = 0; i < batch; ++i) {
        sample.row(i) = patches.data.col(static_cast<Eigen::Index>(chosen[i])).transpose();
      }

      LdaModel lda;
      try {
        lda = fit_lda(sample, batch_labels, params.ridge);
      } catch (const SingularityError&) {
        continue;  // degenerate draw counts as a rejected attempt
      }
      // class_ids are sorted, so column 1 is the positive-vs-rest discriminant.
      const Vector w = lda.weights.col(1);
      const double b = lda.intercepts(1);
      int errors = 0;
      for (int i = 0; i < batch; ++i) {
        const bool predicted_positive = sample.row(i).dot(w) + b > 0.0;
        if (predicted_positive != (batch_labels[i] == 1)) ++errors;
      }
      const double error_rate = static_cast<double>(errors) / batch;
      accepted = params.tol >= 1.0 || (params.tol == 0.0 ? error_rate == 0.0 : error_rate < params.tol);
      if (accepted) {
        bank.kernels.col(f) = w;
        bank.bias(f) = b;
        if (report) {
          report->accepted_samples.push_back(chosen);
          report->attempts.push_back(attempt);
        }
      }
    }
  }
  return bank;
}

FilterBank mix_filter_banks(const FilterBank& a, const FilterBank& b, double ratio, int count) {
  if (a.patch_size != b.patch_size || a.in_channels != b.in_channels) {
    throw DimensionError("mix_filter_banks: banks differ in patch size or input channels");
  }
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("mix_filter_banks: ratio outside [0,1]");
  const int from_a = static_cast<int>(std::lround(ratio * count));
  const int from_b = count - from_a;
  if (from_a > a.out_channels() || from_b > b.out_channels() || count < 1) {
    throw DimensionError("mix_filter_banks: not enough filters for a " + std::to_string(count) +
                         "-filter mix");
  }
  FilterBank out{a.patch_size, a.in_channels, Matrix(a.kernels.rows(), count), Vector(count),
                 Provenance::mixed};
  out.kernels.leftCols(from_a) = a.kernels.leftCols(from_a);
  out.bias.head(from_a) = a.bias.head(from_a);
  out.kernels.rightCols(from_b) = b.kernels.leftCols(from_b);
  out.bias.tail(from_b) = b.bias.head(from_b);
  return out;
}

std::string_view to_string(FilterKind k) {
  switch (k) {
    case FilterKind::pca: return "pca";
    case FilterKind::stacked_lda: return "stacked_lda";
    case FilterKind::mixed: return "mixed";
  }
  return "unknown";
}

FilterKind parse_filter_kind(std::string_view text) {
  if (text == "pca") return FilterKind::pca;
  if (text == "stacked_lda") return FilterKind::stacked_lda;
  if (text == "mixed") return FilterKind::mixed;
  throw DomainError("unknown filter kind '" + std::string(text) + "'");
}

FilterBank learn_filter_bank(const Tensor4& input, std::span<const int> image_labels,
                             const FilterSpec& spec, std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x9e3779b9}};
  std::array<std::uint64_t, 2> streams{};
  seq.generate(streams.begin(), streams.end());

  const PatchMatrix patches = extract_patches(input, spec.patch_size, spec.max_patches, streams[0]);

  auto stacked = [&](int count) {
    std::vector<int> labels(patches.source.size());
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = image_labels[patches.source[j]];
    StackedLdaParams params{spec.n_positives, spec.n_negatives,           spec.tol, count,
                            spec.max_attempts_per_filter, streams[1], spec.ridge};
    return fit_stacked_lda_filters(patches, labels, params);
  };

  switch (spec.kind) {
    case FilterKind::pca:
      return fit_pca_filters(patches, spec.count);
    case FilterKind::stacked_lda:
      return stacked(spec.count);
    case FilterKind::mixed: {
      const int from_lda = static_cast<int>(std::lround(spec.mix_ratio * spec.count));
      const int from_pca = spec.count - from_lda;
      // Fit only as many filters of each family as the mix keeps.
      FilterBank pca = from_pca > 0 ? fit_pca_filters(patches, from_pca) : FilterBank{};
      FilterBank lda = from_lda > 0 ? stacked(from_lda) : pca;
      if (from_pca == 0) pca = lda;
      return mix_filter_banks(lda, pca, spec.mix_ratio, spec.count);
    }
  }
  throw DomainError("learn_filter_bank: unknown filter kind");
}

}  // namespace rescnet
