#include "rescnet/dataset.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>

#include "rescnet/errors.hpp"

namespace rescnet {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const fs::path& path) {
  if (offset + 4 > buf.size()) throw FormatError(path.string() + ": truncated IDX header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};

RawImage decode_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RawImage out{image.height, image.width, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RawImage decode_jpeg(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  RawImage out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.height = cinfo.output_height;
  out.width = cinfo.output_width;
  out.rgb.resize(out.height * out.width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.rgb.data() + std::size_t{cinfo.output_scanline} * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

RawImage decode_image(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("missing image file " + path.string());
  const auto bytes = read_file(path);
  static constexpr std::array<std::uint8_t, 4> kPng{0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(kPng.begin(), kPng.end(), bytes.begin())) {
    return decode_png(path);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(path, bytes);
  }
  throw IoError(path.string() + ": not a PNG or JPEG file");
}

}  // namespace

void validate(const ImageSet& set) {
  const auto& im = set.images;
  if (set.labels.empty()) throw DomainError("image set is empty");
  if (im.channels() != 1 && im.channels() != 3) {
    throw DomainError("image set has " + std::to_string(im.channels()) +
                      " channels, expected 1 or 3");
  }
  if (im.count() != set.labels.size()) throw DomainError("image/label count mismatch");
  for (int label : set.labels) {
    if (label < 0 || label >= set.class_count) {
      throw DomainError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(set.class_count) + ")");
    }
  }
}

ImageSet load_mnist(const fs::path& image_path, const fs::path& label_path) {
  const auto img = read_file(image_path);
  const auto lab = read_file(label_path);
  if (read_be32(img, 0, image_path) != 0x00000803) {
    throw FormatError(image_path.string() + ": bad IDX image magic");
  }
  if (read_be32(lab, 0, label_path) != 0x00000801) {
    throw FormatError(label_path.string() + ": bad IDX label magic");
  }
  const std::size_t count = read_be32(img, 4, image_path);
  const std::size_t rows = read_be32(img, 8, image_path);
  const std::size_t cols = read_be32(img, 12, image_path);
  const std::size_t label_count = read_be32(lab, 4, label_path);
  if (img.size() != 16 + count * rows * cols) {
    throw FormatError(image_path.string() + ": expected " +
                      std::to_string(16 + count * rows * cols) + " bytes, found " +
                      std::to_string(img.size()));
  }
  if (lab.size() != 8 + label_count) throw FormatError(label_path.string() + ": truncated");
  if (label_count != count) {
    throw FormatError("IDX consistency: " + std::to_string(count) + " images vs " +
                      std::to_string(label_count) + " labels");
  }

  ImageSet set{Tensor4(rows, cols, 1, count), std::vector<int>(count), 10};
  for (std::size_t s = 0; s < count; ++s) {
    const std::uint8_t* px = img.data() + 16 + s * rows * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) set.images(r, c, 0, s) = px[r * cols + c] / 255.0;
    }
    set.labels[s] = lab[8 + s];
    if (set.labels[s] > 9) throw FormatError(label_path.string() + ": label above 9");
  }
  return set;
}

ImageSet load_cifar(std::span<const fs::path> paths, CifarVariant variant) {
  constexpr std::size_t kSide = 32;
  constexpr std::size_t kPixels = kSide * kSide * 3;
  const std::size_t label_bytes = variant == CifarVariant::cifar100 ? 2 : 1;
  const std::size_t record = label_bytes + kPixels;

  std::vector<std::vector<std::uint8_t>> files;
  std::size_t total = 0;
  for (const auto& p : paths) {
    files.push_back(read_file(p));
    if (files.back().size() % record != 0) {
      throw FormatError(p.string() + ": size " + std::to_string(files.back().size()) +
                        " is not a whole number of " + std::to_string(record) + "-byte records");
    }
    total += files.back().size() / record;
  }
  if (total == 0) throw FormatError("CIFAR: no records");

  const int classes = variant == CifarVariant::cifar100 ? 100 : 10;
  ImageSet set{Tensor4(kSide, kSide, 3, total), std::vector<int>(total), classes};
  std::size_t s = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& buf = files[f];
    for (std::size_t off = 0; off < buf.size(); off += record, ++s) {
      // CIFAR-100: coarse label first, fine label second.
      const int label = buf[off + label_bytes - 1];
      if (label >= classes) throw FormatError(paths[f].string() + ": label out of range");
      set.labels[s] = label;
      const std::uint8_t* px = buf.data() + off + label_bytes;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t r = 0; r < kSide; ++r) {
          for (std::size_t c = 0; c < kSide; ++c) {
            set.images(r, c, ch, s) = px[ch * kSide * kSide + r * kSide + c] / 255.0;
          }
        }
      }
    }
  }
  return set;
}

ImageSet load_folder_dataset(const fs::path& root, const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());

  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string file, cls;
    if (!std::getline(fields, file, '\t') || !std::getline(fields, cls, '\t') || cls.empty()) {
      throw FormatError(manifest.string() + ": malformed line '" + line + "'");
    }
    entries.emplace_back(file, cls);
  }
  if (entries.empty()) throw FormatError(manifest.string() + ": no entries");

  std::map<std::string, int> class_index;
  for (const auto& e : entries) class_index.emplace(e.second, 0);
  int next = 0;
  for (auto& [name, idx] : class_index) idx = next++;

  ImageSet set;
  set.class_count = next;
  set.labels.reserve(entries.size());
  for (std::size_t s = 0; s < entries.size(); ++s) {
    const auto path = root / entries[s].first;
    const RawImage raw = decode_image(path);
    if (s == 0) {
      set.images = Tensor4(raw.height, raw.width, 3, entries.size());
    } else if (raw.height != set.images.height() || raw.width != set.images.width()) {
      throw IoError(path.string() + ": size " + std::to_string(raw.height) + "x" +
                    std::to_string(raw.width) + " differs from the first image");
    }
    for (std::size_t r = 0; r < raw.height; ++r) {
      for (std::size_t c = 0; c < raw.width; ++c) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
          set.images(r, c, ch, s) = raw.rgb[(r * raw.width + c) * 3 + ch] / 255.0;
        }
      }
    }
    set.labels.push_back(class_index.at(entries[s].second));
  }
  return set;
}

linalg::Matrix one_hot(std::span<const int> labels, int class_count) {
  linalg::Matrix y = linalg::Matrix::Zero(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) {
      throw DomainError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(class_count) + ")");
    }
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

Tensor4 min_max_normalize(const Tensor4& x) {
  Tensor4 out(x.height(), x.width(), x.channels(), x.count());
  for (std::size_t s = 0; s < x.count(); ++s) {
    for (std::size_t ch = 0; ch < x.channels(); ++ch) {
      const auto src = x.plane(s, ch);
      auto dst = out.plane(s, ch);
      const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
      const double min = *lo;
      const double range = *hi - *lo;
      if (range == 0.0) continue;  // already zero-filled
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - min) / range;
    }
  }
  return out;
}

ImageSet augment_hflip(const ImageSet& set) {
  const auto& im = set.images;
  const std::size_t n = im.count();
  ImageSet out{Tensor4(im.height(), im.width(), im.channels(), 2 * n), set.labels,
               set.class_count};
  out.labels.insert(out.labels.end(), set.labels.begin(), set.labels.end());
  std::copy(im.data().begin(), im.data().end(), out.images.data().begin());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < im.channels(); ++ch) {
      for (std::size_t c = 0; c < im.width(); ++c) {
        for (std::size_t r = 0; r < im.height(); ++r) {
          out.images(r, im.width() - 1 - c, ch, n + s) = im(r, c, ch, s);
        }
      }
    }
  }
  return out;
}

ImageSet select(const ImageSet& set, std::span<const std::size_t> indices) {
  const auto& im = set.images;
  ImageSet out{Tensor4(im.height(), im.width(), im.channels(), indices.size()), {},
               set.class_count};
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= set.size()) throw DimensionError("select: index out of range");
    const auto src = im.sample(indices[i]);
    std::copy(src.begin(), src.end(), out.images.sample(i).begin());
    out.labels.push_back(set.labels[indices[i]]);
  }
  return out;
}

ImageSet take_prefix(const ImageSet& set, std::size_t count) {
  if (count == 0 || count >= set.size()) return set;
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  return select(set, idx);
}

}  // namespace rescnet
