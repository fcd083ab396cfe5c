#include "rescnet/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rescnet/errors.hpp"

namespace rescnet {

namespace fs = std::filesystem;
using linalg::Matrix;
using linalg::Vector;

namespace {

class Writer {
 public:
  template <class T>
  void scalar(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out_.insert(out_.end(), raw, raw + sizeof(T));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { scalar(v); }
  void u64(std::uint64_t v) { scalar(v); }
  void i32(std::int32_t v) { scalar(v); }
  void i64(std::int64_t v) { scalar(v); }
  void f64(double v) { scalar(v); }

  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void bank(const FilterBank& b) {
    i32(b.patch_size);
    i32(b.in_channels);
    u8(static_cast<std::uint8_t>(b.provenance));
    mat(b.kernels);
    vec(b.bias);
  }
  void lda(const LdaModel& m) {
    mat(m.weights);
    vec(m.intercepts);
    u64(m.class_ids.size());
    for (int c : m.class_ids) i32(c);
    f64(m.ridge);
  }
  void optional_lda(const std::optional<LdaModel>& m) {
    u8(m.has_value());
    if (m) lda(*m);
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  template <class T>
  T scalar() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  std::uint8_t u8() { return scalar<std::uint8_t>(); }
  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  std::uint64_t u64() { return scalar<std::uint64_t>(); }
  std::int32_t i32() { return scalar<std::int32_t>(); }
  std::int64_t i64() { return scalar<std::int64_t>(); }
  double f64() { return scalar<double>(); }

  std::string str() {
    const auto n = count(1);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Matrix mat() {
    const auto rows = u64();
    const auto cols = u64();
    if (cols != 0 && rows > (in_.size() - pos_) / 8 / cols) throw CheckpointError("checkpoint: matrix exceeds file");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    }
    return m;
  }
  Vector vec() {
    const auto n = count(8);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }
  FilterBank bank() {
    FilterBank b;
    b.patch_size = i32();
    b.in_channels = i32();
    const auto prov = u8();
    if (prov > static_cast<std::uint8_t>(Provenance::mixed)) throw CheckpointError("checkpoint: bad provenance");
    b.provenance = static_cast<Provenance>(prov);
    b.kernels = mat();
    b.bias = vec();
    if (b.patch_size < 1 || b.in_channels < 1 ||
        b.kernels.rows() != Eigen::Index{b.patch_size} * b.patch_size * b.in_channels ||
        b.bias.size() != b.kernels.cols()) {
      throw CheckpointError("checkpoint: inconsistent filter bank");
    }
    return b;
  }
  LdaModel lda() {
    LdaModel m;
    m.weights = mat();
    m.intercepts = vec();
    const auto n = count(4);
    for (std::uint64_t i = 0; i < n; ++i) m.class_ids.push_back(i32());
    m.ridge = f64();
    if (m.intercepts.size() != m.weights.cols() || m.class_ids.size() != static_cast<std::size_t>(m.weights.cols())) {
      throw CheckpointError("checkpoint: inconsistent LDA model");
    }
    return m;
  }
  std::optional<LdaModel> optional_lda() {
    if (u8()) return lda();
    return std::nullopt;
  }

  void expect_end() const {
    if (pos_ != in_.size()) throw CheckpointError("checkpoint: trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated");
  }
  std::uint64_t count(std::size_t element_size) {
    const auto n = u64();
    if (n > (in_.size() - pos_) / element_size) throw CheckpointError("checkpoint: length exceeds file");
    return n;
  }

  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  Writer w;
  for (char c : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.str(to_config_text(ckpt.config));
  w.u64(m.height);
  w.u64(m.width);
  w.u64(m.channels);
  w.i64(m.class_count);
  w.bank(m.first_bank);
  w.lda(m.first_model);
  w.u64(m.compensation.size());
  for (const auto& layer : m.compensation) {
    w.bank(layer.filter_bank);
    w.optional_lda(layer.models.positive);
    w.optional_lda(layer.models.negative);
    w.u64(layer.models.n_p);
    w.u64(layer.models.n_n);
    w.f64(layer.alpha);
  }
  w.u64(m.progress.size());
  for (const auto& p : m.progress) {
    w.i32(p.layer);
    w.f64(p.alpha);
    w.u64(p.n_p);
    w.u64(p.n_n);
    w.f64(p.train_accuracy);
    w.u8(p.val_accuracy.has_value());
    w.f64(p.val_accuracy.value_or(0.0));
  }
  w.mat(ckpt.train_posteriors);
  return w.take();
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  Reader r(bytes);
  for (int i = 0; i < 8; ++i) r.u8();
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  try {
    ckpt.config = parse_config(r.str());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: bad config snapshot: ") + e.what());
  }
  auto& m = ckpt.model;
  m.config = ckpt.config.train;
  m.height = r.u64();
  m.width = r.u64();
  m.channels = r.u64();
  m.class_count = static_cast<int>(r.i64());
  m.first_bank = r.bank();
  m.first_model = r.lda();
  const auto layers = r.u64();
  for (std::uint64_t i = 0; i < layers; ++i) {
    CompensationLayer layer;
    layer.filter_bank = r.bank();
    layer.models.positive = r.optional_lda();
    layer.models.negative = r.optional_lda();
    layer.models.n_p = r.u64();
    layer.models.n_n = r.u64();
    layer.alpha = r.f64();
    m.compensation.push_back(std::move(layer));
  }
  const auto records = r.u64();
  for (std::uint64_t i = 0; i < records; ++i) {
    ProgressRecord p;
    p.layer = r.i32();
    p.alpha = r.f64();
    p.n_p = r.u64();
    p.n_n = r.u64();
    p.train_accuracy = r.f64();
    const bool has_val = r.u8() != 0;
    const double val = r.f64();
    if (has_val) p.val_accuracy = val;
    m.progress.push_back(p);
  }
  ckpt.train_posteriors = r.mat();
  r.expect_end();
  if (m.progress.size() != m.depth()) throw CheckpointError("checkpoint: progress log does not match depth");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  const auto bytes = serialize(ckpt);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize(bytes);
}

}  // namespace rescnet
