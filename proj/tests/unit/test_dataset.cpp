#include <doctest.h>

#include <png.h>

#include <fstream>
#include <map>

#include "rescnet/dataset.hpp"
#include "rescnet/errors.hpp"
#include "support.hpp"

using namespace rescnet;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// n images of 28x28; image i has pixel (r, c) = (i + r + 3c) % 256.
std::vector<std::uint8_t> idx_images(std::uint32_t n) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x803);
  put_be32(b, n);
  put_be32(b, 28);
  put_be32(b, 28);
  for (std::uint32_t i = 0; i < n; ++i)
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) b.push_back(static_cast<std::uint8_t>((i + r + 3 * c) % 256));
  return b;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x801);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

void write_png(const fs::path& p, int w, int h, std::uint8_t value) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h * 3), value);
  REQUIRE(png_image_write_to_file(&img, p.c_str(), 0, px.data(), 0, nullptr) != 0);
}

}  // namespace

TEST_CASE("load_mnist parses IDX pairs") {
  auto dir = test::temp_dir("idx");
  auto img = idx_images(3);
  img[16] = 255;  // first pixel of first image
  write_bytes(dir / "img", img);
  write_bytes(dir / "lab", idx_labels({7, 0, 9}));
  auto set = load_mnist(dir / "img", dir / "lab");
  CHECK(set.size() == 3);
  CHECK(set.class_count == 10);
  CHECK(set.images.height() == 28);
  CHECK(set.images.width() == 28);
  CHECK(set.images.channels() == 1);
  CHECK(set.labels == std::vector<int>{7, 0, 9});
  CHECK(set.images(0, 0, 0, 0) == 1.0);
  // Row-major file order: byte (r, c) of image 2.
  CHECK(set.images(4, 5, 0, 2) == doctest::Approx((2 + 4 + 15) / 255.0));
  fs::remove_all(dir);
}

TEST_CASE("load_mnist rejects malformed files") {
  auto dir = test::temp_dir("idx_bad");
  auto img = idx_images(2);
  write_bytes(dir / "img", img);
  write_bytes(dir / "lab", idx_labels({1, 2}));

  auto bad_magic = img;
  bad_magic[3] = 0x04;
  write_bytes(dir / "bad", bad_magic);
  CHECK_THROWS_AS(load_mnist(dir / "bad", dir / "lab"), FormatError);

  auto truncated = img;
  truncated.resize(truncated.size() - 100);
  write_bytes(dir / "short", truncated);
  CHECK_THROWS_AS(load_mnist(dir / "short", dir / "lab"), FormatError);

  write_bytes(dir / "lab3", idx_labels({1, 2, 3}));
  CHECK_THROWS_AS(load_mnist(dir / "img", dir / "lab3"), FormatError);
  CHECK_THROWS_AS(load_mnist(dir / "missing", dir / "lab"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("load_cifar reads synthetic records") {
  auto dir = test::temp_dir("cifar");
  std::vector<std::uint8_t> rec(1 + 3072, 0);
  rec[0] = 3;
  write_bytes(dir / "c10.bin", rec);
  std::vector<fs::path> paths{dir / "c10.bin"};
  auto set = load_cifar(paths, CifarVariant::cifar10);
  CHECK(set.size() == 1);
  CHECK(set.class_count == 10);
  CHECK(set.labels[0] == 3);
  CHECK(set.images.channels() == 3);
  CHECK(set.images.height() == 32);
  CHECK(*std::max_element(set.images.data().begin(), set.images.data().end()) == 0.0);

  // Planar R, G, B rows: green byte at (row 1, col 2).
  std::vector<std::uint8_t> rec100(2 + 3072, 0);
  rec100[0] = 4;   // coarse
  rec100[1] = 57;  // fine
  rec100[2 + 1024 + 32 * 1 + 2] = 255;
  write_bytes(dir / "c100.bin", rec100);
  std::vector<fs::path> p100{dir / "c100.bin", dir / "c100.bin"};
  auto s100 = load_cifar(p100, CifarVariant::cifar100);
  CHECK(s100.size() == 2);
  CHECK(s100.class_count == 100);
  CHECK(s100.labels == std::vector<int>{57, 57});
  CHECK(s100.images(1, 2, 1, 1) == 1.0);
  CHECK(s100.images(1, 2, 0, 1) == 0.0);

  rec.push_back(0);
  write_bytes(dir / "odd.bin", rec);
  std::vector<fs::path> odd{dir / "odd.bin"};
  CHECK_THROWS_AS(load_cifar(odd, CifarVariant::cifar10), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("load_folder_dataset with a TSV manifest") {
  auto dir = test::temp_dir("folder");
  std::ofstream manifest(dir / "manifest.tsv");
  int k = 0;
  for (std::string cls : {"zebra", "apple"})
    for (int i = 0; i < 3; ++i, ++k) {
      std::string name = cls + std::to_string(i) + ".png";
      write_png(dir / name, 8, 6, static_cast<std::uint8_t>(40 * k));
      manifest << name << '\t' << cls << "\t0\t0\n";
    }
  manifest.close();
  auto set = load_folder_dataset(dir, dir / "manifest.tsv");
  CHECK(set.size() == 6);
  CHECK(set.class_count == 2);
  CHECK(set.labels == std::vector<int>{1, 1, 1, 0, 0, 0});
  CHECK(set.images.height() == 6);
  CHECK(set.images.width() == 8);
  CHECK(set.images.channels() == 3);
  CHECK(set.images(0, 0, 2, 4) == doctest::Approx(160 / 255.0));

  std::ofstream broken(dir / "broken.tsv");
  broken << "zebra0.png\tzebra\nnot_there.png\tapple\n";
  broken.close();
  CHECK_THROWS_AS(load_folder_dataset(dir, dir / "broken.tsv"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("one_hot") {
  std::vector<int> one{1};
  CHECK(one_hot(one, 3) == (Eigen::RowVector3d() << 0, 1, 0).finished());
  std::vector<int> two{0, 2};
  linalg::Matrix expected(2, 3);
  expected << 1, 0, 0, 0, 0, 1;
  CHECK(one_hot(two, 3) == expected);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> u(0, 6);
  std::vector<int> v(200);
  for (auto& x : v) x = u(rng);
  auto y = one_hot(v, 7);
  for (std::size_t i = 0; i < v.size(); ++i) {
    Eigen::Index arg;
    y.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    CHECK(arg == v[i]);
    CHECK(y.row(static_cast<Eigen::Index>(i)).sum() == 1.0);
  }
  std::vector<int> bad{3};
  CHECK_THROWS_AS(one_hot(bad, 3), DomainError);
}

TEST_CASE("min_max_normalize") {
  Tensor4 t(3, 1, 2, 1);
  t(0, 0, 0, 0) = 2;
  t(1, 0, 0, 0) = 4;
  t(2, 0, 0, 0) = 6;
  for (int r = 0; r < 3; ++r) t(r, 0, 1, 0) = 5;
  auto n = min_max_normalize(t);
  CHECK(n(0, 0, 0, 0) == 0.0);
  CHECK(n(1, 0, 0, 0) == 0.5);
  CHECK(n(2, 0, 0, 0) == 1.0);
  for (int r = 0; r < 3; ++r) CHECK(n(r, 0, 1, 0) == 0.0);

  std::mt19937_64 rng(2);
  auto x = test::random_tensor(5, 4, 3, 6, rng, -3.0, 7.0);
  auto y = min_max_normalize(x);
  for (std::size_t s = 0; s < 6; ++s)
    for (std::size_t ch = 0; ch < 3; ++ch) {
      auto p = y.plane(s, ch);
      CHECK(*std::min_element(p.begin(), p.end()) == 0.0);
      CHECK(*std::max_element(p.begin(), p.end()) == 1.0);
    }
}

TEST_CASE("augment_hflip") {
  ImageSet set;
  set.class_count = 2;
  set.images = Tensor4(2, 2, 1, 1);
  set.images(0, 0, 0, 0) = 1;
  set.images(0, 1, 0, 0) = 2;
  set.images(1, 0, 0, 0) = 3;
  set.images(1, 1, 0, 0) = 4;
  set.labels = {1};
  auto f = augment_hflip(set);
  CHECK(f.size() == 2);
  CHECK(f.labels == std::vector<int>{1, 1});
  CHECK(f.images(0, 0, 0, 1) == 2);
  CHECK(f.images(0, 1, 0, 1) == 1);
  CHECK(f.images(1, 0, 0, 1) == 4);
  CHECK(f.images(1, 1, 0, 1) == 3);

  auto syn = test::synthetic_images(4, 3, 6, 9);
  auto twice = augment_hflip(syn);
  CHECK(twice.size() == 2 * syn.size());
  std::map<int, int> before, after;
  for (int l : syn.labels) ++before[l];
  for (int l : twice.labels) ++after[l];
  for (auto [c, n] : before) CHECK(after[c] == 2 * n);

  std::vector<std::size_t> mirrored;
  for (std::size_t i = syn.size(); i < twice.size(); ++i) mirrored.push_back(i);
  auto back = augment_hflip(select(twice, mirrored));
  std::vector<std::size_t> second;
  for (std::size_t i = syn.size(); i < back.size(); ++i) second.push_back(i);
  CHECK(select(back, second).images == syn.images);
}

TEST_CASE("take_prefix and validate") {
  auto syn = test::synthetic_images(3, 2, 5, 4);
  CHECK(take_prefix(syn, 4).size() == 4);
  CHECK(take_prefix(syn, 0).size() == syn.size());
  CHECK(take_prefix(syn, 100).size() == syn.size());
  CHECK_NOTHROW(validate(syn));
  syn.labels[0] = 5;
  CHECK_THROWS_AS(validate(syn), DomainError);
}
