#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rescnet/config.hpp"
#include "rescnet/residual.hpp"

namespace rescnet {

// Binary checkpoint layout (all integers and reals little-endian):
//
//   "RESCNET1"                 8-byte magic
//   u32 version                currently 1
//   str config                 canonical config text (to_config_text)
//   u64 height, width, channels; i64 class_count
//   bank first_bank; lda first_model
//   u64 n; n x { bank, u8 has_pos [lda], u8 has_neg [lda], u64 n_p, u64 n_n, f64 alpha }
//   u64 n; n x progress { i32 layer, f64 alpha, u64 n_p, u64 n_n, f64 train_acc,
//                         u8 has_val, f64 val_acc }
//   mat train_posteriors       posteriors of the training set after the last layer
//
// str = u64 length + bytes; mat = u64 rows + u64 cols + rows*cols f64 in
// row-major order; vec = u64 length + f64s; bank = i32 k, i32 c_in,
// u8 provenance, mat kernels, vec bias; lda = mat weights, vec intercepts,
// u64 n + n x i32 class_ids, f64 ridge.
inline constexpr char kCheckpointMagic[8] = {'R', 'E', 'S', 'C', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  ResCNetModel model;
  linalg::Matrix train_posteriors;
};

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

// Written to a temporary file and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rescnet
