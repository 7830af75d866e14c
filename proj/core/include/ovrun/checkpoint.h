#ifndef OVRUN_CHECKPOINT_H_
#define OVRUN_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "ovrun/model.h"

namespace ovrun {

// Binary layout, little-endian:
//   "OVRUNCKP" | u32 version | u64 d, V, N, K | u8 mask_empty_slots
//   | f64 value_embedding[V*d] | f64 address_embedding[V*d]
//   | f64 out_weight[d] | f64 out_bias
// Identical parameters always produce identical bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const ModelParams& params);
ModelParams DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::filesystem::path& path,
                    const ModelParams& params);
ModelParams LoadCheckpoint(const std::filesystem::path& path);

}  // namespace ovrun

#endif  // OVRUN_CHECKPOINT_H_
