#pragma once

#include <filesystem>

#include "regionsel/network.hpp"

namespace regionsel {

// Binary layout, all integers little-endian:
//   "RSELNET\0"  magic
//   u32          format version
//   u32          input side
//   u8, f64      input normalization mode and gain
//   u32          layer count, then per layer a u8 tag and its descriptor
//   u64          parameter count
//   f64 x count  parameters in Network::parameters() order
//   u32          CRC-32 of everything above
void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace regionsel
