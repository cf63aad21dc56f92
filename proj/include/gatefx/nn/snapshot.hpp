// Flat little-endian parameter snapshots.
//
// Layout: u32 layer count, then per layer {u32 in, u32 out, u8 activation},
// then for each layer the weights row-major followed by the bias, all as
// IEEE-754 binary64.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gatefx/nn/mlp.hpp"

namespace gatefx::nn {

using Params = MlpParams<double>;

std::vector<std::uint8_t> encode_snapshot(const Params& p);
Params decode_snapshot(const std::vector<std::uint8_t>& bytes);

void save_snapshot(const Params& p, const std::filesystem::path& path);
Params load_snapshot(const std::filesystem::path& path);

}  // namespace gatefx::nn
