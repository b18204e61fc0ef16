#pragma once

#include "cdec/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace cdec {

/// Binary model checkpoint, little-endian host doubles written verbatim so a
/// save/load round trip is bit-exact.
///
/// Layout: magic "CDECCKPT", u32 version, encoder (activation byte, w1, b1, w2,
/// b2), head (boundary, relation ids, W), encoder optimizer, head optimizer.
/// Each matrix is (i64 rows, i64 cols, rows*cols doubles in row-major order).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& model, std::ostream& out);
Model load_checkpoint(std::istream& in);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace cdec
