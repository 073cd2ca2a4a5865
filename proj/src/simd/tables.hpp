#pragma once

#include "fxvol/simd.hpp"

namespace fxvol::simd::detail {

// Defined in the ISA-specific translation units; return nullptr when the
// variant is not part of this build.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

}  // namespace fxvol::simd::detail
