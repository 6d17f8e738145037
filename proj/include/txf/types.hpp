#pragma once

#include <cstdint>

namespace txf {

// Account id as it appears in the transaction log. -1 marks an address the
// upstream dataset could not decode.
using Address = std::int64_t;

inline constexpr Address kUndecodableAddress = -1;

inline constexpr std::int64_t kSatoshiPerBitcoin = 100'000'000;

}  // namespace txf
