#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace reentry::evm
{
    using Hash256 = std::array<std::uint8_t, 32>;

    /// Keccak-256 as used by Ethereum (original padding, not FIPS-202 SHA3).
    Hash256 keccak256(std::span<const std::uint8_t> data);

    inline Hash256 keccak256(std::string_view text)
    {
        return keccak256(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
    }
}
