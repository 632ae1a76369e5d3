#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace reentry::evm
{
    using u256 = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<
        256, 256, boost::multiprecision::unsigned_magnitude,
        boost::multiprecision::unchecked, void>,
        boost::multiprecision::et_off>;

    /// Big-endian load of up to 32 bytes; shorter inputs are right-aligned.
    u256 load_be(std::span<const std::uint8_t> bytes);

    std::array<std::uint8_t, 32> store_be(u256 const &value);

    /// Lowercase hex with 0x prefix and no leading zeros ("0x0" for zero).
    std::string to_hex(u256 const &value);

    /// Low 64 bits.
    inline std::uint64_t low64(u256 const &value)
    {
        return static_cast<std::uint64_t>(value & u256{~std::uint64_t{0}});
    }

    inline bool fits_u64(u256 const &value)
    {
        return (value >> 64) == 0;
    }

    inline u256 max_u256()
    {
        return ~u256{0};
    }
}
