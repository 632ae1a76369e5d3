#include <reentry/evm/uint256.hpp>

namespace reentry::evm
{
    u256 load_be(std::span<const std::uint8_t> bytes)
    {
        u256 out = 0;
        for (auto b : bytes) {
            out = (out << 8) | u256{b};
        }
        return out;
    }

    std::array<std::uint8_t, 32> store_be(u256 const &value)
    {
        std::array<std::uint8_t, 32> out{};
        u256 v = value;
        for (int i = 31; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(low64(v) & 0xff);
            v >>= 8;
        }
        return out;
    }

    std::string to_hex(u256 const &value)
    {
        if (value == 0) {
            return "0x0";
        }
        static constexpr char digits[] = "0123456789abcdef";
        std::string rev;
        u256 v = value;
        while (v != 0) {
            rev.push_back(digits[low64(v) & 0xf]);
            v >>= 4;
        }
        return "0x" + std::string(rev.rbegin(), rev.rend());
    }
}
