#include <reentry/evm/keccak.hpp>

#include <cstring>

namespace reentry::evm
{
    namespace
    {
        constexpr std::uint64_t round_constants[24] = {
            0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
            0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
            0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
            0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
            0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
            0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
            0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
            0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
        };

        constexpr int rotations[25] = {
            0, 1, 62, 28, 27, 36, 44, 6, 55, 20, 3, 10, 43,
            25, 39, 41, 45, 15, 21, 8, 18, 2, 61, 56, 14,
        };

        constexpr std::uint64_t rotl(std::uint64_t x, int n)
        {
            return n == 0 ? x : (x << n) | (x >> (64 - n));
        }

        void keccak_f1600(std::uint64_t (&a)[25])
        {
            for (auto rc : round_constants) {
                // theta
                std::uint64_t c[5];
                for (int x = 0; x < 5; ++x) {
                    c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
                }
                for (int x = 0; x < 5; ++x) {
                    std::uint64_t d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
                    for (int y = 0; y < 25; y += 5) {
                        a[y + x] ^= d;
                    }
                }
                // rho + pi
                std::uint64_t b[25];
                for (int x = 0; x < 5; ++x) {
                    for (int y = 0; y < 5; ++y) {
                        b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(a[x + 5 * y], rotations[x + 5 * y]);
                    }
                }
                // chi
                for (int y = 0; y < 25; y += 5) {
                    for (int x = 0; x < 5; ++x) {
                        a[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5]);
                    }
                }
                // iota
                a[0] ^= rc;
            }
        }

        void absorb_block(std::uint64_t (&state)[25], const std::uint8_t *block, std::size_t rate)
        {
            for (std::size_t i = 0; i < rate / 8; ++i) {
                std::uint64_t lane = 0;
                for (int k = 7; k >= 0; --k) {
                    lane = (lane << 8) | block[i * 8 + static_cast<std::size_t>(k)];
                }
                state[i] ^= lane;
            }
            keccak_f1600(state);
        }
    }

    Hash256 keccak256(std::span<const std::uint8_t> data)
    {
        constexpr std::size_t rate = 136;
        std::uint64_t state[25] = {};

        std::size_t offset = 0;
        while (data.size() - offset >= rate) {
            absorb_block(state, data.data() + offset, rate);
            offset += rate;
        }

        std::uint8_t last[rate] = {};
        std::size_t const tail = data.size() - offset;
        if (tail != 0) {
            std::memcpy(last, data.data() + offset, tail);
        }
        last[tail] ^= 0x01;
        last[rate - 1] ^= 0x80;
        absorb_block(state, last, rate);

        Hash256 out{};
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t k = 0; k < 8; ++k) {
                out[i * 8 + k] = static_cast<std::uint8_t>(state[i] >> (8 * k));
            }
        }
        return out;
    }
}
