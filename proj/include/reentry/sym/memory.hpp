#pragma once

#include <reentry/sym/expr.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace reentry::sym
{
    /// One byte of a symbolic buffer. Either a concrete value or byte `index`
    /// (big-endian, 0 = most significant) of a wider source term.
    struct ByteCell
    {
        Expr source;
        std::uint16_t index = 0;
        std::uint8_t value = 0;

        static ByteCell concrete(std::uint8_t v) { return {Expr{}, 0, v}; }
        static ByteCell of(Expr const &word, unsigned index) { return {word, static_cast<std::uint16_t>(index), 0}; }

        bool is_concrete() const { return !source; }
        /// The byte as an 8-bit term.
        Expr to_expr() const;
    };

    /// Splits a term (width a multiple of 8) into byte cells; constants become
    /// concrete cells.
    std::vector<ByteCell> bytes_of(Expr const &word);

    /// Reassembles cells into a single term of width 8 * cells.size(),
    /// recovering the original source when cells are one intact slice.
    Expr assemble(std::span<const ByteCell> cells);

    std::optional<std::vector<std::uint8_t>> concrete_bytes(std::span<const ByteCell> cells);

    /// Byte-addressed EVM memory. Untouched bytes read as zero.
    class Memory
    {
    public:
        /// Largest addressable offset; accesses past it are rejected by the VM.
        static constexpr std::uint64_t limit = std::uint64_t{1} << 24;

        Expr load_word(std::uint64_t offset);
        void store_word(std::uint64_t offset, Expr const &word);
        void store_byte(std::uint64_t offset, Expr const &byte_value);

        std::vector<ByteCell> read(std::uint64_t offset, std::uint64_t size);
        void write(std::uint64_t offset, std::span<const ByteCell> cells);

        /// Active size in bytes (multiple of 32), as reported by MSIZE.
        std::uint64_t size() const { return active_; }

        /// Grows the active size to cover [offset, offset + size).
        void touch(std::uint64_t offset, std::uint64_t size);

    private:
        void ensure(std::uint64_t end);

        std::vector<ByteCell> cells_;
        std::uint64_t active_ = 0;
    };
}
