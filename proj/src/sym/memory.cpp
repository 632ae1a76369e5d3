#include <reentry/sym/memory.hpp>

#include <stdexcept>

namespace reentry::sym
{
    Expr ByteCell::to_expr() const
    {
        if (is_concrete())
            return Expr::constant(value, 8);
        unsigned w = source.width();
        unsigned hi = w - 1 - 8 * index;
        return extract(source, hi, hi - 7);
    }

    std::vector<ByteCell> bytes_of(Expr const &word)
    {
        if (word.is_bool() || word.width() % 8 != 0)
            throw std::logic_error("bytes_of: width is not a multiple of 8");
        unsigned n = word.width() / 8;
        std::vector<ByteCell> out;
        out.reserve(n);
        if (word.is_const())
        {
            for (unsigned i = 0; i < n; ++i)
            {
                unsigned shift = 8 * (n - 1 - i);
                out.push_back(ByteCell::concrete(static_cast<std::uint8_t>(evm::low64(word.value() >> shift) & 0xff)));
            }
            return out;
        }
        for (unsigned i = 0; i < n; ++i)
            out.push_back(ByteCell::of(word, i));
        return out;
    }

    Expr assemble(std::span<const ByteCell> cells)
    {
        if (cells.empty() || cells.size() > 32)
            throw std::logic_error("assemble: 1..32 cells expected");
        std::vector<Expr> parts;
        std::size_t i = 0;
        while (i < cells.size())
        {
            ByteCell const &first = cells[i];
            std::size_t j = i + 1;
            if (first.is_concrete())
            {
                u256 acc = first.value;
                while (j < cells.size() && cells[j].is_concrete())
                    acc = (acc << 8) | cells[j++].value;
                parts.push_back(Expr::constant(acc, static_cast<unsigned>(8 * (j - i))));
            }
            else
            {
                while (j < cells.size() && !cells[j].is_concrete() && cells[j].source.id() == first.source.id() &&
                       cells[j].index == first.index + (j - i))
                    ++j;
                unsigned w = first.source.width();
                unsigned hi = w - 1 - 8 * first.index;
                unsigned lo = hi + 1 - static_cast<unsigned>(8 * (j - i));
                parts.push_back(extract(first.source, hi, lo));
            }
            i = j;
        }
        return concat(parts);
    }

    std::optional<std::vector<std::uint8_t>> concrete_bytes(std::span<const ByteCell> cells)
    {
        std::vector<std::uint8_t> out;
        out.reserve(cells.size());
        for (auto const &c : cells)
        {
            if (!c.is_concrete())
                return std::nullopt;
            out.push_back(c.value);
        }
        return out;
    }

    void Memory::ensure(std::uint64_t end)
    {
        if (end > limit)
            throw std::out_of_range("memory access beyond limit");
        if (cells_.size() < end)
            cells_.resize(end, ByteCell::concrete(0));
    }

    void Memory::touch(std::uint64_t offset, std::uint64_t size)
    {
        if (size == 0)
            return;
        std::uint64_t end = offset + size;
        if (end > limit || end < offset)
            throw std::out_of_range("memory access beyond limit");
        std::uint64_t rounded = (end + 31) / 32 * 32;
        if (rounded > active_)
            active_ = rounded;
    }

    Expr Memory::load_word(std::uint64_t offset)
    {
        auto cells = read(offset, 32);
        return assemble(cells);
    }

    void Memory::store_word(std::uint64_t offset, Expr const &word)
    {
        auto cells = bytes_of(word);
        write(offset, cells);
    }

    void Memory::store_byte(std::uint64_t offset, Expr const &byte_value)
    {
        auto cells = bytes_of(byte_value);
        write(offset, cells);
    }

    std::vector<ByteCell> Memory::read(std::uint64_t offset, std::uint64_t size)
    {
        touch(offset, size);
        std::vector<ByteCell> out;
        out.reserve(size);
        for (std::uint64_t i = 0; i < size; ++i)
        {
            std::uint64_t at = offset + i;
            out.push_back(at < cells_.size() ? cells_[at] : ByteCell::concrete(0));
        }
        return out;
    }

    void Memory::write(std::uint64_t offset, std::span<const ByteCell> cells)
    {
        touch(offset, cells.size());
        ensure(offset + cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            cells_[offset + i] = cells[i];
    }
}
