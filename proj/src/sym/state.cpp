#include <reentry/sym/state.hpp>

namespace reentry::sym
{
    namespace names
    {
        std::string tx_tag(unsigned tx) { return "tx" + std::to_string(tx); }
        std::string function_id(unsigned tx) { return "fid@" + tx_tag(tx); }

        std::string argument(unsigned tx, std::uint64_t index)
        {
            return "arg@" + tx_tag(tx) + "[" + std::to_string(index) + "]";
        }

        std::string calldata_size(unsigned tx) { return "cds@" + tx_tag(tx); }
        std::string callvalue(unsigned tx) { return "cv@" + tx_tag(tx); }
    }

    CallData CallData::symbolic(unsigned tx)
    {
        CallData cd;
        cd.tx = tx;
        cd.size = Expr::var(names::calldata_size(tx));
        return cd;
    }

    CallData CallData::concrete(std::vector<std::uint8_t> const &data)
    {
        CallData cd;
        cd.bytes.reserve(data.size());
        for (auto b : data)
            cd.bytes.push_back(ByteCell::concrete(b));
        cd.size = Expr::constant(data.size());
        return cd;
    }

    CallData CallData::from_cells(std::vector<ByteCell> cells)
    {
        CallData cd;
        cd.size = Expr::constant(cells.size());
        cd.bytes = std::move(cells);
        return cd;
    }

    std::vector<ByteCell> CallData::read(std::uint64_t offset, std::uint64_t n) const
    {
        std::vector<ByteCell> out;
        out.reserve(n);
        if (!tx)
        {
            for (std::uint64_t i = 0; i < n; ++i)
            {
                std::uint64_t at = offset + i;
                out.push_back(at < bytes.size() ? bytes[at] : ByteCell::concrete(0));
            }
            return out;
        }
        // Selector in bytes 0..3, then one 32-byte argument word per slot.
        Expr fid;
        std::uint64_t last_arg = ~std::uint64_t{0};
        Expr arg;
        for (std::uint64_t i = 0; i < n; ++i)
        {
            std::uint64_t at = offset + i;
            if (at < 4)
            {
                if (!fid)
                    fid = Expr::var(names::function_id(*tx), 32);
                out.push_back(ByteCell::of(fid, static_cast<unsigned>(at)));
                continue;
            }
            std::uint64_t j = (at - 4) / 32;
            if (j != last_arg)
            {
                arg = Expr::var(names::argument(*tx, j));
                last_arg = j;
            }
            out.push_back(ByteCell::of(arg, static_cast<unsigned>((at - 4) % 32)));
        }
        return out;
    }

    Expr CallData::load(std::uint64_t offset) const
    {
        auto cells = read(offset, 32);
        return assemble(cells);
    }

    char const *to_string(EndState s)
    {
        switch (s)
        {
        case EndState::Open: return "open";
        case EndState::Continued: return "continued";
        case EndState::Stop: return "stop";
        case EndState::Return: return "return";
        case EndState::Revert: return "revert";
        case EndState::Invalid: return "invalid";
        case EndState::DepthBound: return "depth-bound";
        case EndState::LoopBound: return "loop-bound";
        }
        return "?";
    }
}
