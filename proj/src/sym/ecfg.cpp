#include <reentry/sym/ecfg.hpp>

#include <stdexcept>

namespace reentry::sym
{
    char const *to_string(EdgeKind k)
    {
        switch (k)
        {
        case EdgeKind::Fallthrough: return "fallthrough";
        case EdgeKind::Jump: return "jump";
        case EdgeKind::CreateEnter: return "create-enter";
        case EdgeKind::CreateReturn: return "create-return";
        case EdgeKind::CallEnter: return "call-enter";
        case EdgeKind::CallReturn: return "call-return";
        case EdgeKind::NextTx: return "next-tx";
        }
        return "?";
    }

    void Ecfg::add_block(BlockRecord record)
    {
        if (index_.contains(record.id))
            throw std::logic_error("block " + std::to_string(record.id) + " recorded twice");
        index_.emplace(record.id, blocks_.size());
        blocks_.push_back(std::move(record));
    }

    void Ecfg::add_edge(BlockId from, BlockId to, EdgeKind kind)
    {
        edges_.push_back({from, to, kind});
    }

    BlockRecord const *Ecfg::find(BlockId id) const
    {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &blocks_[it->second];
    }

    std::vector<Edge> Ecfg::out_edges(BlockId id) const
    {
        std::vector<Edge> out;
        for (auto const &e : edges_)
            if (e.from == id)
                out.push_back(e);
        return out;
    }

    std::vector<Edge> Ecfg::in_edges(BlockId id) const
    {
        std::vector<Edge> out;
        for (auto const &e : edges_)
            if (e.to == id)
                out.push_back(e);
        return out;
    }
}
