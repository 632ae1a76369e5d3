#pragma once

#include <reentry/sym/state.hpp>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace reentry::sym
{
    enum class EdgeKind
    {
        Fallthrough,
        Jump,
        CreateEnter,
        CreateReturn,
        CallEnter,
        CallReturn,
        /// From the end of one transaction to the start of the next.
        NextTx,
    };

    char const *to_string(EdgeKind k);

    /// What the graph keeps of a sealed block; the heavy state is dropped.
    struct BlockRecord
    {
        BlockId id = 0;
        std::string contract;
        std::uint64_t start_pc = 0;
        std::uint64_t end_pc = 0;
        std::size_t instruction_count = 0;
        EndState end_state = EndState::Open;
        std::uint32_t flags = 0;
        std::size_t call_depth = 0;
        std::size_t path_size = 0;
        /// Balance-positivity constraints in the block's path condition.
        std::size_t positivity = 0;
        unsigned tx = 1;
        bool dummy = false;
        std::string note;
    };

    struct Edge
    {
        BlockId from = 0;
        BlockId to = 0;
        EdgeKind kind = EdgeKind::Fallthrough;
    };

    /// Extended control-flow graph: blocks of every contract reached on
    /// any path, linked by intra- and inter-contract edges.
    class Ecfg
    {
    public:
        void add_block(BlockRecord record);
        void add_edge(BlockId from, BlockId to, EdgeKind kind);

        std::vector<BlockRecord> const &blocks() const { return blocks_; }
        std::vector<Edge> const &edges() const { return edges_; }
        BlockRecord const *find(BlockId id) const;
        std::vector<Edge> out_edges(BlockId id) const;
        std::vector<Edge> in_edges(BlockId id) const;

    private:
        std::vector<BlockRecord> blocks_;
        std::unordered_map<BlockId, std::size_t> index_;
        std::vector<Edge> edges_;
    };
}
