#pragma once

#include <reentry/smt/solver.hpp>
#include <reentry/sym/ecfg.hpp>
#include <reentry/sym/state.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace reentry::cfg
{
    using sym::BasicBlock;
    using sym::BlockId;
    using sym::EdgeKind;
    using sym::EndState;

    class DoubleSeal : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    struct ManagerStats
    {
        std::uint64_t blocks = 0;
        std::uint64_t branches = 0;        // symbolic JUMPI decisions
        std::uint64_t pruned = 0;          // infeasible branch sides
        std::uint64_t unknown_branches = 0; // solver gave up; both sides kept
        std::uint64_t loop_bounded = 0;
    };

    /// Owns the depth-first worklist and the ECFG under construction.
    class CfgManager
    {
    public:
        CfgManager(smt::Solver &solver, unsigned loop_bound, bool record = true);

        BlockId next_id() { return next_id_++; }

        /// Seals a block with its final end state and records it.
        void seal(BasicBlock &block, EndState state);

        /// New open block continuing `from` (already sealed) at from.machine.pc.
        /// Heavy state moves into the successor.
        BasicBlock successor(BasicBlock &&from, EdgeKind kind);
        /// Same, but copies the state.
        BasicBlock fork(BasicBlock const &from, EdgeKind kind);

        /// Successor for a jump landing at `target`; nullopt (and a recorded
        /// LoopBound leaf) once the frame has landed there too often.
        std::optional<BasicBlock> jump_to(BasicBlock &&from, std::uint64_t target);

        /// Seals `block` at a JUMPI and queues the feasible sides. The taken
        /// side is queued first so the fall-through is explored first.
        /// `target_valid` is false when the destination is not a JUMPDEST.
        void branch_on_jumpi(BasicBlock &&block, std::uint64_t target, bool target_valid, sym::Expr const &cond);

        void push(BasicBlock &&block);
        std::optional<BasicBlock> pop();
        bool empty() const { return stack_.empty(); }
        std::size_t pending() const { return stack_.size(); }

        sym::Ecfg const &ecfg() const { return ecfg_; }
        sym::Ecfg take_ecfg() { return std::move(ecfg_); }
        ManagerStats const &stats() const { return stats_; }

    private:
        BasicBlock make_successor(BasicBlock const &from, EdgeKind kind);

        smt::Solver &solver_;
        unsigned loop_bound_;
        bool record_;
        BlockId next_id_ = 1;
        std::vector<BasicBlock> stack_;
        sym::Ecfg ecfg_;
        ManagerStats stats_;
    };

    /// Graphviz rendering: blocks that enter a created or called contract are
    /// red, blocks resumed after such a frame returns are green.
    std::string export_dot(sym::Ecfg const &graph, std::string const &title = "ecfg");
}
