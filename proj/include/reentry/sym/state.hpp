#pragma once

#include <reentry/evm/bytecode.hpp>
#include <reentry/sym/expr.hpp>
#include <reentry/sym/memory.hpp>
#include <reentry/sym/path_condition.hpp>
#include <reentry/sym/world.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reentry::sym
{
    /// Variable names shared by every scenario, so that the same input has
    /// the same name in sequential and re-entrant runs.
    namespace names
    {
        std::string tx_tag(unsigned tx);
        std::string function_id(unsigned tx);     // 32-bit selector word
        std::string argument(unsigned tx, std::uint64_t index);
        std::string calldata_size(unsigned tx);
        std::string callvalue(unsigned tx);
    }

    /// Input data of a frame. Transaction frames read from per-transaction
    /// selector/argument variables; nested frames read explicit bytes.
    struct CallData
    {
        std::optional<unsigned> tx;
        std::vector<ByteCell> bytes;
        Expr size;

        static CallData symbolic(unsigned tx);
        static CallData concrete(std::vector<std::uint8_t> const &data);
        static CallData from_cells(std::vector<ByteCell> cells);

        std::vector<ByteCell> read(std::uint64_t offset, std::uint64_t n) const;
        Expr load(std::uint64_t offset) const;
    };

    struct MachineState
    {
        std::vector<Expr> stack;
        Memory memory;
        std::uint64_t pc = 0;

        std::string active_contract; // account key
        Expr address;
        evm::ProgramPtr code;
        CallData calldata;
        Expr caller;
        Expr callvalue;
        std::vector<ByteCell> returndata;

        unsigned tx = 1;
        bool is_create = false;
        /// Jump landings per JUMPDEST in this frame, for loop bounding.
        std::map<std::uint64_t, unsigned> jump_visits;
    };

    enum class CallKind
    {
        Call,
        Create,
        /// Frame of the attacker contract that re-entered the victim.
        Dummy,
    };

    struct CallStackEntry
    {
        CallKind kind = CallKind::Call;
        std::string contract;
        std::uint64_t return_pc = 0;
        MachineState saved;
        std::uint64_t out_offset = 0;
        std::uint64_t out_size = 0;
        Expr created_address;
        /// Name stem for return-data symbols of the originating CALL.
        std::string tag;
    };

    using CallStack = std::vector<CallStackEntry>;

    enum class EndState
    {
        Open,
        /// Sealed at a block boundary with successors.
        Continued,
        Stop,
        Return,
        Revert,
        Invalid,
        DepthBound,
        LoopBound,
    };

    char const *to_string(EndState s);

    /// A path that ended normally.
    inline bool is_success(EndState s)
    {
        return s == EndState::Stop || s == EndState::Return;
    }

    namespace flag
    {
        inline constexpr std::uint32_t callable = 1u << 0;   // executed a CALL
        inline constexpr std::uint32_t reentered = 1u << 1;  // an attacker frame re-entered the victim
        inline constexpr std::uint32_t second_tx = 1u << 2;  // the second transaction has started
        inline constexpr std::uint32_t concretized = 1u << 3;
        inline constexpr std::uint32_t approximated = 1u << 4; // used an unconstrained stand-in term
    }

    using BlockId = std::uint64_t;

    struct BasicBlock
    {
        BlockId id = 0;
        std::string contract;
        std::uint64_t start_pc = 0;
        std::uint64_t end_pc = 0;
        std::size_t instruction_count = 0;

        MachineState machine;
        LocalWorldState world;
        PathCondition path;
        CallStack calls;

        std::uint32_t flags = 0;
        EndState end_state = EndState::Open;
        unsigned reentry_budget = 0;
        /// Synthetic node standing for the attacker contract.
        bool dummy = false;
        std::string note;
        /// Occurrences of each fresh-symbol stem on this path, so repeated
        /// executions of an instruction get distinct but reproducible names.
        std::map<std::string, unsigned> fresh_counts;
    };
}
