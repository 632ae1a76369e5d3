#pragma once

#include <reentry/evm/bytecode.hpp>
#include <reentry/sym/ecfg.hpp>
#include <reentry/sym/state.hpp>

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reentry::vm
{
    using evm::u256;

    /// Fixed addresses of the analysis environment.
    namespace env
    {
        u256 victim_address();
        u256 attacker_address(); // contract that sends the transactions and re-enters
        u256 origin_address();   // externally owned account behind the attacker
    }

    enum class ScenarioMode
    {
        /// One transaction with an unconstrained selector.
        Extraction,
        /// f, then g in a second transaction.
        Sequential,
        /// f, with the attacker re-entering g from the first outgoing call.
        Reentrant,
    };

    char const *to_string(ScenarioMode m);

    struct EntryPoint
    {
        enum class Kind
        {
            Any,
            Selector,
            Fallback,
        };
        Kind kind = Kind::Any;
        std::uint32_t selector = 0;

        static EntryPoint any() { return {}; }
        static EntryPoint fallback() { return {Kind::Fallback, 0}; }
        static EntryPoint of(std::uint32_t sel) { return {Kind::Selector, sel}; }

        std::string to_string() const;
        auto operator<=>(EntryPoint const &) const = default;
    };

    struct Limits
    {
        unsigned call_depth = 8;
        unsigned loop_bound = 3;
        /// Completed end states per scenario before giving up.
        std::size_t path_cap = 10000;
        /// Safety net on explored blocks.
        std::size_t block_cap = 2'000'000;
    };

    /// Concrete inputs for a transaction (tests and step-by-step replays).
    struct TxSeed
    {
        std::vector<std::uint8_t> calldata;
        u256 callvalue = 0;
    };

    struct WorldSeed
    {
        std::map<u256, u256> victim_storage;
        u256 victim_balance = 0;
        u256 attacker_balance = 0;
    };

    struct ScenarioConfig
    {
        ScenarioMode mode = ScenarioMode::Extraction;
        EntryPoint f;
        EntryPoint g;
        unsigned reentry_budget = 1;
        /// Seeds for tx1 (and tx2); when absent inputs are symbolic.
        std::vector<TxSeed> tx_seeds;
        std::optional<WorldSeed> world_seed;
        bool record_ecfg = true;
    };

    /// A path that completed every transaction of the scenario.
    struct PathEnd
    {
        sym::BlockId block = 0;
        sym::EndState kind = sym::EndState::Stop;
        sym::PathCondition path;
        std::uint32_t flags = 0;
        sym::LocalWorldState world;
        std::vector<sym::ByteCell> output; // return data of the last transaction
    };

    struct ScenarioResult
    {
        std::vector<PathEnd> ends;
        /// First-transaction completions (before any second transaction).
        std::size_t f_ends = 0;
        std::size_t dead_paths = 0;    // Revert / Invalid
        std::size_t bounded_paths = 0; // DepthBound / LoopBound
        bool truncated = false;
        std::string truncation_reason;
        /// Runtime code returned by CREATE, deduplicated by digest.
        std::vector<evm::ProgramPtr> created;
        sym::Ecfg ecfg;
        std::vector<std::string> warnings;
        std::uint64_t blocks = 0;
        std::uint64_t solver_queries = 0;
    };
}
