#pragma once

#include <reentry/smt/solver.hpp>
#include <reentry/vm/vm.hpp>

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reentry::verify
{
    enum class Status
    {
        Benign,
        Vulnerable,
        Inconclusive,
    };

    char const *to_string(Status s);

    struct Pair
    {
        vm::FunctionInfo f; // the function whose outgoing call is hijacked
        vm::FunctionInfo g; // the function the attacker re-enters
    };

    /// Every (f, g) with f making an external call and g any function,
    /// f itself included.
    std::vector<Pair> enumerate_pairs(std::vector<vm::FunctionInfo> const &functions);

    /// Path explosion counters: blocks and end states of the first (F) and
    /// second (G) transaction.
    struct ScenarioStats
    {
        std::uint64_t f_n = 0;
        std::uint64_t f_p = 0;
        std::uint64_t g_n = 0;
        std::uint64_t g_p = 0;
    };

    struct PathSet
    {
        std::vector<sym::PathCondition> paths;
        ScenarioStats stats;
        bool truncated = false;
        std::string truncation_reason;
        std::vector<std::string> warnings;
        std::optional<sym::Ecfg> ecfg;
    };

    struct Options
    {
        vm::Limits limits;
        unsigned workers = 1;
        std::chrono::milliseconds solver_timeout{60000};
        unsigned reentry_budget = 1;
        /// Keep the ECFG of every scenario in the report (for DOT output).
        bool keep_ecfg = false;
    };

    /// Baseline: f, then g in a separate transaction.
    PathSet collect_I(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts);
    /// Attack: f, with g re-entered from f's first external call.
    PathSet collect_C(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts);

    struct Witness
    {
        std::size_t c_index = 0;
        sym::PathCondition c;
        smt::Model model; // inputs satisfying c
    };

    struct Verdict
    {
        Pair pair;
        Status status = Status::Benign;
        std::optional<Witness> witness;
        std::size_t paths_I = 0;
        std::size_t paths_C = 0;
        ScenarioStats stats;
        std::chrono::milliseconds elapsed{0};
        std::string reason; // why Inconclusive, or a note on a vacuous Benign
        std::vector<std::string> warnings;
        std::optional<sym::Ecfg> ecfg_I;
        std::optional<sym::Ecfg> ecfg_C;
    };

    /// Decides the pair: vulnerable when some attack path condition is
    /// inequivalent to every baseline path condition. Throws
    /// smt::Indeterminate when a deciding query is undecided.
    Verdict verify_pair(std::vector<sym::PathCondition> const &I, std::vector<sym::PathCondition> const &C,
                        smt::Solver &solver);

    /// Collects both sets and decides; never throws.
    Verdict run_pair(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts);

    struct Target
    {
        std::string label;
        evm::ProgramPtr program;
    };

    struct ContractReport
    {
        std::string label;
        std::string digest;
        std::size_t code_size = 0;
        std::vector<vm::FunctionInfo> functions;
        std::vector<Verdict> verdicts;
        std::vector<std::string> warnings;
        std::string error;
        std::optional<sym::Ecfg> ecfg; // extraction run
        Status status() const;
    };

    struct Report
    {
        std::vector<ContractReport> contracts;
        std::chrono::milliseconds elapsed{0};
    };

    /// Runs extraction on every target and on code they create, then checks
    /// every pair on a pool of `opts.workers` threads.
    Report analyze(std::vector<Target> const &targets, Options const &opts);

    /// 1 if anything is vulnerable, else 2 if anything is inconclusive or
    /// failed, else 0.
    int exit_code(Report const &report);
}
