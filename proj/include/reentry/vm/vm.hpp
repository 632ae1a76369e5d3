#pragma once

#include <reentry/cfg/manager.hpp>
#include <reentry/evm/bytecode.hpp>
#include <reentry/smt/solver.hpp>
#include <reentry/vm/scenario.hpp>

#include <deque>
#include <set>
#include <string>
#include <vector>

namespace reentry::vm
{
    /// Executes a scenario over the victim's code, exploring every feasible
    /// path depth first.
    class SymVm
    {
    public:
        SymVm(smt::Solver &solver, Limits limits = {});

        ScenarioResult run(evm::ProgramPtr victim, ScenarioConfig const &config);

    private:
        struct Run;
        smt::Solver &solver_;
        Limits limits_;
    };

    /// A function found by the extraction run.
    struct FunctionInfo
    {
        EntryPoint entry;
        bool has_call = false; // some path through it executes CALL
        std::size_t paths = 0;
        std::string name; // signature when known, else the selector
    };

    struct ExtractionResult
    {
        std::vector<FunctionInfo> functions;
        ScenarioResult run;
    };

    /// Runs the victim once with a symbolic selector and groups completed
    /// paths by the selector value the path pins down.
    ExtractionResult extract_function_ids(evm::ProgramPtr victim, smt::Solver &solver, Limits const &limits,
                                          bool record_ecfg = true);

    /// FIFO of contracts awaiting analysis, deduplicated by code digest.
    class ContractQueue
    {
    public:
        /// False when the same code was queued before.
        bool push(evm::ProgramPtr program);
        evm::ProgramPtr pop();
        bool empty() const { return queue_.empty(); }
        std::size_t seen() const { return seen_.size(); }

    private:
        std::deque<evm::ProgramPtr> queue_;
        std::set<std::string> seen_;
    };
}
