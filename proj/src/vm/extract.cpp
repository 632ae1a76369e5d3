#include <reentry/vm/vm.hpp>

#include <map>

namespace reentry::vm
{
    ExtractionResult extract_function_ids(evm::ProgramPtr victim, smt::Solver &solver, Limits const &limits,
                                          bool record_ecfg)
    {
        SymVm vm(solver, limits);
        ScenarioConfig config;
        config.mode = ScenarioMode::Extraction;
        config.record_ecfg = record_ecfg;

        ExtractionResult out;
        out.run = vm.run(std::move(victim), config);

        sym::Expr fid = sym::Expr::var(sym::names::function_id(1), 32);
        std::map<EntryPoint, FunctionInfo> found;
        for (auto const &end : out.run.ends)
        {
            auto r = solver.check_sat(end.path, true);
            if (r.status != smt::Status::Sat)
            {
                out.run.warnings.push_back("could not classify an end state by selector");
                continue;
            }
            u256 v = sym::evaluate(fid, *r.model);
            // the selector is pinned when no other value fits the path
            auto exprs = end.path.exprs();
            exprs.push_back(sym::lnot(sym::eq(fid, sym::Expr::constant(v, 32))));
            auto other = solver.check_sat(exprs, false);
            EntryPoint entry = other.status == smt::Status::Unsat
                                   ? EntryPoint::of(static_cast<std::uint32_t>(v))
                                   : EntryPoint::fallback();
            auto &info = found[entry];
            info.entry = entry;
            info.name = entry.to_string();
            info.has_call = info.has_call || (end.flags & sym::flag::callable) != 0;
            ++info.paths;
        }
        for (auto &[_, info] : found)
            out.functions.push_back(std::move(info));
        return out;
    }

    bool ContractQueue::push(evm::ProgramPtr program)
    {
        if (!seen_.insert(program->digest()).second)
            return false;
        queue_.push_back(std::move(program));
        return true;
    }

    evm::ProgramPtr ContractQueue::pop()
    {
        if (queue_.empty())
            return nullptr;
        auto p = std::move(queue_.front());
        queue_.pop_front();
        return p;
    }
}
