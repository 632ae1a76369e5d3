#include <reentry/verify/verifier.hpp>

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace reentry::verify
{
    char const *to_string(Status s)
    {
        switch (s)
        {
        case Status::Benign: return "benign";
        case Status::Vulnerable: return "vulnerable";
        case Status::Inconclusive: return "inconclusive";
        }
        return "?";
    }

    std::vector<Pair> enumerate_pairs(std::vector<vm::FunctionInfo> const &functions)
    {
        std::vector<Pair> pairs;
        for (auto const &f : functions)
        {
            if (!f.has_call)
                continue;
            for (auto const &g : functions)
                pairs.push_back({f, g});
        }
        return pairs;
    }

    namespace
    {
        PathSet collect(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts,
                        vm::ScenarioMode mode)
        {
            vm::SymVm machine(solver, opts.limits);
            vm::ScenarioConfig config;
            config.mode = mode;
            config.f = pair.f.entry;
            config.g = pair.g.entry;
            config.reentry_budget = opts.reentry_budget;
            config.record_ecfg = true;
            auto run = machine.run(std::move(victim), config);

            PathSet out;
            for (auto &end : run.ends)
                out.paths.push_back(std::move(end.path));
            out.truncated = run.truncated;
            out.truncation_reason = run.truncation_reason;
            out.warnings = std::move(run.warnings);
            out.stats.f_p = run.f_ends;
            out.stats.g_p = out.paths.size();
            for (auto const &b : run.ecfg.blocks())
            {
                if (b.tx == 1)
                    ++out.stats.f_n;
                else
                    ++out.stats.g_n;
            }
            if (opts.keep_ecfg)
                out.ecfg = std::move(run.ecfg);
            return out;
        }

        // Syntactic duplicates cannot change the verdict.
        std::vector<sym::PathCondition const *> distinct(std::vector<sym::PathCondition> const &set)
        {
            std::vector<sym::PathCondition const *> out;
            std::set<std::uint64_t> digests;
            for (auto const &p : set)
            {
                bool dup = false;
                if (!digests.insert(p.digest()).second)
                {
                    for (auto const *q : out)
                        if (q->digest() == p.digest() && q->exprs() == p.exprs())
                        {
                            dup = true;
                            break;
                        }
                }
                if (!dup)
                    out.push_back(&p);
            }
            return out;
        }
    }

    PathSet collect_I(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts)
    {
        return collect(std::move(victim), pair, solver, opts, vm::ScenarioMode::Sequential);
    }

    PathSet collect_C(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts)
    {
        return collect(std::move(victim), pair, solver, opts, vm::ScenarioMode::Reentrant);
    }

    Verdict verify_pair(std::vector<sym::PathCondition> const &I, std::vector<sym::PathCondition> const &C,
                        smt::Solver &solver)
    {
        Verdict v;
        v.paths_I = I.size();
        v.paths_C = C.size();
        if (I.empty() || C.empty())
        {
            v.status = Status::Benign;
            v.reason = I.empty() ? "no completed baseline execution" : "no completed re-entrant execution";
            return v;
        }
        auto baseline = distinct(I);
        for (std::size_t k = 0; k < C.size(); ++k)
        {
            auto const &c = C[k];
            bool matched = false;
            for (auto const *i : baseline)
            {
                if (solver.check_equivalence(c, *i))
                {
                    matched = true;
                    break;
                }
            }
            if (matched)
                continue;
            Witness w;
            w.c_index = k;
            w.c = c;
            auto r = solver.check_sat(c, true);
            if (r.status == smt::Status::Sat)
                w.model = std::move(*r.model);
            v.status = Status::Vulnerable;
            v.witness = std::move(w);
            return v;
        }
        v.status = Status::Benign;
        return v;
    }

    Verdict run_pair(evm::ProgramPtr victim, Pair const &pair, smt::Solver &solver, Options const &opts)
    {
        auto start = std::chrono::steady_clock::now();
        Verdict v;
        try
        {
            auto I = collect_I(victim, pair, solver, opts);
            auto C = collect_C(victim, pair, solver, opts);
            if (I.truncated || C.truncated)
            {
                v.status = Status::Inconclusive;
                v.reason = "path explosion: " + (I.truncated ? I.truncation_reason : C.truncation_reason);
                v.paths_I = I.paths.size();
                v.paths_C = C.paths.size();
            }
            else
                v = verify_pair(I.paths, C.paths, solver);
            v.stats = I.stats;
            v.warnings = std::move(I.warnings);
            for (auto &w : C.warnings)
                if (std::find(v.warnings.begin(), v.warnings.end(), w) == v.warnings.end())
                    v.warnings.push_back(std::move(w));
            v.ecfg_I = std::move(I.ecfg);
            v.ecfg_C = std::move(C.ecfg);
        }
        catch (smt::Indeterminate const &e)
        {
            v.status = Status::Inconclusive;
            v.reason = e.what();
        }
        catch (std::exception const &e)
        {
            v.status = Status::Inconclusive;
            v.reason = std::string("error: ") + e.what();
        }
        v.pair = pair;
        v.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        return v;
    }

    Status ContractReport::status() const
    {
        bool inconclusive = !error.empty();
        for (auto const &v : verdicts)
        {
            if (v.status == Status::Vulnerable)
                return Status::Vulnerable;
            if (v.status == Status::Inconclusive)
                inconclusive = true;
        }
        return inconclusive ? Status::Inconclusive : Status::Benign;
    }

    Report analyze(std::vector<Target> const &targets, Options const &opts)
    {
        auto start = std::chrono::steady_clock::now();
        Report report;

        struct Task
        {
            std::size_t contract;
            std::size_t slot;
            evm::ProgramPtr program;
            Pair pair;
        };
        std::vector<Task> tasks;

        vm::ContractQueue queue;
        std::vector<std::string> labels;
        for (auto const &t : targets)
        {
            if (queue.push(t.program))
                labels.push_back(t.label);
        }
        smt::Solver solver(opts.solver_timeout);
        for (std::size_t n = 0; !queue.empty(); ++n)
        {
            auto program = queue.pop();
            ContractReport cr;
            cr.label = labels[n];
            cr.digest = program->digest();
            cr.code_size = program->code().size();
            try
            {
                auto ex = vm::extract_function_ids(program, solver, opts.limits, opts.keep_ecfg);
                cr.functions = std::move(ex.functions);
                cr.warnings = std::move(ex.run.warnings);
                if (ex.run.truncated)
                    cr.error = "function extraction incomplete: " + ex.run.truncation_reason;
                if (opts.keep_ecfg)
                    cr.ecfg = std::move(ex.run.ecfg);
                unsigned created = 0;
                for (auto const &code : ex.run.created)
                {
                    if (queue.push(code))
                        labels.push_back(cr.label + "/created" + std::to_string(created++));
                }
                auto pairs = enumerate_pairs(cr.functions);
                cr.verdicts.resize(pairs.size());
                for (std::size_t k = 0; k < pairs.size(); ++k)
                    tasks.push_back({report.contracts.size(), k, program, std::move(pairs[k])});
            }
            catch (std::exception const &e)
            {
                cr.error = e.what();
            }
            report.contracts.push_back(std::move(cr));
        }

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            smt::Solver own(opts.solver_timeout);
            for (std::size_t k = next++; k < tasks.size(); k = next++)
            {
                auto &t = tasks[k];
                report.contracts[t.contract].verdicts[t.slot] = run_pair(t.program, t.pair, own, opts);
            }
        };
        unsigned n_workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(tasks.size())));
        if (n_workers <= 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            for (unsigned i = 0; i < n_workers; ++i)
                pool.emplace_back(worker);
        }
        report.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        return report;
    }

    int exit_code(Report const &report)
    {
        bool inconclusive = false;
        for (auto const &c : report.contracts)
        {
            auto s = c.status();
            if (s == Status::Vulnerable)
                return 1;
            if (s == Status::Inconclusive)
                inconclusive = true;
        }
        return inconclusive ? 2 : 0;
    }
}
