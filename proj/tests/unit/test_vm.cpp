#include <doctest.h>

#include "asm.hpp"
#include "checks.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

#include <reentry/cfg/manager.hpp>
#include <reentry/verify/verifier.hpp>
#include <reentry/vm/vm.hpp>

#include <random>

using namespace reentry;
using sym::Expr;

namespace
{
    evm::ProgramPtr program(std::string const &src)
    {
        return evm::make_program(evm::Bytecode{testing::assemble_text(src)});
    }

    std::string victim_key() { return sym::LocalWorldState::key_of(Expr::constant(vm::env::victim_address())); }

    vm::ScenarioResult run(evm::ProgramPtr p, vm::ScenarioConfig cfg = {}, vm::Limits limits = {})
    {
        smt::Solver solver;
        vm::SymVm engine(solver, limits);
        return engine.run(std::move(p), cfg);
    }

    std::size_t count_edges(sym::Ecfg const &g, sym::EdgeKind kind)
    {
        std::size_t n = 0;
        for (auto const &e : g.edges())
            n += e.kind == kind;
        return n;
    }

    sym::BasicBlock root(cfg::CfgManager &mgr)
    {
        sym::BasicBlock b;
        b.id = mgr.next_id();
        b.contract = "c";
        b.machine.active_contract = "c";
        b.machine.pc = 10;
        return b;
    }

    void require_clean(testing::Violations const &v)
    {
        for (auto const &msg : v)
            FAIL_CHECK(msg);
    }
}

// ---------------------------------------------------------------- cfg

TEST_CASE("sealing twice is an error")
{
    smt::Solver solver;
    cfg::CfgManager mgr(solver, 3);
    auto b = root(mgr);
    mgr.seal(b, sym::EndState::Stop);
    CHECK_THROWS_AS(mgr.seal(b, sym::EndState::Stop), cfg::DoubleSeal);
    CHECK(mgr.ecfg().blocks().size() == 1);
}

TEST_CASE("JUMPI on a constant condition follows one side")
{
    smt::Solver solver;
    cfg::CfgManager mgr(solver, 3);
    mgr.branch_on_jumpi(root(mgr), 40, true, Expr::boolean(true));
    auto next = mgr.pop();
    REQUIRE(next);
    CHECK(next->machine.pc == 40);
    CHECK(mgr.empty());
    CHECK(mgr.stats().branches == 0);

    mgr.branch_on_jumpi(root(mgr), 40, true, Expr::boolean(false));
    next = mgr.pop();
    REQUIRE(next);
    CHECK(next->machine.pc == 11);
    CHECK(mgr.empty());
}

TEST_CASE("JUMPI on a symbolic condition forks into disjoint paths")
{
    smt::Solver solver;
    cfg::CfgManager mgr(solver, 3);
    Expr x = Expr::var("x");
    mgr.branch_on_jumpi(root(mgr), 40, true, sym::ult(x, Expr::constant(7)));
    auto fall = mgr.pop();
    auto jump = mgr.pop();
    REQUIRE(fall);
    REQUIRE(jump);
    CHECK(fall->machine.pc == 11);
    CHECK(jump->machine.pc == 40);
    auto both = fall->path.exprs();
    auto j = jump->path.exprs();
    both.insert(both.end(), j.begin(), j.end());
    CHECK(solver.check_sat(both).status == smt::Status::Unsat);
    CHECK(count_edges(mgr.ecfg(), sym::EdgeKind::Jump) == 1);
    CHECK(count_edges(mgr.ecfg(), sym::EdgeKind::Fallthrough) == 1);
}

TEST_CASE("infeasible side is pruned")
{
    smt::Solver solver;
    cfg::CfgManager mgr(solver, 3);
    Expr x = Expr::var("x");
    auto b = root(mgr);
    b.path.add(sym::ult(x, Expr::constant(5)), sym::ConstraintOrigin::Branch);
    mgr.branch_on_jumpi(std::move(b), 40, true, sym::ult(x, Expr::constant(9)));
    auto next = mgr.pop();
    REQUIRE(next);
    CHECK(next->machine.pc == 40);
    CHECK(mgr.empty());
    CHECK(mgr.stats().pruned == 1);
}

TEST_CASE("jump to a non-JUMPDEST keeps only the fall-through")
{
    smt::Solver solver;
    cfg::CfgManager mgr(solver, 3);
    mgr.branch_on_jumpi(root(mgr), 41, false, sym::ult(Expr::var("x"), Expr::constant(7)));
    auto next = mgr.pop();
    REQUIRE(next);
    CHECK(next->machine.pc == 11);
    CHECK(mgr.empty());
}

TEST_CASE("loop bound seals a LoopBound leaf")
{
    smt::Solver solver;
    cfg::CfgManager mgr(solver, 2);
    auto b = root(mgr);
    unsigned landed = 0;
    for (;;)
    {
        mgr.seal(b, sym::EndState::Continued);
        auto next = mgr.jump_to(std::move(b), 10);
        if (!next)
            break;
        ++landed;
        b = std::move(*next);
    }
    CHECK(landed == 3);
    CHECK(mgr.stats().loop_bounded == 1);
    CHECK(mgr.ecfg().blocks().back().end_state == sym::EndState::LoopBound);
}

TEST_CASE("DOT export colours frame entries and returns")
{
    sym::Ecfg g;
    for (sym::BlockId id : {1, 2, 3})
    {
        sym::BlockRecord r;
        r.id = id;
        r.contract = "c";
        r.end_state = id == 3 ? sym::EndState::Stop : sym::EndState::Continued;
        g.add_block(r);
    }
    g.add_edge(1, 2, sym::EdgeKind::CreateEnter);
    g.add_edge(2, 3, sym::EdgeKind::CreateReturn);
    auto dot = cfg::export_dot(g, "t");
    CHECK(dot.find("b1 [label") != std::string::npos);
    CHECK(dot.find("b1 -> b2 [label=\"create-enter\"]") != std::string::npos);
    auto line_of = [&](std::string const &node) {
        auto at = dot.find("  " + node + " [label");
        return dot.substr(at, dot.find('\n', at) - at);
    };
    CHECK(line_of("b1").find("#f4a6a6") != std::string::npos);
    CHECK(line_of("b3").find("#a6e3a6") != std::string::npos);
    CHECK(line_of("b2").find("fillcolor") == std::string::npos);

    sym::Ecfg single;
    sym::BlockRecord r;
    r.id = 7;
    r.end_state = sym::EndState::Stop;
    single.add_block(r);
    auto d1 = cfg::export_dot(single);
    CHECK(d1.find("b7") != std::string::npos);
    CHECK(d1.find("->") == std::string::npos);
}

// ---------------------------------------------------------------- vm

TEST_CASE("constant arithmetic folds")
{
    auto r = run(program("PUSH1 2 PUSH1 3 ADD PUSH1 0 SSTORE STOP"));
    REQUIRE(r.ends.size() == 1);
    auto v = r.ends[0].world.read_storage(victim_key(), Expr::constant(0));
    REQUIRE(v.is_const());
    CHECK(v.value() == 5);
    CHECK(r.ends[0].kind == sym::EndState::Stop);
}

TEST_CASE("CALLVALUE is one symbol per transaction")
{
    auto r = run(program("CALLVALUE PUSH1 0 SSTORE CALLVALUE PUSH1 1 SSTORE STOP"));
    REQUIRE(r.ends.size() == 1);
    auto const &w = r.ends[0].world;
    auto a = w.read_storage(victim_key(), Expr::constant(0));
    auto b = w.read_storage(victim_key(), Expr::constant(1));
    CHECK(a == b);
    std::map<std::string, unsigned> vars;
    sym::collect_vars(a, vars);
    REQUIRE(vars.size() == 1);
    CHECK(vars.begin()->first == sym::names::callvalue(1));
}

TEST_CASE("a checked CALL does not branch on its success word")
{
    auto r = run(program("PUSH1 0 DUP1 DUP1 DUP1 PUSH1 5 CALLER GAS CALL ISZERO @bad JUMPI STOP "
                         ":bad PUSH1 0 DUP1 REVERT"));
    REQUIRE(r.ends.size() == 1);
    CHECK(r.dead_paths == 0);
    CHECK((r.ends[0].flags & sym::flag::callable) != 0);
    std::vector<sym::PathCondition> paths{r.ends[0].path};
    require_clean(testing::check_no_success_word(paths));
}

TEST_CASE("a reverting callee ends the path")
{
    auto child = testing::assemble_text("PUSH1 0 DUP1 REVERT");
    auto code = testing::creator(testing::deployer(child), 0,
                                 "PUSH1 0 DUP1 DUP1 DUP1 DUP1 DUP6 GAS CALL PUSH1 1 SSTORE");
    auto r = run(evm::make_program(evm::Bytecode{code}));
    CHECK(r.ends.empty());
    CHECK(r.dead_paths == 1);
    CHECK(count_edges(r.ecfg, sym::EdgeKind::CreateEnter) == 1);
    CHECK(count_edges(r.ecfg, sym::EdgeKind::CreateReturn) == 1);
    CHECK(count_edges(r.ecfg, sym::EdgeKind::CallEnter) == 1);
    CHECK(count_edges(r.ecfg, sym::EdgeKind::CallReturn) == 0);
    require_clean(testing::check_revert_leaves(r.ecfg));
    REQUIRE(r.created.size() == 1);
    auto bytes = r.created[0]->bytes();
    CHECK(std::vector<std::uint8_t>(bytes.begin(), bytes.end()) == child);
}

TEST_CASE("re-entrant scenario routes through the attacker")
{
    auto p = program("PUSH1 0 DUP1 DUP1 DUP1 PUSH1 5 CALLER GAS CALL POP STOP");
    vm::ScenarioConfig cfg;
    cfg.mode = vm::ScenarioMode::Reentrant;
    cfg.f = cfg.g = vm::EntryPoint::fallback();
    auto r = run(p, cfg);
    REQUIRE_FALSE(r.ends.empty());
    bool dummy = false;
    for (auto const &b : r.ecfg.blocks())
        dummy |= b.dummy;
    CHECK(dummy);
    for (auto const &e : r.ends)
        CHECK((e.flags & sym::flag::reentered) != 0);
    require_clean(testing::check_all(r.ecfg));
}

TEST_CASE("function extraction on the token fixture")
{
    smt::Solver solver;
    auto ex = vm::extract_function_ids(testing::load_fixture("token"), solver, {});
    auto meta = testing::load_meta("token");
    CHECK(ex.functions.size() == meta.at("methodIdentifiers").size());
    std::size_t calls = 0;
    for (auto const &f : ex.functions)
    {
        CHECK(f.entry.kind == vm::EntryPoint::Kind::Selector);
        if (f.has_call)
        {
            ++calls;
            CHECK(f.entry.selector == testing::selector_from_meta(meta, "withdrawAll()"));
        }
    }
    CHECK(calls == 1);
    require_clean(testing::check_all(ex.run.ecfg));
}

TEST_CASE("a contract without a dispatcher has only a fallback")
{
    smt::Solver solver;
    auto ex = vm::extract_function_ids(program("CALLVALUE PUSH1 0 SSTORE STOP"), solver, {});
    REQUIRE(ex.functions.size() == 1);
    CHECK(ex.functions[0].entry.kind == vm::EntryPoint::Kind::Fallback);
    CHECK_FALSE(ex.functions[0].has_call);
}

TEST_CASE("contract queue deduplicates by code")
{
    vm::ContractQueue q;
    CHECK(q.push(program("STOP")));
    CHECK_FALSE(q.push(program("STOP")));
    CHECK(q.push(program("PUSH1 0 STOP")));
    CHECK(q.pop()->bytes().size() == 1);
    CHECK(q.seen() == 2);
}

TEST_CASE("pairs pair every calling function with every function")
{
    std::vector<vm::FunctionInfo> fs(4);
    for (unsigned k = 0; k < 4; ++k)
        fs[k].entry = vm::EntryPoint::of(k);
    fs[1].has_call = fs[3].has_call = true;
    auto pairs = verify::enumerate_pairs(fs);
    CHECK(pairs.size() == 8);
    for (auto const &p : pairs)
        CHECK(p.f.has_call);
    fs[1].has_call = fs[3].has_call = false;
    CHECK(verify::enumerate_pairs(fs).empty());
}

// ---------------------------------------------------------------- properties

namespace
{
    constexpr std::uint64_t kSeeds = 24;

    std::vector<verify::Pair> pairs_of(evm::ProgramPtr const &p, smt::Solver &solver)
    {
        auto ex = vm::extract_function_ids(p, solver, {}, false);
        return verify::enumerate_pairs(ex.functions);
    }

    Expr random_constraint(std::mt19937_64 &rng)
    {
        Expr vars[] = {Expr::var("x"), Expr::var("y"), Expr::var("z")};
        auto term = [&] {
            Expr t = vars[rng() % 3];
            if (rng() % 2)
                t = sym::add(t, Expr::constant(rng() % 50));
            if (rng() % 3 == 0)
                t = sym::bit_and(t, Expr::constant(0xff));
            return t;
        };
        Expr c;
        switch (rng() % 3)
        {
        case 0: c = sym::ult(term(), Expr::constant(rng() % 100)); break;
        case 1: c = sym::eq(term(), term()); break;
        default: c = sym::ule(term(), term()); break;
        }
        return rng() % 4 == 0 ? sym::lnot(c) : c;
    }

    sym::PathCondition random_path(std::mt19937_64 &rng)
    {
        sym::PathCondition pc;
        unsigned n = rng() % 4;
        for (unsigned k = 0; k < n; ++k)
            pc.add(random_constraint(rng), sym::ConstraintOrigin::Branch);
        return pc;
    }
}

TEST_CASE("property: branch successors extend their parent's path condition")
{
    std::mt19937_64 rng(11);
    smt::Solver solver;
    for (unsigned trial = 0; trial < 40; ++trial)
    {
        cfg::CfgManager mgr(solver, 3);
        auto b = root(mgr);
        b.path = random_path(rng);
        if (solver.check_sat(b.path).status != smt::Status::Sat)
            continue;
        mgr.push(std::move(b));
        unsigned steps = 0;
        while (auto next = mgr.pop())
        {
            if (++steps > 12)
                break;
            auto parent = next->path;
            auto pc = next->machine.pc;
            auto before = mgr.pending();
            mgr.branch_on_jumpi(std::move(*next), pc + 20, true, random_constraint(rng));
            std::vector<sym::BasicBlock> children;
            while (mgr.pending() > before)
                children.push_back(std::move(*mgr.pop()));
            CHECK_FALSE(children.empty());
            for (auto &child : children)
            {
                CHECK(parent.is_prefix_of(child.path));
                // a condition that folds to a constant adds nothing
                CHECK(child.path.size() <= parent.size() + 1);
            }
            for (auto it = children.rbegin(); it != children.rend(); ++it)
                mgr.push(std::move(*it));
        }
        require_clean(testing::check_monotone(mgr.ecfg()));
    }
}

TEST_CASE("property: forked blocks do not share writes")
{
    std::mt19937_64 rng(5);
    smt::Solver solver;
    for (unsigned trial = 0; trial < 50; ++trial)
    {
        cfg::CfgManager mgr(solver, 3);
        auto a = root(mgr);
        auto key = victim_key();
        a.world.install(Expr::constant(vm::env::victim_address()), nullptr, Expr::var("bal"));
        std::map<unsigned, Expr> before;
        for (unsigned k = 0; k < 4; ++k)
        {
            Expr v = Expr::constant(rng() % 1000);
            a.world.write_storage(key, Expr::constant(k), v);
            before[k] = v;
        }
        a.machine.memory.store_word(0, Expr::constant(77));
        mgr.seal(a, sym::EndState::Continued);
        auto b = mgr.fork(a, sym::EdgeKind::Jump);

        // random writes on one side only
        auto &writer = rng() % 2 ? a : b;
        auto &reader = &writer == &a ? b : a;
        unsigned n = 1 + rng() % 6;
        for (unsigned k = 0; k < n; ++k)
        {
            switch (rng() % 4)
            {
            case 0: writer.world.write_storage(key, Expr::constant(rng() % 4), Expr::var("w" + std::to_string(k))); break;
            case 1:
            {
                auto other = sym::LocalWorldState::key_of(writer.world.ensure(Expr::constant(0x1234)).address);
                writer.world.transfer(key, other, Expr::constant(1 + rng() % 9));
                break;
            }
            case 2: writer.machine.memory.store_word(32 * (rng() % 3), Expr::var("m")); break;
            default: writer.path.add(sym::ult(Expr::var("x"), Expr::constant(rng() % 99)), sym::ConstraintOrigin::Branch); break;
            }
        }
        for (auto const &[slot, v] : before)
            CHECK(reader.world.read_storage(key, Expr::constant(slot)) == v);
        CHECK(reader.world.balance(key) == Expr::var("bal"));
        CHECK(reader.machine.memory.load_word(0) == Expr::constant(77));
        CHECK(reader.machine.memory.load_word(32) == Expr::constant(0));
        CHECK(reader.path.empty());
    }
}

TEST_CASE("property: generated contracts keep the ECFG invariants")
{
    smt::Solver solver;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed)
    {
        auto gen = testing::generate_contract(seed);
        CAPTURE(gen.source);
        auto ex = vm::extract_function_ids(gen.program, solver, {});
        require_clean(testing::check_all(ex.run.ecfg));
        for (auto const &pair : verify::enumerate_pairs(ex.functions))
        {
            for (auto mode : {vm::ScenarioMode::Sequential, vm::ScenarioMode::Reentrant})
            {
                vm::ScenarioConfig cfg;
                cfg.mode = mode;
                cfg.f = pair.f.entry;
                cfg.g = pair.g.entry;
                vm::SymVm engine(solver);
                auto r = engine.run(gen.program, cfg);
                // monotonicity, callable inheritance, call-stack balance,
                // revert leaves and positivity placement
                require_clean(testing::check_all(r.ecfg));
                std::vector<sym::PathCondition> paths;
                for (auto const &e : r.ends)
                {
                    paths.push_back(e.path);
                    CHECK((e.flags & sym::flag::callable) != 0);
                }
                require_clean(testing::check_no_success_word(paths));
            }
        }
    }
}

TEST_CASE("property: equivalence is reflexive and symmetric")
{
    std::mt19937_64 rng(3);
    smt::Solver solver;
    for (unsigned trial = 0; trial < 60; ++trial)
    {
        auto a = random_path(rng);
        auto b = random_path(rng);
        CHECK(solver.check_equivalence(a, a));
        CHECK(solver.check_equivalence(b, b));
        CHECK(solver.check_equivalence(a, b) == solver.check_equivalence(b, a));
    }
    // also on path conditions the engine produces
    for (std::uint64_t seed = 0; seed < 6; ++seed)
    {
        auto gen = testing::generate_contract(seed);
        for (auto const &pair : pairs_of(gen.program, solver))
        {
            auto I = verify::collect_I(gen.program, pair, solver, {});
            auto C = verify::collect_C(gen.program, pair, solver, {});
            for (auto const &c : C.paths)
            {
                CHECK(solver.check_equivalence(c, c));
                for (auto const &i : I.paths)
                    CHECK(solver.check_equivalence(c, i) == solver.check_equivalence(i, c));
            }
        }
    }
}

TEST_CASE("property: degenerate inputs are benign")
{
    std::mt19937_64 rng(9);
    smt::Solver solver;
    for (unsigned trial = 0; trial < 20; ++trial)
    {
        std::vector<sym::PathCondition> some{random_path(rng), random_path(rng)};
        auto v1 = verify::verify_pair({}, some, solver);
        CHECK(v1.status == verify::Status::Benign);
        CHECK_FALSE(v1.reason.empty());
        auto v2 = verify::verify_pair(some, {}, solver);
        CHECK(v2.status == verify::Status::Benign);
        CHECK_FALSE(v2.reason.empty());
    }

    verify::Options opts;
    opts.reentry_budget = 0;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed)
    {
        auto gen = testing::generate_contract(seed);
        CAPTURE(gen.source);
        for (auto const &pair : pairs_of(gen.program, solver))
        {
            auto v = verify::run_pair(gen.program, pair, solver, opts);
            CHECK(v.status == verify::Status::Benign);
        }
    }
    // also on a fixture known to be vulnerable
    auto fund = testing::load_fixture("fund");
    for (auto const &pair : pairs_of(fund, solver))
        CHECK(verify::run_pair(fund, pair, solver, opts).status == verify::Status::Benign);
}

TEST_CASE("property: verdicts do not depend on the worker count")
{
    std::vector<verify::Target> targets;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed)
        targets.push_back({"gen" + std::to_string(seed), testing::generate_contract(seed).program});

    auto summary = [](verify::Report const &r) {
        std::vector<std::string> out;
        for (auto const &c : r.contracts)
            for (auto const &v : c.verdicts)
                out.push_back(c.label + " " + v.pair.f.name + "->" + v.pair.g.name + " " +
                              verify::to_string(v.status) + " " +
                              (v.witness ? std::to_string(v.witness->c_index) : std::string("-")));
        return out;
    };
    verify::Options one;
    verify::Options many;
    many.workers = 4;
    auto a = summary(verify::analyze(targets, one));
    auto b = summary(verify::analyze(targets, many));
    CHECK(a == b);
    CHECK(a.size() > kSeeds);
}

TEST_CASE("property: vulnerable witnesses can be re-checked")
{
    smt::Solver solver;
    std::size_t vulnerable = 0, benign = 0;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed)
    {
        auto gen = testing::generate_contract(seed);
        CAPTURE(gen.source);
        for (auto const &pair : pairs_of(gen.program, solver))
        {
            auto I = verify::collect_I(gen.program, pair, solver, {});
            auto C = verify::collect_C(gen.program, pair, solver, {});
            auto v = verify::verify_pair(I.paths, C.paths, solver);
            if (v.status == verify::Status::Benign)
            {
                ++benign;
                continue;
            }
            REQUIRE(v.status == verify::Status::Vulnerable);
            REQUIRE(v.witness);
            ++vulnerable;
            auto const &w = *v.witness;
            CHECK(w.c.digest() == C.paths.at(w.c_index).digest());
            for (auto const &e : w.c.exprs())
                CHECK(sym::evaluate(e, w.model) == 1);
            smt::Solver fresh;
            for (auto const &i : I.paths)
                CHECK_FALSE(fresh.check_equivalence(w.c, i));
        }
    }
    CHECK(vulnerable > 0);
    CHECK(benign > 0);
}
