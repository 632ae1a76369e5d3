// Concrete runs of the symbolic engine against the reference interpreter.

#include <doctest.h>

#include "asm.hpp"
#include "fixtures.hpp"
#include "reference_evm.hpp"

#include <reentry/evm/keccak.hpp>
#include <reentry/vm/vm.hpp>

#include <map>
#include <string>

using namespace reentry;
using reference::Int;
using testing::creator;
using testing::deployer;

namespace
{
    Int to_int(evm::u256 const &v) { return Int(v.str()); }
    evm::u256 to_u256(Int const &v) { return evm::u256(v.str()); }

    std::string pad32(Int const &v)
    {
        std::ostringstream os;
        os << std::hex << v;
        std::string h = os.str();
        return std::string(64 - h.size(), '0') + h;
    }

    std::vector<std::uint8_t> calldata(std::uint32_t selector, std::vector<Int> const &args)
    {
        char buf[9];
        std::snprintf(buf, sizeof buf, "%08x", selector);
        std::string h = buf;
        for (auto const &a : args)
            h += pad32(a);
        return evm::parse_hex(h);
    }

    Int mapping_slot(Int const &key, Int const &slot)
    {
        auto bytes = evm::parse_hex(pad32(key) + pad32(slot));
        auto d = evm::keccak256(bytes);
        return to_int(evm::load_be(d));
    }


    struct Snapshot
    {
        Int balance = 0;
        std::map<Int, Int> storage;
        bool operator==(Snapshot const &) const = default;
    };
    using Final = std::map<Int, Snapshot>;

    struct Case
    {
        std::string name;
        std::vector<std::uint8_t> code;
        std::vector<std::uint8_t> data;
        Int value = 0;
        std::map<Int, Int> storage;
        Int victim_balance = 1000;
        Int attacker_balance = 1000;
    };

    Int victim() { return to_int(vm::env::victim_address()); }
    Int attacker() { return to_int(vm::env::attacker_address()); }

    Final canonical(reference::World const &w)
    {
        Final out;
        for (auto const &[addr, acct] : w)
        {
            Snapshot s;
            s.balance = acct.balance;
            for (auto const &[k, v] : acct.storage)
                if (v != 0)
                    s.storage[k] = v;
            if (s.balance != 0 || !s.storage.empty())
                out[addr] = s;
        }
        return out;
    }

    Final canonical(sym::LocalWorldState const &w)
    {
        Final out;
        for (auto const &[key, acct] : w.accounts())
        {
            REQUIRE(acct.address.is_const());
            Snapshot s;
            sym::Expr bal = w.balance(key);
            std::map<std::string, unsigned> vars;
            sym::collect_vars(bal, vars);
            // accounts first seen during the run start from an unknown
            // balance; the reference starts them at zero
            for (auto const &[name, width] : vars)
                CHECK(name == "balance[" + key + "]");
            s.balance = to_int(sym::evaluate(bal, {}));
            std::set<evm::u256> slots;
            for (auto const &wr : acct.writes)
            {
                REQUIRE(wr.slot.is_const());
                slots.insert(wr.slot.value());
            }
            if (acct.seeded_storage)
                for (auto const &[k, v] : *acct.seeded_storage)
                    slots.insert(k);
            for (auto const &slot : slots)
            {
                sym::Expr v = w.read_storage(key, sym::Expr::constant(slot));
                REQUIRE_MESSAGE(v.is_const(), v.to_string());
                if (v.value() != 0)
                    s.storage[to_int(slot)] = to_int(v.value());
            }
            if (s.balance != 0 || !s.storage.empty())
                out[to_int(acct.address.value())] = s;
        }
        return out;
    }

    std::string describe(Final const &f)
    {
        std::ostringstream os;
        for (auto const &[a, s] : f)
        {
            os << std::hex << "0x" << a << ": balance 0x" << s.balance << "\n";
            for (auto const &[k, v] : s.storage)
                os << "   [0x" << k << "] = 0x" << v << "\n";
        }
        return os.str();
    }

    void run_case(Case const &c)
    {
        CAPTURE(c.name);
        // reference
        reference::Machine ref;
        ref.origin = to_int(vm::env::origin_address());
        ref.world[victim()].code = c.code;
        ref.world[victim()].balance = c.victim_balance;
        ref.world[victim()].storage = c.storage;
        ref.world[attacker()].balance = c.attacker_balance;
        std::uint64_t counter = 0;
        ref.create_address = [&](Int const &creator, std::uint64_t) {
            // same assignment policy as the engine; only the naming matters
            auto key = sym::LocalWorldState::key_of(sym::Expr::constant(to_u256(creator)));
            auto d = evm::keccak256(key + "/" + std::to_string(counter++));
            return to_int(evm::load_be(std::span<const std::uint8_t>(d).subspan(12)));
        };
        auto outcome = ref.call(attacker(), victim(), c.value, c.data);

        // symbolic engine with every input pinned
        smt::Solver solver;
        vm::Limits limits;
        limits.loop_bound = 64;
        vm::SymVm engine(solver, limits);
        vm::ScenarioConfig cfg;
        cfg.mode = vm::ScenarioMode::Extraction;
        cfg.tx_seeds.push_back({c.data, to_u256(c.value)});
        vm::WorldSeed seed;
        for (auto const &[k, v] : c.storage)
            seed.victim_storage[to_u256(k)] = to_u256(v);
        seed.victim_balance = to_u256(c.victim_balance);
        seed.attacker_balance = to_u256(c.attacker_balance);
        cfg.world_seed = seed;
        auto result = engine.run(evm::make_program(evm::Bytecode{c.code}), cfg);

        CAPTURE(outcome.error);
        REQUIRE(outcome.success);
        REQUIRE(result.ends.size() == 1);
        CHECK(result.bounded_paths == 0);
        auto expected = canonical(ref.world);
        auto actual = canonical(result.ends[0].world);
        INFO("reference:\n" << describe(expected) << "engine:\n" << describe(actual));
        CHECK(actual == expected);
    }

    Int neg(Int const &v) { return (Int(1) << 256) - v; }
}

TEST_CASE("differential: wrapping arithmetic")
{
    run_case({"arith", testing::assemble_text(R"(
        PUSH32 0xffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff PUSH1 2 ADD PUSH1 0 SSTORE
        PUSH1 3 PUSH1 5 SUB PUSH1 1 SSTORE
        PUSH1 5 PUSH1 3 SUB PUSH1 2 SSTORE
        PUSH32 0x8000000000000000000000000000000000000000000000000000000000000000 PUSH1 2 MUL PUSH1 3 SSTORE
        PUSH16 0xffffffffffffffffffffffffffffffff PUSH16 0xfffffffffffffffffffffffffffffff1 MUL PUSH1 4 SSTORE
        PUSH1 7 PUSH1 0 SUB PUSH1 9 ADD PUSH1 5 SSTORE
        STOP)")});
}

TEST_CASE("differential: division and remainder")
{
    run_case({"div", testing::assemble_text(R"(
        PUSH1 0 PUSH1 7 DIV PUSH1 0 SSTORE
        PUSH1 0 PUSH1 7 MOD PUSH1 1 SSTORE
        PUSH1 2 PUSH1 7 PUSH1 0 SUB SDIV PUSH1 2 SSTORE
        PUSH1 2 PUSH1 7 PUSH1 0 SUB SMOD PUSH1 3 SSTORE
        PUSH1 1 PUSH1 0 SUB PUSH32 0x8000000000000000000000000000000000000000000000000000000000000000 SDIV PUSH1 4 SSTORE
        PUSH1 3 PUSH2 0x03e8 DIV PUSH1 5 SSTORE
        PUSH1 3 PUSH1 0 SUB PUSH1 10 SMOD PUSH1 6 SSTORE
        PUSH1 0 PUSH1 5 SDIV PUSH1 7 SSTORE
        STOP)")});
}

TEST_CASE("differential: exponentiation")
{
    run_case({"exp",
              testing::assemble_text(R"(
        PUSH1 255 PUSH1 2 EXP PUSH1 0 SSTORE
        PUSH2 0x012c PUSH1 3 EXP PUSH1 1 SSTORE
        PUSH1 0 PUSH1 0 EXP PUSH1 2 SSTORE
        PUSH2 0x0100 PUSH1 2 EXP PUSH1 3 SSTORE
        PUSH1 0 CALLDATALOAD PUSH1 16 EXP PUSH1 4 SSTORE
        PUSH1 0 CALLDATALOAD PUSH1 7 EXP PUSH1 5 SSTORE
        STOP)"),
              evm::parse_hex(pad32(Int(21)))});
}

TEST_CASE("differential: sign extension and byte extraction")
{
    run_case({"signext", testing::assemble_text(R"(
        PUSH1 0xff PUSH1 0 SIGNEXTEND PUSH1 0 SSTORE
        PUSH1 0x7f PUSH1 0 SIGNEXTEND PUSH1 1 SSTORE
        PUSH2 0x8001 PUSH1 1 SIGNEXTEND PUSH1 2 SSTORE
        PUSH2 0x8001 PUSH1 40 SIGNEXTEND PUSH1 3 SSTORE
        PUSH32 0x00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff PUSH1 1 BYTE PUSH1 4 SSTORE
        PUSH32 0x00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff PUSH1 31 BYTE PUSH1 5 SSTORE
        PUSH32 0x00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff PUSH1 32 BYTE PUSH1 6 SSTORE
        STOP)")});
}

TEST_CASE("differential: shifts")
{
    run_case({"shifts", testing::assemble_text(R"(
        PUSH1 1 PUSH1 255 SHL PUSH1 0 SSTORE
        PUSH1 1 PUSH2 0x0100 SHL PUSH1 1 SSTORE
        PUSH32 0xff00000000000000000000000000000000000000000000000000000000000000 PUSH1 4 SHR PUSH1 2 SSTORE
        PUSH32 0xff00000000000000000000000000000000000000000000000000000000000000 PUSH1 4 SAR PUSH1 3 SSTORE
        PUSH32 0x8000000000000000000000000000000000000000000000000000000000000000 PUSH2 0x0101 SAR PUSH1 4 SSTORE
        PUSH1 0x70 PUSH1 3 SAR PUSH1 5 SSTORE
        STOP)")});
}

TEST_CASE("differential: modular arithmetic")
{
    run_case({"modular", testing::assemble_text(R"(
        PUSH1 7 PUSH32 0xffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff DUP1 ADDMOD PUSH1 0 SSTORE
        PUSH1 7 PUSH32 0xffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff DUP1 MULMOD PUSH1 1 SSTORE
        PUSH1 0 PUSH1 5 PUSH1 6 ADDMOD PUSH1 2 SSTORE
        PUSH1 0 PUSH1 5 PUSH1 6 MULMOD PUSH1 3 SSTORE
        STOP)")});
}

TEST_CASE("differential: comparisons")
{
    run_case({"compare", testing::assemble_text(R"(
        PUSH1 2 PUSH1 1 LT PUSH1 0 SSTORE
        PUSH1 2 PUSH1 1 GT PUSH1 1 SSTORE
        PUSH1 1 PUSH1 1 PUSH1 0 SUB SLT PUSH1 2 SSTORE
        PUSH1 1 PUSH1 1 PUSH1 0 SUB SGT PUSH1 3 SSTORE
        PUSH1 1 PUSH1 0 SUB PUSH1 1 LT PUSH1 4 SSTORE
        PUSH1 0 ISZERO PUSH1 5 SSTORE
        PUSH1 9 PUSH1 9 EQ PUSH1 6 SSTORE
        STOP)")});
}

TEST_CASE("differential: memory")
{
    run_case({"memory", testing::assemble_text(R"(
        PUSH32 0x0102030405060708091011121314151617181920212223242526272829303132 PUSH1 1 MSTORE
        PUSH1 0 MLOAD PUSH1 0 SSTORE
        PUSH1 17 MLOAD PUSH1 1 SSTORE
        PUSH1 0xaa PUSH1 40 MSTORE8
        PUSH1 32 MLOAD PUSH1 2 SSTORE
        MSIZE PUSH1 3 SSTORE
        PUSH1 0xbb PUSH1 100 MSTORE8 MSIZE PUSH1 4 SSTORE
        STOP)")});
}

TEST_CASE("differential: hashing into a mapping slot")
{
    run_case({"sha3", testing::assemble_text(R"(
        CALLER PUSH1 0 MSTORE PUSH1 0 PUSH1 32 MSTORE
        CALLVALUE PUSH1 64 PUSH1 0 SHA3 SSTORE
        PUSH1 0 PUSH1 0 SHA3 PUSH1 1 SSTORE
        PUSH1 3 PUSH1 5 SHA3 PUSH1 2 SSTORE
        STOP)"),
              {},
              77});
}

TEST_CASE("differential: calldata access")
{
    auto data = evm::parse_hex("a9059cbb" + pad32(Int(0x1234)) + "beef");
    run_case({"calldata", testing::assemble_text(R"(
        PUSH1 0 CALLDATALOAD PUSH1 0 SSTORE
        PUSH1 4 CALLDATALOAD PUSH1 1 SSTORE
        PUSH1 36 CALLDATALOAD PUSH1 2 SSTORE
        PUSH1 100 CALLDATALOAD PUSH1 3 SSTORE
        CALLDATASIZE PUSH1 4 SSTORE
        PUSH1 5 PUSH1 34 PUSH1 0 CALLDATACOPY PUSH1 0 MLOAD PUSH1 5 SSTORE
        STOP)"),
              data});
}

TEST_CASE("differential: bounded loop")
{
    // s = 0 + 1 + ... + 9
    run_case({"loop", testing::assemble_text(R"(
        PUSH1 0 PUSH1 0
        :loop
        DUP2 PUSH1 10 GT ISZERO @done JUMPI
        DUP2 ADD SWAP1 PUSH1 1 ADD SWAP1 @loop JUMP
        :done
        PUSH1 0 SSTORE POP STOP)")});
}

TEST_CASE("differential: data dependent branches")
{
    auto code = testing::assemble_text(R"(
        PUSH1 0 CALLDATALOAD PUSH1 5 LT @big JUMPI
        PUSH1 2 PUSH1 0 SSTORE STOP
        :big
        PUSH1 1 PUSH1 0 SSTORE STOP)");
    run_case({"branch-small", code, evm::parse_hex(pad32(Int(3)))});
    run_case({"branch-big", code, evm::parse_hex(pad32(Int(9)))});
}

TEST_CASE("differential: value and balances")
{
    run_case({"value", testing::assemble_text(R"(
        CALLVALUE PUSH1 0 SSTORE
        SELFBALANCE PUSH1 1 SSTORE
        CALLER BALANCE PUSH1 2 SSTORE
        ADDRESS BALANCE PUSH1 3 SSTORE
        ORIGIN PUSH1 4 SSTORE
        STOP)"),
              {},
              250});
}

TEST_CASE("differential: value transfer by call")
{
    run_case({"call-caller", testing::assemble_text(R"(
        PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 100 CALLER GAS CALL PUSH1 0 SSTORE
        PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 7 PUSH2 0xbeef GAS CALL PUSH1 1 SSTORE
        SELFBALANCE PUSH1 2 SSTORE
        STOP)")});
}

TEST_CASE("differential: create then call the child")
{
    // child stores 0x2a and its caller when called
    auto child = testing::assemble_text("PUSH1 0x2a PUSH1 0 SSTORE CALLER PUSH1 1 SSTORE STOP");
    run_case({"create-call",
              creator(deployer(child), 0, "DUP1 PUSH1 0 SSTORE DUP1 EXTCODESIZE PUSH1 1 SSTORE "
                                          "PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 DUP6 GAS CALL PUSH1 2 SSTORE")});
}

TEST_CASE("differential: create with value and empty runtime")
{
    // init code stores its callvalue and stops: empty runtime code
    auto init = testing::assemble_text("CALLVALUE PUSH1 1 SSTORE SELFBALANCE PUSH1 2 SSTORE STOP");
    run_case({"create-value", creator(init, 50, "PUSH1 0 SSTORE SELFBALANCE PUSH1 1 SSTORE")});
}

TEST_CASE("differential: init code deploying ten bytes")
{
    // 0x600a600c600039600a6000f3 followed by a ten byte body
    auto body = testing::assemble_text("PUSH1 0x11 PUSH1 0x03 SSTORE PUSH1 0 PUSH1 0 RETURN");
    REQUIRE(body.size() == 10);
    auto init = deployer(body);
    CHECK(evm::to_hex(std::span<const std::uint8_t>(init).subspan(0, 12)) == "600a600c600039600a6000f3");
    run_case({"ten-bytes",
              creator(init, 0, "DUP1 PUSH1 0 SSTORE DUP1 EXTCODESIZE PUSH1 1 SSTORE "
                               "PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 DUP6 GAS CALL PUSH1 2 SSTORE")});
}

TEST_CASE("differential: stack shuffling")
{
    std::string src;
    for (int i = 1; i <= 17; ++i)
        src += "PUSH1 " + std::to_string(i) + " ";
    src += "DUP16 PUSH1 0 SSTORE SWAP16 PUSH1 1 SSTORE SWAP1 PUSH1 2 SSTORE DUP3 PUSH1 3 SSTORE STOP";
    run_case({"stack", testing::assemble_text(src)});
}

TEST_CASE("differential: code introspection")
{
    run_case({"code", testing::assemble_text(R"(
        CODESIZE PUSH1 0 SSTORE
        PUSH1 32 PUSH1 0 PUSH1 0 CODECOPY PUSH1 0 MLOAD PUSH1 1 SSTORE
        PUSH1 8 PUSH1 250 PUSH1 64 CODECOPY PUSH1 64 MLOAD PUSH1 2 SSTORE
        PC PUSH1 3 SSTORE
        STOP)")});
}

TEST_CASE("differential: return data from a created callee")
{
    // child returns 2 * first argument word
    auto child = testing::assemble_text("PUSH1 0 CALLDATALOAD PUSH1 2 MUL PUSH1 0 MSTORE PUSH1 32 PUSH1 0 RETURN");
    auto init = deployer(child);
    run_case({"returndata",
              creator(init, 0, "PUSH1 21 PUSH1 0 MSTORE "
                               "PUSH1 32 PUSH1 64 PUSH1 32 PUSH1 0 PUSH1 0 DUP6 GAS CALL PUSH1 0 SSTORE "
                               "PUSH1 64 MLOAD PUSH1 1 SSTORE RETURNDATASIZE PUSH1 2 SSTORE "
                               "PUSH1 16 PUSH1 16 PUSH1 128 RETURNDATACOPY PUSH1 128 MLOAD PUSH1 3 SSTORE")});
}

TEST_CASE("differential: Fund withdraw")
{
    auto meta = testing::load_meta("fund");
    auto sel = testing::selector_from_meta(meta, "withdraw()");
    Case c{"fund", testing::load_fixture("fund")->code().bytes, calldata(sel, {})};
    c.storage[mapping_slot(attacker(), 0)] = 40;
    c.victim_balance = 100;
    run_case(c);
}

TEST_CASE("differential: Bank deposit and withdraw")
{
    auto meta = testing::load_meta("bank");
    auto code = testing::load_fixture("bank")->code().bytes;
    Case dep{"bank-deposit", code, calldata(testing::selector_from_meta(meta, "deposit()"), {}), 30};
    dep.storage[mapping_slot(attacker(), 0)] = 5;
    run_case(dep);

    Case wd{"bank-withdraw", code, calldata(testing::selector_from_meta(meta, "withdraw()"), {})};
    wd.storage[mapping_slot(attacker(), 0)] = 20;
    wd.victim_balance = 60;
    run_case(wd);
}

TEST_CASE("differential: Token exchange and withdraw")
{
    auto meta = testing::load_meta("token");
    auto code = testing::load_fixture("token")->code().bytes;
    Case ex{"token-exchange", code, calldata(testing::selector_from_meta(meta, "exchangeEther(uint256)"), {10}), 25};
    ex.storage[3] = 2; // currentRate
    ex.storage[mapping_slot(attacker(), 1)] = 4;
    run_case(ex);

    Case wd{"token-withdraw", code, calldata(testing::selector_from_meta(meta, "withdrawAll()"), {})};
    wd.storage[3] = 3;
    wd.storage[mapping_slot(attacker(), 0)] = 5;
    wd.storage[mapping_slot(attacker(), 1)] = 7;
    wd.victim_balance = 500;
    run_case(wd);
}

TEST_CASE("differential: cross-function transfer")
{
    auto meta = testing::load_meta("known_cross_function");
    auto code = testing::load_fixture("known_cross_function")->code().bytes;
    Int to = 0xbeef;
    Case tr{"xfer", code, calldata(testing::selector_from_meta(meta, "transfer(address,uint256)"), {to, 6})};
    tr.storage[mapping_slot(attacker(), 0)] = 10;
    run_case(tr);

    Case wd{"xwithdraw", code, calldata(testing::selector_from_meta(meta, "withdrawBalance()"), {})};
    wd.storage[mapping_slot(attacker(), 0)] = 10;
    run_case(wd);
}

TEST_CASE("differential: negative numbers through storage")
{
    run_case({"neg", testing::assemble_text(R"(
        PUSH1 0 SLOAD PUSH1 1 SLOAD SDIV PUSH1 2 SSTORE
        PUSH1 0 SLOAD PUSH1 1 SLOAD SMOD PUSH1 3 SSTORE
        PUSH1 0 SLOAD PUSH1 1 SLOAD SLT PUSH1 4 SSTORE
        PUSH1 0 SLOAD PUSH1 3 SAR PUSH1 5 SSTORE
        STOP)"),
              {},
              0,
              {{0, neg(3)}, {1, neg(17)}}});
}
