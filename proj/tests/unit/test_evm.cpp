#include <doctest.h>

#include <reentry/evm/bytecode.hpp>
#include <reentry/evm/keccak.hpp>
#include <reentry/evm/opcodes.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace reentry::evm;

namespace
{
    std::string hex_of(Hash256 const &h)
    {
        return to_hex(h);
    }

    std::string read_file(std::string const &path)
    {
        std::ifstream in(path);
        REQUIRE(in.good());
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // Formats an instruction the way the 0.4.24 compiler's opcode listing
    // does. That compiler names 0xfb CREATE2 (an early numbering) and does
    // not know the opcodes introduced after it.
    bool newer_than_compiler(std::uint8_t b)
    {
        return b == 0x3f || (b >= 0x46 && b <= 0x4a) || (b >= 0x5c && b <= 0x5f);
    }

    std::string solc_style(Instruction const &ins)
    {
        std::string name;
        if (ins.opcode == Opcode::SHA3)
            name = "KECCAK256";
        else if (ins.raw == 0xfb)
            name = "CREATE2";
        else if (!opcode_table()[ins.raw].defined || newer_than_compiler(ins.raw))
        {
            char buf[8];
            std::snprintf(buf, sizeof buf, "0x%x", ins.raw);
            name = buf;
        }
        else
            name = std::string(info(ins.opcode).name);
        if (!is_push(ins.opcode) || newer_than_compiler(ins.raw))
            return name;
        u256 v = ins.push_value();
        std::string digits = to_hex(v).substr(2);
        for (auto &c : digits)
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return name + " 0x" + digits;
    }
}

TEST_CASE("keccak256 reference vectors")
{
    // Frozen from an independent Keccak implementation.
    CHECK(hex_of(keccak256("")) == "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
    CHECK(hex_of(keccak256("abc")) == "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45");
    CHECK(hex_of(keccak256(std::string(135, 'a'))) ==
          "34367dc248bbd832f4e3e69dfaac2f92638bd0bbd18f2912ba4ef454919cf446");
    CHECK(hex_of(keccak256(std::string(136, 'a'))) ==
          "a6c4d403279fe3e0af03729caada8374b5ca54d8065329a3ebcaeb4b60aa386e");
    std::vector<std::uint8_t> ramp;
    for (int r = 0; r < 2; ++r)
        for (int i = 0; i < 256; ++i)
            ramp.push_back(static_cast<std::uint8_t>(i));
    CHECK(hex_of(keccak256(ramp)) == "f55ba327291604f0e5be6651752398b7be2331aad65f5763ce067df95cc13be1");
}

TEST_CASE("function selectors")
{
    CHECK(selector_of("withdraw()").selector == 0x3ccfd60bu);
    CHECK(selector_of("transfer(address,uint256)").selector == 0xa9059cbbu);
    CHECK(selector_of("withdraw()").to_hex() == "0x3ccfd60b");

    // selectors reported by the compiler for the fixtures
    for (auto name : {"fund", "bank", "token", "known_reentrancy", "known_cross_function"})
    {
        auto meta = nlohmann::json::parse(read_file(std::string(REENTRY_FIXTURES) + "/" + name + ".meta.json"));
        for (auto const &[sig, sel] : meta["methodIdentifiers"].items())
        {
            CAPTURE(sig);
            CHECK(selector_of(sig).to_hex() == "0x" + sel.get<std::string>());
        }
    }
}

TEST_CASE("hex parsing")
{
    CHECK(parse_hex("0x6001") == std::vector<std::uint8_t>{0x60, 0x01});
    CHECK(parse_hex("  60 01\n") == std::vector<std::uint8_t>{0x60, 0x01});
    CHECK(parse_hex("0XaBcD") == std::vector<std::uint8_t>{0xab, 0xcd});
    CHECK(parse_hex("").empty());

    try
    {
        parse_hex("0x60zz");
        FAIL("expected HexError");
    }
    catch (HexError const &e)
    {
        CHECK(e.position() == 2);
    }
    CHECK_THROWS_AS(parse_hex("600"), HexError);
}

TEST_CASE("disassembly matches the compiler's opcode listing")
{
    for (auto name : {"fund", "bank", "token", "known_reentrancy", "known_cross_function"})
    {
        CAPTURE(name);
        auto meta = nlohmann::json::parse(read_file(std::string(REENTRY_FIXTURES) + "/" + name + ".meta.json"));
        Bytecode code{parse_hex(read_file(std::string(REENTRY_FIXTURES) + "/" + name + ".hex")), CodeOrigin::File};
        std::vector<std::string> ours;
        for (auto const &ins : disassemble(code))
        {
            auto text = solc_style(ins);
            auto space = text.find(' ');
            ours.push_back(text.substr(0, space));
            if (space != std::string::npos)
                ours.push_back(text.substr(space + 1));
        }
        std::vector<std::string> theirs;
        std::istringstream listing(meta["opcodes"].get<std::string>());
        for (std::string tok; listing >> tok;)
            theirs.push_back(tok);
        REQUIRE(ours.size() == theirs.size());
        for (std::size_t i = 0; i < ours.size(); ++i)
        {
            CAPTURE(i);
            REQUIRE(ours[i] == theirs[i]);
        }
    }
}

TEST_CASE("truncated push is zero padded")
{
    Bytecode code{{0x60, 0x01, 0x61, 0xaa}, CodeOrigin::File};
    auto ins = disassemble(code);
    REQUIRE(ins.size() == 2);
    CHECK(ins[1].truncated);
    CHECK(ins[1].push_value() == u256(0xaa00));
    CHECK(assemble(ins) == code.bytes);
}

TEST_CASE("jump targets exclude push data")
{
    // PUSH2 0x5b5b JUMPDEST
    Bytecode code{{0x61, 0x5b, 0x5b, 0x5b}, CodeOrigin::File};
    auto targets = valid_jump_targets(code);
    CHECK(targets == std::set<std::uint32_t>{3});
    Program p(code);
    CHECK(p.is_jumpdest(3));
    CHECK_FALSE(p.is_jumpdest(1));
    CHECK(p.at(1) == nullptr);
    CHECK(p.at(3)->opcode == Opcode::JUMPDEST);
}

TEST_CASE("property: assemble(disassemble(b)) == b")
{
    std::mt19937_64 rng(12345);
    for (int round = 0; round < 2000; ++round)
    {
        std::size_t n = rng() % 96;
        Bytecode code;
        for (std::size_t i = 0; i < n; ++i)
        {
            // bias towards PUSH opcodes so truncation is exercised
            auto r = rng();
            code.bytes.push_back(r % 4 == 0 ? static_cast<std::uint8_t>(0x60 + (r >> 8) % 32)
                                            : static_cast<std::uint8_t>(r >> 16));
        }
        auto ins = disassemble(code);
        REQUIRE(assemble(ins) == code.bytes);
        // offsets are contiguous
        std::uint32_t expect = 0;
        for (auto const &i : ins)
        {
            REQUIRE(i.offset == expect);
            expect += 1 + i.present;
        }
        REQUIRE(expect == code.size());
    }
}

TEST_CASE("opcode table")
{
    CHECK(info(Opcode::ADD).pops == 2);
    CHECK(info(Opcode::ADD).pushes == 1);
    CHECK(info(Opcode::CALL).pops == 7);
    CHECK(info(Opcode::CREATE).pops == 3);
    CHECK(info(Opcode::PUSH32).immediate_size == 32);
    CHECK(push_width(Opcode::PUSH0) == 0);
    CHECK(is_dup(Opcode::DUP16));
    CHECK(is_swap(Opcode::SWAP1));
    CHECK(is_log(Opcode::LOG4));
    CHECK_FALSE(opcode_table()[0x0c].defined);
}

TEST_CASE("program digest is stable and content based")
{
    Program a(Bytecode{{0x60, 0x00}, CodeOrigin::File});
    Program b(Bytecode{{0x60, 0x00}, CodeOrigin::RpcFetch});
    Program c(Bytecode{{0x60, 0x01}, CodeOrigin::File});
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
}
