#include <reentry/evm/opcodes.hpp>

#include <string>

namespace reentry::evm
{
    namespace
    {
        std::array<OpcodeInfo, 256> build_table()
        {
            std::array<OpcodeInfo, 256> t{};
            auto set = [&](Opcode op, std::string_view name, int pops, int pushes) {
                t[static_cast<std::uint8_t>(op)] = OpcodeInfo{
                    name, static_cast<std::uint8_t>(pops), static_cast<std::uint8_t>(pushes), 0, true};
            };
            using enum Opcode;
            set(STOP, "STOP", 0, 0);
            set(ADD, "ADD", 2, 1);
            set(MUL, "MUL", 2, 1);
            set(SUB, "SUB", 2, 1);
            set(DIV, "DIV", 2, 1);
            set(SDIV, "SDIV", 2, 1);
            set(MOD, "MOD", 2, 1);
            set(SMOD, "SMOD", 2, 1);
            set(ADDMOD, "ADDMOD", 3, 1);
            set(MULMOD, "MULMOD", 3, 1);
            set(EXP, "EXP", 2, 1);
            set(SIGNEXTEND, "SIGNEXTEND", 2, 1);
            set(LT, "LT", 2, 1);
            set(GT, "GT", 2, 1);
            set(SLT, "SLT", 2, 1);
            set(SGT, "SGT", 2, 1);
            set(EQ, "EQ", 2, 1);
            set(ISZERO, "ISZERO", 1, 1);
            set(AND, "AND", 2, 1);
            set(OR, "OR", 2, 1);
            set(XOR, "XOR", 2, 1);
            set(NOT, "NOT", 1, 1);
            set(BYTE, "BYTE", 2, 1);
            set(SHL, "SHL", 2, 1);
            set(SHR, "SHR", 2, 1);
            set(SAR, "SAR", 2, 1);
            set(SHA3, "SHA3", 2, 1);
            set(ADDRESS, "ADDRESS", 0, 1);
            set(BALANCE, "BALANCE", 1, 1);
            set(ORIGIN, "ORIGIN", 0, 1);
            set(CALLER, "CALLER", 0, 1);
            set(CALLVALUE, "CALLVALUE", 0, 1);
            set(CALLDATALOAD, "CALLDATALOAD", 1, 1);
            set(CALLDATASIZE, "CALLDATASIZE", 0, 1);
            set(CALLDATACOPY, "CALLDATACOPY", 3, 0);
            set(CODESIZE, "CODESIZE", 0, 1);
            set(CODECOPY, "CODECOPY", 3, 0);
            set(GASPRICE, "GASPRICE", 0, 1);
            set(EXTCODESIZE, "EXTCODESIZE", 1, 1);
            set(EXTCODECOPY, "EXTCODECOPY", 4, 0);
            set(RETURNDATASIZE, "RETURNDATASIZE", 0, 1);
            set(RETURNDATACOPY, "RETURNDATACOPY", 3, 0);
            set(EXTCODEHASH, "EXTCODEHASH", 1, 1);
            set(BLOCKHASH, "BLOCKHASH", 1, 1);
            set(COINBASE, "COINBASE", 0, 1);
            set(TIMESTAMP, "TIMESTAMP", 0, 1);
            set(NUMBER, "NUMBER", 0, 1);
            set(DIFFICULTY, "DIFFICULTY", 0, 1);
            set(GASLIMIT, "GASLIMIT", 0, 1);
            set(CHAINID, "CHAINID", 0, 1);
            set(SELFBALANCE, "SELFBALANCE", 0, 1);
            set(BASEFEE, "BASEFEE", 0, 1);
            set(BLOBHASH, "BLOBHASH", 1, 1);
            set(BLOBBASEFEE, "BLOBBASEFEE", 0, 1);
            set(POP, "POP", 1, 0);
            set(MLOAD, "MLOAD", 1, 1);
            set(MSTORE, "MSTORE", 2, 0);
            set(MSTORE8, "MSTORE8", 2, 0);
            set(SLOAD, "SLOAD", 1, 1);
            set(SSTORE, "SSTORE", 2, 0);
            set(JUMP, "JUMP", 1, 0);
            set(JUMPI, "JUMPI", 2, 0);
            set(PC, "PC", 0, 1);
            set(MSIZE, "MSIZE", 0, 1);
            set(GAS, "GAS", 0, 1);
            set(JUMPDEST, "JUMPDEST", 0, 0);
            set(TLOAD, "TLOAD", 1, 1);
            set(TSTORE, "TSTORE", 2, 0);
            set(MCOPY, "MCOPY", 3, 0);
            set(PUSH0, "PUSH0", 0, 1);

            static std::array<std::string, 32> push_names;
            static std::array<std::string, 16> dup_names;
            static std::array<std::string, 16> swap_names;
            static std::array<std::string, 5> log_names;
            for (int n = 1; n <= 32; ++n) {
                push_names[n - 1] = "PUSH" + std::to_string(n);
                auto &e = t[0x5f + n];
                e = OpcodeInfo{push_names[n - 1], 0, 1, static_cast<std::uint8_t>(n), true};
            }
            for (int n = 1; n <= 16; ++n) {
                dup_names[n - 1] = "DUP" + std::to_string(n);
                t[0x7f + n] = OpcodeInfo{dup_names[n - 1], static_cast<std::uint8_t>(n),
                                         static_cast<std::uint8_t>(n + 1), 0, true};
                swap_names[n - 1] = "SWAP" + std::to_string(n);
                t[0x8f + n] = OpcodeInfo{swap_names[n - 1], static_cast<std::uint8_t>(n + 1),
                                         static_cast<std::uint8_t>(n + 1), 0, true};
            }
            for (int n = 0; n <= 4; ++n) {
                log_names[n] = "LOG" + std::to_string(n);
                t[0xa0 + n] = OpcodeInfo{log_names[n], static_cast<std::uint8_t>(n + 2), 0, 0, true};
            }

            set(CREATE, "CREATE", 3, 1);
            set(CALL, "CALL", 7, 1);
            set(CALLCODE, "CALLCODE", 7, 1);
            set(RETURN, "RETURN", 2, 0);
            set(DELEGATECALL, "DELEGATECALL", 6, 1);
            set(CREATE2, "CREATE2", 4, 1);
            set(STATICCALL, "STATICCALL", 6, 1);
            set(REVERT, "REVERT", 2, 0);
            set(INVALID, "INVALID", 0, 0);
            set(SELFDESTRUCT, "SELFDESTRUCT", 1, 0);
            return t;
        }
    }

    std::array<OpcodeInfo, 256> const &opcode_table()
    {
        static std::array<OpcodeInfo, 256> const table = build_table();
        return table;
    }
}
