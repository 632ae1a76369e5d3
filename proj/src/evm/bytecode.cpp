#include <reentry/evm/bytecode.hpp>
#include <reentry/evm/keccak.hpp>

#include <cctype>
#include <cstdio>

namespace reentry::evm
{
    namespace
    {
        int hex_digit(char c)
        {
            if (c >= '0' && c <= '9') {
                return c - '0';
            }
            if (c >= 'a' && c <= 'f') {
                return c - 'a' + 10;
            }
            if (c >= 'A' && c <= 'F') {
                return c - 'A' + 10;
            }
            return -1;
        }
    }

    std::vector<std::uint8_t> parse_hex(std::string_view text)
    {
        std::string digits;
        digits.reserve(text.size());
        for (char c : text) {
            if (!std::isspace(static_cast<unsigned char>(c))) {
                digits.push_back(c);
            }
        }
        std::string_view body = digits;
        if (body.size() >= 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
            body.remove_prefix(2);
        }

        std::vector<std::uint8_t> out;
        out.reserve(body.size() / 2);
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (hex_digit(body[i]) < 0) {
                throw HexError("non-hex character '" + std::string(1, body[i]) + "' at offset " +
                                   std::to_string(i),
                               i);
            }
        }
        if (body.size() % 2 != 0) {
            throw HexError("odd number of hex digits", body.size());
        }
        for (std::size_t i = 0; i < body.size(); i += 2) {
            out.push_back(static_cast<std::uint8_t>(hex_digit(body[i]) * 16 + hex_digit(body[i + 1])));
        }
        return out;
    }

    std::string to_hex(std::span<const std::uint8_t> bytes, bool prefix)
    {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out = prefix ? "0x" : "";
        out.reserve(out.size() + bytes.size() * 2);
        for (auto b : bytes) {
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xf]);
        }
        return out;
    }

    std::string FunctionId::to_hex() const
    {
        char buf[11];
        std::snprintf(buf, sizeof buf, "0x%08x", selector);
        return buf;
    }

    FunctionId selector_of(std::string_view signature)
    {
        auto h = keccak256(signature);
        return FunctionId{(std::uint32_t{h[0]} << 24) | (std::uint32_t{h[1]} << 16) |
                          (std::uint32_t{h[2]} << 8) | std::uint32_t{h[3]}};
    }

    std::string Instruction::to_string() const
    {
        auto const &meta = opcode_table()[raw];
        std::string out;
        if (meta.defined) {
            out = std::string(meta.name);
        }
        else {
            char buf[16];
            std::snprintf(buf, sizeof buf, "INVALID(0x%02x)", raw);
            out = buf;
        }
        if (is_push(opcode)) {
            out += " " + evm::to_hex(immediate, true);
        }
        return out;
    }

    std::vector<Instruction> disassemble(Bytecode const &code)
    {
        std::vector<Instruction> out;
        auto const &bytes = code.bytes;
        auto const &table = opcode_table();
        std::size_t pc = 0;
        while (pc < bytes.size()) {
            Instruction ins;
            ins.offset = static_cast<std::uint32_t>(pc);
            ins.raw = bytes[pc];
            ins.opcode = table[ins.raw].defined ? static_cast<Opcode>(ins.raw) : Opcode::INVALID;
            unsigned const width = push_width(ins.opcode);
            if (width != 0) {
                ins.immediate.assign(width, 0);
                for (unsigned k = 0; k < width; ++k) {
                    if (pc + 1 + k < bytes.size()) {
                        ins.immediate[k] = bytes[pc + 1 + k];
                        ++ins.present;
                    }
                    else {
                        ins.truncated = true;
                    }
                }
            }
            pc += 1 + width;
            out.push_back(std::move(ins));
        }
        return out;
    }

    std::set<std::uint32_t> valid_jump_targets(Bytecode const &code)
    {
        std::set<std::uint32_t> out;
        auto const &bytes = code.bytes;
        std::size_t pc = 0;
        while (pc < bytes.size()) {
            auto op = static_cast<Opcode>(bytes[pc]);
            if (op == Opcode::JUMPDEST) {
                out.insert(static_cast<std::uint32_t>(pc));
            }
            pc += 1 + push_width(op);
        }
        return out;
    }

    std::vector<std::uint8_t> assemble(std::span<const Instruction> instructions)
    {
        std::vector<std::uint8_t> out;
        for (auto const &ins : instructions) {
            out.push_back(ins.raw);
            out.insert(out.end(), ins.immediate.begin(), ins.immediate.begin() + ins.present);
        }
        return out;
    }

    Program::Program(Bytecode code)
        : code_(std::move(code)), instructions_(disassemble(code_)),
          index_of_(code_.bytes.size(), -1), jumpdest_(code_.bytes.size(), false)
    {
        for (std::size_t i = 0; i < instructions_.size(); ++i) {
            auto const &ins = instructions_[i];
            index_of_[ins.offset] = static_cast<std::int32_t>(i);
            if (ins.opcode == Opcode::JUMPDEST) {
                jumpdest_[ins.offset] = true;
            }
        }
        digest_ = evm::to_hex(keccak256(code_.bytes));
    }

    Instruction const *Program::at(std::uint64_t pc) const
    {
        if (pc >= index_of_.size() || index_of_[pc] < 0) {
            return nullptr;
        }
        return &instructions_[static_cast<std::size_t>(index_of_[pc])];
    }
}
