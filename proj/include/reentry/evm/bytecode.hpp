#pragma once

#include <reentry/evm/opcodes.hpp>
#include <reentry/evm/uint256.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reentry::evm
{
    enum class CodeOrigin
    {
        File,
        RpcFetch,
        CreateReturned,
    };

    struct Bytecode
    {
        std::vector<std::uint8_t> bytes;
        CodeOrigin origin = CodeOrigin::File;

        std::size_t size() const { return bytes.size(); }
        bool empty() const { return bytes.empty(); }
        friend bool operator==(Bytecode const &, Bytecode const &) = default;
    };

    class HexError : public std::runtime_error
    {
    public:
        HexError(std::string const &what, std::size_t position)
            : std::runtime_error(what), position_(position)
        {
        }

        /// Offset of the offending character within the normalized text
        /// (after whitespace and the 0x prefix are removed).
        std::size_t position() const { return position_; }

    private:
        std::size_t position_;
    };

    /// Strips whitespace and an optional 0x/0X prefix, then decodes pairs of
    /// hex digits. Throws HexError on a non-hex character or odd digit count.
    std::vector<std::uint8_t> parse_hex(std::string_view text);

    std::string to_hex(std::span<const std::uint8_t> bytes, bool prefix = false);

    struct FunctionId
    {
        std::uint32_t selector = 0;

        std::string to_hex() const;
        auto operator<=>(FunctionId const &) const = default;
    };

    /// First four bytes of keccak256(signature), e.g. "withdraw()" -> 0x3ccfd60b.
    FunctionId selector_of(std::string_view signature);

    struct Instruction
    {
        std::uint32_t offset = 0;
        Opcode opcode = Opcode::STOP;
        /// Original byte; differs from opcode only for undefined bytes, which
        /// decode as INVALID.
        std::uint8_t raw = 0;
        std::vector<std::uint8_t> immediate;
        /// The PUSH immediate ran past the end of code and was zero-padded.
        bool truncated = false;
        /// Immediate bytes actually present in the code (< immediate.size()
        /// only when truncated).
        std::uint8_t present = 0;

        u256 push_value() const { return load_be(immediate); }
        std::uint32_t size() const { return 1 + static_cast<std::uint32_t>(immediate.size()); }
        std::string to_string() const;
    };

    std::vector<Instruction> disassemble(Bytecode const &code);

    /// Offsets of JUMPDEST bytes that are not PUSH immediate data.
    std::set<std::uint32_t> valid_jump_targets(Bytecode const &code);

    /// Re-serializes an instruction stream. Zero padding of a truncated
    /// trailing PUSH is dropped, so the result equals the decoded input.
    std::vector<std::uint8_t> assemble(std::span<const Instruction> instructions);

    /// Decoded, immutable view of a contract's code shared by every path
    /// that executes it.
    class Program
    {
    public:
        explicit Program(Bytecode code);

        Bytecode const &code() const { return code_; }
        std::span<const std::uint8_t> bytes() const { return code_.bytes; }
        std::vector<Instruction> const &instructions() const { return instructions_; }

        /// Instruction starting at byte offset pc, or nullptr when pc is not
        /// an instruction boundary (or is past the end).
        Instruction const *at(std::uint64_t pc) const;

        bool is_jumpdest(std::uint64_t pc) const
        {
            return pc < jumpdest_.size() && jumpdest_[pc];
        }

        /// Stable content hash (keccak of the bytes), used to deduplicate
        /// contracts in the analysis queue.
        std::string const &digest() const { return digest_; }

    private:
        Bytecode code_;
        std::vector<Instruction> instructions_;
        std::vector<std::int32_t> index_of_;
        std::vector<bool> jumpdest_;
        std::string digest_;
    };

    using ProgramPtr = std::shared_ptr<const Program>;

    inline ProgramPtr make_program(Bytecode code)
    {
        return std::make_shared<const Program>(std::move(code));
    }
}
