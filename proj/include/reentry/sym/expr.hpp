#pragma once

#include <reentry/evm/uint256.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reentry::sym
{
    using evm::u256;

    enum class Op : std::uint8_t
    {
        // bit-vector terms
        Const,
        Var,
        Add,
        Sub,
        Mul,
        UDiv, // EVM semantics: x / 0 == 0
        SDiv, // EVM semantics: x / 0 == 0
        URem, // EVM semantics: x % 0 == 0
        SRem, // EVM semantics: x % 0 == 0
        And,
        Or,
        Xor,
        Not,
        Shl,
        LShr,
        AShr,
        Extract,
        Concat,
        SExt,
        Ite,
        // boolean terms
        BoolConst,
        Eq,
        Ult,
        Ule,
        Slt,
        Sle,
        LNot,
        LAnd,
        LOr,
    };

    struct Node;

    /// Immutable, structurally hashed expression handle. Bit-vector terms
    /// have width 1..256; boolean terms report width 0.
    class Expr
    {
    public:
        Expr() = default;

        static Expr constant(u256 const &value, unsigned width = 256);
        static Expr var(std::string name, unsigned width = 256);
        static Expr boolean(bool value);

        explicit operator bool() const { return node_ != nullptr; }

        Op op() const;
        unsigned width() const;
        bool is_bool() const;
        bool is_const() const; // Const or BoolConst
        bool is_true() const;
        bool is_false() const;
        /// Value of a Const (or 0/1 for BoolConst).
        u256 const &value() const;
        std::string const &name() const;
        unsigned hi() const;
        unsigned lo() const;
        std::span<const Expr> args() const;
        Expr const &arg(std::size_t i) const;

        std::uint64_t hash() const;
        Node const *id() const { return node_.get(); }

        std::string to_string() const;

        friend bool operator==(Expr const &a, Expr const &b);

    private:
        friend Expr make_node(Node &&);
        std::shared_ptr<const Node> node_;
    };

    struct Node
    {
        Op op = Op::Const;
        unsigned width = 0;
        unsigned hi = 0;
        unsigned lo = 0;
        u256 value = 0;
        std::string name;
        std::vector<Expr> args;
        std::uint64_t hash = 0;
    };

    /// Wraps a fully populated node (computes its hash). Prefer the builders.
    Expr make_node(Node &&n);

    struct ExprHash
    {
        std::size_t operator()(Expr const &e) const { return static_cast<std::size_t>(e.hash()); }
    };

    u256 mask_of(unsigned width);

    // Builders. Every builder folds constants and applies local rewrites
    // that preserve EVM semantics.
    Expr add(Expr const &a, Expr const &b);
    Expr sub(Expr const &a, Expr const &b);
    Expr mul(Expr const &a, Expr const &b);
    Expr udiv(Expr const &a, Expr const &b);
    Expr sdiv(Expr const &a, Expr const &b);
    Expr urem(Expr const &a, Expr const &b);
    Expr srem(Expr const &a, Expr const &b);
    Expr bit_and(Expr const &a, Expr const &b);
    Expr bit_or(Expr const &a, Expr const &b);
    Expr bit_xor(Expr const &a, Expr const &b);
    Expr bit_not(Expr const &a);
    Expr shl(Expr const &value, Expr const &shift);
    Expr lshr(Expr const &value, Expr const &shift);
    Expr ashr(Expr const &value, Expr const &shift);
    Expr extract(Expr const &a, unsigned hi, unsigned lo);
    Expr concat(Expr const &high, Expr const &low);
    /// Concatenation of parts, most significant first, merging adjacent
    /// slices of the same source.
    Expr concat(std::span<const Expr> parts);
    Expr zext(Expr const &a, unsigned width);
    Expr sext(Expr const &a, unsigned width);
    Expr ite(Expr const &cond, Expr const &then_e, Expr const &else_e);

    Expr eq(Expr const &a, Expr const &b);
    Expr ult(Expr const &a, Expr const &b);
    Expr ule(Expr const &a, Expr const &b);
    Expr slt(Expr const &a, Expr const &b);
    Expr sle(Expr const &a, Expr const &b);
    Expr lnot(Expr const &a);
    Expr land(Expr const &a, Expr const &b);
    Expr lor(Expr const &a, Expr const &b);
    Expr land(std::span<const Expr> terms);

    /// EVM boolean word: 1 when cond holds, else 0.
    Expr bool_to_word(Expr const &cond);
    /// Boolean "word != 0", unwrapping bool_to_word shapes.
    Expr is_nonzero(Expr const &word);

    using Assignment = std::map<std::string, u256>;

    /// Evaluates under an assignment; unassigned variables read as 0.
    /// Boolean terms evaluate to 0 or 1.
    u256 evaluate(Expr const &e, Assignment const &assignment);

    void collect_vars(Expr const &e, std::map<std::string, unsigned> &out);
}
