#pragma once

#include <reentry/sym/expr.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace reentry::sym
{
    /// Where a constraint came from. Reports and the equivalence check can
    /// tell branch decisions apart from bookkeeping assumptions.
    enum class ConstraintOrigin
    {
        Entry,             // selects the function a transaction enters
        Branch,            // JUMPI decision
        Concretization,    // symbolic operand pinned to a model value
        BalancePositivity, // final balances are non-negative
    };

    char const *to_string(ConstraintOrigin origin);

    struct Constraint
    {
        Expr expr;
        ConstraintOrigin origin = ConstraintOrigin::Branch;
    };

    /// Append-only conjunction of boolean constraints. Copies share their
    /// common prefix, so forking a path is O(1).
    class PathCondition
    {
    public:
        /// Appends a constraint; a literal `true` is dropped.
        void add(Expr const &constraint, ConstraintOrigin origin);

        std::size_t size() const { return head_ ? head_->size : 0; }
        bool empty() const { return size() == 0; }

        /// Oldest first.
        std::vector<Constraint> constraints() const;
        std::vector<Expr> exprs() const;

        /// Conjunction as a single term (`true` when empty).
        Expr conjunction() const;

        /// True when `other` was obtained from this condition by appending.
        bool is_prefix_of(PathCondition const &other) const;

        /// Order-sensitive digest of the constraint terms.
        std::uint64_t digest() const { return head_ ? head_->digest : 0; }

        bool has_false() const;

        std::string to_string() const;

    private:
        struct Cell
        {
            Constraint constraint;
            std::shared_ptr<const Cell> parent;
            std::size_t size = 0;
            std::uint64_t digest = 0;
        };
        std::shared_ptr<const Cell> head_;
    };
}
