#include <reentry/sym/path_condition.hpp>

#include <algorithm>
#include <stdexcept>

namespace reentry::sym
{
    char const *to_string(ConstraintOrigin origin)
    {
        switch (origin)
        {
        case ConstraintOrigin::Entry: return "entry";
        case ConstraintOrigin::Branch: return "branch";
        case ConstraintOrigin::Concretization: return "concretization";
        case ConstraintOrigin::BalancePositivity: return "balance";
        }
        return "?";
    }

    void PathCondition::add(Expr const &constraint, ConstraintOrigin origin)
    {
        if (!constraint || !constraint.is_bool())
            throw std::logic_error("path constraint must be boolean");
        if (constraint.is_true())
            return;
        auto cell = std::make_shared<Cell>();
        cell->constraint = {constraint, origin};
        cell->parent = head_;
        cell->size = size() + 1;
        cell->digest = (digest() * 0x100000001b3ULL) ^ constraint.hash();
        head_ = std::move(cell);
    }

    std::vector<Constraint> PathCondition::constraints() const
    {
        std::vector<Constraint> out;
        out.reserve(size());
        for (auto c = head_.get(); c; c = c->parent.get())
            out.push_back(c->constraint);
        std::reverse(out.begin(), out.end());
        return out;
    }

    std::vector<Expr> PathCondition::exprs() const
    {
        std::vector<Expr> out;
        out.reserve(size());
        for (auto c = head_.get(); c; c = c->parent.get())
            out.push_back(c->constraint.expr);
        std::reverse(out.begin(), out.end());
        return out;
    }

    Expr PathCondition::conjunction() const
    {
        auto es = exprs();
        return land(es);
    }

    bool PathCondition::is_prefix_of(PathCondition const &other) const
    {
        if (!head_)
            return true;
        for (auto c = other.head_.get(); c; c = c->parent.get())
        {
            if (c == head_.get())
                return true;
            if (c->size < size())
                return false;
        }
        return false;
    }

    bool PathCondition::has_false() const
    {
        for (auto c = head_.get(); c; c = c->parent.get())
            if (c->constraint.expr.is_false())
                return true;
        return false;
    }

    std::string PathCondition::to_string() const
    {
        std::string out;
        for (auto const &c : constraints())
        {
            out += "[";
            out += sym::to_string(c.origin);
            out += "] ";
            out += c.expr.to_string();
            out += "\n";
        }
        return out;
    }
}
