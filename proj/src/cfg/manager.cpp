#include <reentry/cfg/manager.hpp>

#include <set>
#include <sstream>

namespace reentry::cfg
{
    using sym::Expr;

    CfgManager::CfgManager(smt::Solver &solver, unsigned loop_bound, bool record)
        : solver_(solver), loop_bound_(loop_bound), record_(record)
    {
    }

    void CfgManager::seal(BasicBlock &block, EndState state)
    {
        if (block.end_state != EndState::Open)
            throw DoubleSeal("block " + std::to_string(block.id) + " sealed twice");
        if (state == EndState::Open)
            throw std::logic_error("sealing with Open");
        block.end_state = state;
        ++stats_.blocks;
        if (!record_)
            return;
        sym::BlockRecord r;
        r.id = block.id;
        r.contract = block.dummy ? "attacker" : block.contract;
        r.start_pc = block.start_pc;
        r.end_pc = block.end_pc;
        r.instruction_count = block.instruction_count;
        r.end_state = state;
        r.flags = block.flags;
        r.call_depth = block.calls.size();
        r.path_size = block.path.size();
        for (auto const &c : block.path.constraints())
            if (c.origin == sym::ConstraintOrigin::BalancePositivity)
                ++r.positivity;
        r.tx = block.machine.tx;
        r.dummy = block.dummy;
        r.note = block.note;
        ecfg_.add_block(std::move(r));
    }

    BasicBlock CfgManager::make_successor(BasicBlock const &from, EdgeKind kind)
    {
        if (from.end_state == EndState::Open)
            throw std::logic_error("successor of an open block");
        BasicBlock next;
        next.id = next_id();
        next.flags = from.flags;
        next.reentry_budget = from.reentry_budget;
        if (record_)
            ecfg_.add_edge(from.id, next.id, kind);
        return next;
    }

    BasicBlock CfgManager::successor(BasicBlock &&from, EdgeKind kind)
    {
        BasicBlock next = make_successor(from, kind);
        next.machine = std::move(from.machine);
        next.world = std::move(from.world);
        next.path = std::move(from.path);
        next.calls = std::move(from.calls);
        next.fresh_counts = std::move(from.fresh_counts);
        next.contract = next.machine.active_contract;
        next.start_pc = next.end_pc = next.machine.pc;
        return next;
    }

    BasicBlock CfgManager::fork(BasicBlock const &from, EdgeKind kind)
    {
        BasicBlock next = make_successor(from, kind);
        next.machine = from.machine;
        next.world = from.world;
        next.path = from.path;
        next.calls = from.calls;
        next.fresh_counts = from.fresh_counts;
        next.contract = next.machine.active_contract;
        next.start_pc = next.end_pc = next.machine.pc;
        return next;
    }

    std::optional<BasicBlock> CfgManager::jump_to(BasicBlock &&from, std::uint64_t target)
    {
        from.machine.pc = target;
        BasicBlock next = successor(std::move(from), EdgeKind::Jump);
        unsigned visits = ++next.machine.jump_visits[target];
        if (visits > loop_bound_ + 1)
        {
            ++stats_.loop_bounded;
            next.note = "loop bound";
            seal(next, EndState::LoopBound);
            return std::nullopt;
        }
        return next;
    }

    void CfgManager::branch_on_jumpi(BasicBlock &&block, std::uint64_t target, bool target_valid, Expr const &cond)
    {
        seal(block, EndState::Continued);
        std::uint64_t fall_pc = block.machine.pc + 1;

        bool take = !cond.is_false() && target_valid;
        bool fall = !cond.is_true();
        if (!cond.is_const())
        {
            ++stats_.branches;
            // fall-through side first; if it is infeasible the taken side
            // must be feasible (the parent path is)
            sym::PathCondition not_taken = block.path;
            not_taken.add(sym::lnot(cond), sym::ConstraintOrigin::Branch);
            auto r = solver_.check_sat(not_taken);
            if (r.status == smt::Status::Unknown)
                ++stats_.unknown_branches;
            if (r.status == smt::Status::Unsat)
            {
                fall = false;
                ++stats_.pruned;
            }
            else if (take)
            {
                sym::PathCondition taken = block.path;
                taken.add(cond, sym::ConstraintOrigin::Branch);
                auto rt = solver_.check_sat(taken);
                if (rt.status == smt::Status::Unknown)
                    ++stats_.unknown_branches;
                if (rt.status == smt::Status::Unsat)
                {
                    take = false;
                    ++stats_.pruned;
                }
            }
        }

        Expr taken_cond = cond;
        Expr fall_cond = sym::lnot(cond);
        if (take && fall)
        {
            BasicBlock jumped = fork(block, EdgeKind::Jump);
            // fork recorded the edge; undo the pc copy and account the landing
            jumped.machine.pc = target;
            jumped.start_pc = jumped.end_pc = target;
            jumped.path.add(taken_cond, sym::ConstraintOrigin::Branch);
            unsigned visits = ++jumped.machine.jump_visits[target];
            if (visits > loop_bound_ + 1)
            {
                ++stats_.loop_bounded;
                jumped.note = "loop bound";
                seal(jumped, EndState::LoopBound);
            }
            else
                push(std::move(jumped));
        }
        else if (take)
        {
            block.path.add(taken_cond, sym::ConstraintOrigin::Branch);
            if (auto next = jump_to(std::move(block), target))
                push(std::move(*next));
            return;
        }
        if (fall)
        {
            block.path.add(fall_cond, sym::ConstraintOrigin::Branch);
            block.machine.pc = fall_pc;
            push(successor(std::move(block), EdgeKind::Fallthrough));
        }
    }

    void CfgManager::push(BasicBlock &&block)
    {
        stack_.push_back(std::move(block));
    }

    std::optional<BasicBlock> CfgManager::pop()
    {
        if (stack_.empty())
            return std::nullopt;
        BasicBlock b = std::move(stack_.back());
        stack_.pop_back();
        return b;
    }

    namespace
    {
        std::string escape(std::string const &s)
        {
            std::string out;
            for (char c : s)
            {
                if (c == '"' || c == '\\')
                    out += '\\';
                out += c;
            }
            return out;
        }

        std::string short_contract(std::string const &key)
        {
            if (key.size() > 12)
                return key.substr(0, 8) + ".." + key.substr(key.size() - 4);
            return key;
        }
    }

    std::string export_dot(sym::Ecfg const &graph, std::string const &title)
    {
        std::set<BlockId> red, green;
        for (auto const &e : graph.edges())
        {
            if (e.kind == EdgeKind::CreateEnter || e.kind == EdgeKind::CallEnter)
                red.insert(e.from);
            if (e.kind == EdgeKind::CreateReturn || e.kind == EdgeKind::CallReturn)
                green.insert(e.to);
        }
        std::ostringstream os;
        os << "digraph \"" << escape(title) << "\" {\n";
        os << "  node [shape=box, fontname=\"monospace\", fontsize=10];\n";
        for (auto const &b : graph.blocks())
        {
            os << "  b" << b.id << " [label=\"#" << b.id << " " << escape(short_contract(b.contract));
            if (!b.dummy)
                os << "\\npc " << b.start_pc << "-" << b.end_pc;
            os << "\\n" << sym::to_string(b.end_state) << " tx" << b.tx << "\"";
            if (red.contains(b.id))
                os << ", style=filled, fillcolor=\"#f4a6a6\"";
            else if (green.contains(b.id))
                os << ", style=filled, fillcolor=\"#a6e3a6\"";
            if (b.dummy)
                os << ", shape=ellipse";
            os << "];\n";
        }
        for (auto const &e : graph.edges())
        {
            // edges to blocks that were never sealed (exploration cut short)
            // still point at a placeholder node
            if (!graph.find(e.to))
                os << "  b" << e.to << " [label=\"#" << e.to << " (unexplored)\", style=dashed];\n";
            os << "  b" << e.from << " -> b" << e.to << " [label=\"" << sym::to_string(e.kind) << "\"];\n";
        }
        os << "}\n";
        return os.str();
    }
}
