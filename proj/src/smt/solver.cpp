#include <reentry/smt/solver.hpp>

#include <z3++.h>

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace reentry::smt
{
    using sym::Expr;
    using sym::Op;

    char const *to_string(Status s)
    {
        switch (s)
        {
        case Status::Sat: return "sat";
        case Status::Unsat: return "unsat";
        case Status::Unknown: return "unknown";
        }
        return "?";
    }

    namespace
    {
        std::string to_decimal(sym::u256 const &v)
        {
            return v.str();
        }

        // Constant of any width up to 256 bits.
        z3::expr bv_const(z3::context &ctx, sym::u256 const &v, unsigned w)
        {
            return ctx.bv_val(to_decimal(v).c_str(), w);
        }

        bool has_nonlinear(std::span<const Expr> constraints)
        {
            std::unordered_set<sym::Node const *> seen;
            std::vector<Expr> work(constraints.begin(), constraints.end());
            while (!work.empty())
            {
                Expr cur = std::move(work.back());
                work.pop_back();
                if (!seen.insert(cur.id()).second)
                    continue;
                switch (cur.op())
                {
                case Op::Mul:
                case Op::UDiv:
                case Op::SDiv:
                case Op::URem:
                case Op::SRem:
                    if (!cur.arg(0).is_const() && !cur.arg(1).is_const())
                        return true;
                    break;
                default:
                    break;
                }
                for (auto const &a : cur.args())
                    work.push_back(a);
            }
            return false;
        }

        void collect_constants(Expr const &e, std::set<sym::u256> &out, std::unordered_set<sym::Node const *> &seen)
        {
            if (!seen.insert(e.id()).second || out.size() > 48)
                return;
            if (e.op() == Op::Const)
            {
                out.insert(e.value());
                out.insert(e.value() + 1);
                out.insert(e.value() - 1);
            }
            for (auto const &a : e.args())
                collect_constants(a, out, seen);
        }

        /// Greedy local search over a few interesting values per variable.
        /// Bit-blasting wide arithmetic is slow even when a tiny model
        /// exists; the evaluator confirms any hit. `budget` caps the number
        /// of candidate evaluations.
        std::optional<Model> probe_model(std::span<const Expr> constraints, unsigned budget)
        {
            std::map<std::string, unsigned> all;
            std::vector<std::vector<std::pair<std::string, unsigned>>> vars_of;
            std::set<sym::u256> pool{0, 1, 2, sym::u256(1) << 128, sym::u256(1) << 255, ~sym::u256(0)};
            std::unordered_set<sym::Node const *> seen;
            for (auto const &c : constraints)
            {
                std::map<std::string, unsigned> v;
                sym::collect_vars(c, v);
                all.insert(v.begin(), v.end());
                vars_of.emplace_back(v.begin(), v.end());
                collect_constants(c, pool, seen);
            }
            Model model;
            for (auto const &[name, width] : all)
                model[name] = 0;
            std::vector<std::size_t> failed;
            auto failing = [&] {
                failed.clear();
                for (std::size_t k = 0; k < constraints.size(); ++k)
                    if (sym::evaluate(constraints[k], model) != 1)
                        failed.push_back(k);
                return failed.size();
            };
            auto count_failing = [&] {
                std::size_t n = 0;
                for (auto const &c : constraints)
                    n += sym::evaluate(c, model) != 1;
                return n;
            };
            std::size_t current = failing();
            std::vector<std::string> recent; // tabu list against cycling
            for (unsigned step = 0; current > 0 && budget > 0 && step < 200; ++step)
            {
                // rotate the focus over the failing constraints
                std::size_t focus = failed[step % failed.size()];
                bool all_tabu = true;
                for (auto const &[name, width] : vars_of[focus])
                    all_tabu = all_tabu && std::find(recent.begin(), recent.end(), name) != recent.end();

                // moves that satisfy the focus constraint win; then fewer failures
                std::string best_var;
                sym::u256 best_value;
                std::pair<bool, std::size_t> best{true, constraints.size() + 1};
                for (auto const &[name, width] : vars_of[focus])
                {
                    if (!all_tabu && std::find(recent.begin(), recent.end(), name) != recent.end())
                        continue;
                    sym::u256 saved = model[name];
                    sym::u256 mask = sym::mask_of(width);
                    for (auto const &cand : pool)
                    {
                        sym::u256 v = cand & mask;
                        if (v == saved || budget == 0)
                            continue;
                        --budget;
                        model[name] = v;
                        std::pair<bool, std::size_t> score{sym::evaluate(constraints[focus], model) != 1,
                                                           count_failing()};
                        if (score < best)
                        {
                            best = score;
                            best_var = name;
                            best_value = v;
                        }
                    }
                    model[name] = saved;
                }
                if (best_var.empty())
                    return std::nullopt;
                model[best_var] = best_value;
                recent.push_back(best_var);
                if (recent.size() > 2)
                    recent.erase(recent.begin());
                current = failing();
            }
            if (current != 0)
                return std::nullopt;
            return model;
        }
    }

    struct Solver::Impl
    {
        z3::context ctx;
        std::unordered_map<sym::Node const *, z3::expr> cache;
        // nonlinear operations replaced by uninterpreted functions
        std::unordered_map<sym::Node const *, z3::expr> abstract_cache;
        std::vector<Expr> keep_alive; // pins cached node addresses
        std::unordered_map<std::string, z3::expr> vars;

        z3::expr translate(Expr const &e, bool abstract = false)
        {
            auto &c = abstract ? abstract_cache : cache;
            auto it = c.find(e.id());
            if (it != c.end())
                return it->second;
            z3::expr r = build(e, abstract);
            c.emplace(e.id(), r);
            keep_alive.push_back(e);
            return r;
        }

        z3::expr uninterpreted(Expr const &e, bool abstract)
        {
            char const *op = e.op() == Op::Mul    ? "mul"
                             : e.op() == Op::UDiv ? "udiv"
                             : e.op() == Op::SDiv ? "sdiv"
                             : e.op() == Op::URem ? "urem"
                                                  : "srem";
            std::string name = op + std::to_string(e.width());
            z3::sort bv = ctx.bv_sort(e.width());
            z3::func_decl f = ctx.function(name.c_str(), bv, bv, bv);
            return f(translate(e.arg(0), abstract), translate(e.arg(1), abstract));
        }

        z3::expr var(Expr const &e)
        {
            auto it = vars.find(e.name());
            if (it != vars.end())
                return it->second;
            z3::expr v = ctx.bv_const(e.name().c_str(), e.width());
            vars.emplace(e.name(), v);
            return v;
        }

        z3::expr build(Expr const &e, bool abstract)
        {
            auto a = [&](std::size_t i) { return translate(e.arg(i), abstract); };
            unsigned w = e.width();
            bool nonlinear = !e.args().empty() && e.args().size() == 2 && !e.arg(0).is_const() && !e.arg(1).is_const();
            switch (e.op())
            {
            case Op::Const: return bv_const(ctx, e.value(), w);
            case Op::BoolConst: return ctx.bool_val(e.is_true());
            case Op::Var: return var(e);
            case Op::Add: return a(0) + a(1);
            case Op::Sub: return a(0) - a(1);
            case Op::Mul:
                if (abstract && nonlinear)
                    return uninterpreted(e, abstract);
                return a(0) * a(1);
            case Op::UDiv:
            case Op::SDiv:
            case Op::URem:
            case Op::SRem:
            {
                if (abstract && nonlinear)
                    return uninterpreted(e, abstract);
                z3::expr x = a(0), y = a(1);
                z3::expr zero = ctx.bv_val(0, w);
                z3::expr q = e.op() == Op::UDiv   ? z3::udiv(x, y)
                             : e.op() == Op::SDiv ? x / y
                             : e.op() == Op::URem ? z3::urem(x, y)
                                                  : z3::srem(x, y);
                return z3::ite(y == zero, zero, q);
            }
            case Op::And: return a(0) & a(1);
            case Op::Or: return a(0) | a(1);
            case Op::Xor: return a(0) ^ a(1);
            case Op::Not: return ~a(0);
            case Op::Shl: return z3::shl(a(0), a(1));
            case Op::LShr: return z3::lshr(a(0), a(1));
            case Op::AShr: return z3::ashr(a(0), a(1));
            case Op::Extract: return a(0).extract(e.hi(), e.lo());
            case Op::Concat:
            {
                z3::expr r = a(0);
                for (std::size_t i = 1; i < e.args().size(); ++i)
                    r = z3::concat(r, a(i));
                return r;
            }
            case Op::SExt: return z3::sext(a(0), w - e.arg(0).width());
            case Op::Ite: return z3::ite(a(0), a(1), a(2));
            case Op::Eq: return a(0) == a(1);
            case Op::Ult: return z3::ult(a(0), a(1));
            case Op::Ule: return z3::ule(a(0), a(1));
            case Op::Slt: return z3::slt(a(0), a(1));
            case Op::Sle: return z3::sle(a(0), a(1));
            case Op::LNot: return !a(0);
            case Op::LAnd: return a(0) && a(1);
            case Op::LOr: return a(0) || a(1);
            }
            throw std::logic_error("untranslatable expression");
        }

        void trim()
        {
            // bounded cache: start over rather than grow without limit
            if (keep_alive.size() > 500000)
            {
                cache.clear();
                abstract_cache.clear();
                keep_alive.clear();
            }
        }

        /// Unsat here implies unsat of the exact query; Sat means nothing.
        Status run_abstract(std::span<const Expr> constraints, std::chrono::milliseconds timeout)
        {
            trim();
            z3::solver s(ctx, "QF_UFBV");
            z3::params p(ctx);
            p.set("timeout", static_cast<unsigned>(timeout.count()));
            s.set(p);
            for (auto const &c : constraints)
                s.add(translate(c, true));
            switch (s.check())
            {
            case z3::unsat: return Status::Unsat;
            case z3::sat: return Status::Sat;
            default: return Status::Unknown;
            }
        }

        Result run(std::span<const Expr> constraints, bool want_model, std::chrono::milliseconds timeout)
        {
            trim();
            z3::solver s(ctx, "QF_BV");
            z3::params p(ctx);
            p.set("timeout", static_cast<unsigned>(timeout.count()));
            s.set(p);
            for (auto const &c : constraints)
                s.add(translate(c));
            Result r;
            switch (s.check())
            {
            case z3::unsat:
                r.status = Status::Unsat;
                return r;
            case z3::unknown:
                r.status = Status::Unknown;
                r.reason = s.reason_unknown();
                return r;
            case z3::sat:
                r.status = Status::Sat;
                break;
            }
            if (!want_model)
                return r;
            std::map<std::string, unsigned> used;
            for (auto const &c : constraints)
                sym::collect_vars(c, used);
            z3::model m = s.get_model();
            Model model;
            for (auto const &[name, width] : used)
            {
                z3::expr v = m.eval(vars.at(name), true);
                model[name] = sym::u256(v.get_decimal_string(0));
            }
            for (auto const &c : constraints)
                if (sym::evaluate(c, model) != 1)
                    throw ModelMismatch("model does not satisfy " + c.to_string());
            r.model = std::move(model);
            return r;
        }
    };

    Solver::Solver(std::chrono::milliseconds timeout) : impl_(std::make_unique<Impl>()), timeout_(timeout)
    {
    }

    Solver::~Solver() = default;

    Result Solver::check_sat(std::span<const Expr> constraints, bool want_model,
                             std::optional<std::chrono::milliseconds> timeout)
    {
        auto start = std::chrono::steady_clock::now();
        ++stats_.queries;
        Result r;
        bool trivial = true;
        for (auto const &c : constraints)
        {
            if (c.is_false())
            {
                r.status = Status::Unsat;
                break;
            }
            if (!c.is_true())
                trivial = false;
        }
        if (r.status != Status::Unsat)
        {
            if (trivial)
            {
                r.status = Status::Sat;
                if (want_model)
                    r.model = Model{};
            }
            else if (auto m = probe_model(constraints, has_nonlinear(constraints) ? 4000 : 1500))
            {
                r.status = Status::Sat;
                if (want_model)
                    r.model = std::move(*m);
                trivial = false;
                ++stats_.probed;
            }
            else
            {
                r = impl_->run(constraints, want_model, timeout.value_or(timeout_));
                trivial = false;
            }
        }
        if (trivial)
            ++stats_.trivial;
        switch (r.status)
        {
        case Status::Sat: ++stats_.sat; break;
        case Status::Unsat: ++stats_.unsat; break;
        case Status::Unknown: ++stats_.unknown; break;
        }
        stats_.time += std::chrono::steady_clock::now() - start;
        return r;
    }

    Result Solver::check_sat(sym::PathCondition const &pc, bool want_model,
                             std::optional<std::chrono::milliseconds> timeout)
    {
        auto exprs = pc.exprs();
        auto r = check_sat(exprs, want_model, timeout);
        if (r.status == Status::Sat)
        {
            auto &bucket = sat_paths_[pc.digest()];
            if (bucket.size() < 4)
                bucket.push_back(pc);
        }
        return r;
    }

    namespace
    {
        std::vector<Expr> distinct_terms(std::vector<Expr> v)
        {
            auto by_hash = [](Expr const &x, Expr const &y) { return x.hash() < y.hash(); };
            std::sort(v.begin(), v.end(), by_hash);
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v;
        }

        bool same_conjuncts(sym::PathCondition const &c, sym::PathCondition const &i)
        {
            return distinct_terms(c.exprs()) == distinct_terms(i.exprs());
        }

        using Part = std::pair<std::vector<Expr>, std::vector<Expr>>;

        // Groups the conjuncts of both sides by shared variables.
        std::vector<Part> split_independent(std::vector<Expr> const &a, std::vector<Expr> const &b)
        {
            std::map<std::string, std::string> parent;
            auto find = [&](std::string x) {
                while (parent[x] != x)
                    x = parent[x] = parent[parent[x]];
                return x;
            };
            std::vector<std::map<std::string, unsigned>> vars_a, vars_b;
            auto scan = [&](std::vector<Expr> const &side, auto &out) {
                for (auto const &e : side)
                {
                    std::map<std::string, unsigned> v;
                    sym::collect_vars(e, v);
                    for (auto const &[name, width] : v)
                        parent.try_emplace(name, name);
                    for (auto const &[name, width] : v)
                        parent[find(name)] = find(v.begin()->first);
                    out.push_back(std::move(v));
                }
            };
            scan(a, vars_a);
            scan(b, vars_b);
            std::map<std::string, Part> parts;
            for (std::size_t k = 0; k < a.size(); ++k)
                parts[vars_a[k].empty() ? "" : find(vars_a[k].begin()->first)].first.push_back(a[k]);
            for (std::size_t k = 0; k < b.size(); ++k)
                parts[vars_b[k].empty() ? "" : find(vars_b[k].begin()->first)].second.push_back(b[k]);
            std::vector<Part> out;
            for (auto &[root, part] : parts)
                out.push_back(std::move(part));
            return out;
        }
    }

    std::optional<Model> Solver::probe_distinguish(std::vector<Expr> const &c, std::vector<Expr> const &i)
    {
        auto by_hash = [](Expr const &x, Expr const &y) { return x.hash() < y.hash(); };
        for (int side = 0; side < 2; ++side)
        {
            auto const &keep = side == 0 ? c : i;
            auto const &drop = side == 0 ? i : c;
            // a model of one side often already falsifies the other
            if (auto m = probe_model(keep, 400); m && sym::evaluate(sym::land(drop), *m) == 0)
                return m;
            // otherwise try to break one conjunct the other side lacks
            auto have = distinct_terms(keep);
            for (auto const &d : distinct_terms(drop))
            {
                if (std::binary_search(have.begin(), have.end(), d, by_hash))
                    continue;
                auto attempt = keep;
                attempt.push_back(sym::lnot(d));
                if (auto m = probe_model(attempt, 400))
                    return m;
            }
        }
        return std::nullopt;
    }

    Result Solver::distinguish_terms(std::vector<Expr> const &c, std::vector<Expr> const &i)
    {
        // c without i, then i without c. Cheap local search on both sides
        // comes before any backend query.
        if (auto m = probe_distinguish(c, i))
        {
            ++stats_.queries;
            ++stats_.sat;
            ++stats_.probed;
            Result r;
            r.status = Status::Sat;
            r.model = std::move(*m);
            return r;
        }
        std::optional<Result> undecided;
        for (int side = 0; side < 2; ++side)
        {
            auto q = side == 0 ? c : i;
            q.push_back(sym::lnot(sym::land(side == 0 ? i : c)));
            Result r = check_sat(q, true);
            if (r.status == Status::Sat)
                return r;
            if (r.status == Status::Unknown)
                undecided = r;
        }
        if (undecided)
            return *undecided;
        Result r;
        r.status = Status::Unsat;
        return r;
    }

    Result Solver::distinguish(sym::PathCondition const &c, sym::PathCondition const &i)
    {
        return distinguish_terms(c.exprs(), i.exprs());
    }

    bool Solver::abstractly_equal(std::vector<Expr> const &c, std::vector<Expr> const &i)
    {
        Expr ce = sym::land(c);
        Expr ie = sym::land(i);
        std::vector<Expr> differ{sym::lor(sym::land(ce, sym::lnot(ie)), sym::land(sym::lnot(ce), ie))};
        if (!has_nonlinear(differ))
            return false;
        // equal up to the meaning of the nonlinear operators
        ++stats_.queries;
        auto start = std::chrono::steady_clock::now();
        Status s = impl_->run_abstract(differ, std::min(timeout_, std::chrono::milliseconds(10000)));
        stats_.time += std::chrono::steady_clock::now() - start;
        if (s != Status::Unsat)
            return false;
        ++stats_.unsat;
        ++stats_.abstracted;
        return true;
    }

    bool Solver::equivalent_terms(std::vector<Expr> const &c, std::vector<Expr> const &i)
    {
        if (probe_distinguish(c, i))
        {
            ++stats_.probed;
            return false;
        }
        if (abstractly_equal(c, i))
            return true;
        Result r = distinguish_terms(c, i);
        if (r.status == Status::Unknown)
            throw Indeterminate("equivalence undecided: " + r.reason);
        return r.status == Status::Unsat;
    }

    bool Solver::known_sat(sym::PathCondition const &pc)
    {
        auto it = sat_paths_.find(pc.digest());
        if (it != sat_paths_.end())
            for (auto const &known : it->second)
                if (known.exprs() == pc.exprs())
                    return true;
        if (check_sat(pc).status != Status::Sat)
            return false;
        return true;
    }

    bool Solver::check_equivalence(sym::PathCondition const &c, sym::PathCondition const &i)
    {
        if ((c.digest() == i.digest() && c.exprs() == i.exprs()) || same_conjuncts(c, i))
        {
            ++stats_.trivial;
            return true;
        }
        auto ce = c.exprs(), ie = i.exprs();
        auto parts = split_independent(ce, ie);
        // With both sides satisfiable, c and i agree iff every group of
        // conjuncts over disjoint variables agrees on its own.
        if (parts.size() > 1 && known_sat(c) && known_sat(i))
        {
            for (auto const &[a, b] : parts)
            {
                auto da = distinct_terms(a), db = distinct_terms(b);
                if (da == db)
                    continue;
                if (!equivalent_terms(da, db))
                    return false;
            }
            return true;
        }
        return equivalent_terms(ce, ie);
    }
}
