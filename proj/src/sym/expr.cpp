#include <reentry/sym/expr.hpp>

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace reentry::sym
{
    namespace
    {
        std::uint64_t mix(std::uint64_t h, std::uint64_t v)
        {
            // splitmix64 finalizer over the running state
            std::uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }

        std::uint64_t hash_node(Node const &n)
        {
            std::uint64_t h = mix(0x5157, static_cast<std::uint64_t>(n.op));
            h = mix(h, n.width);
            h = mix(h, (std::uint64_t{n.hi} << 32) | n.lo);
            if (n.op == Op::Const || n.op == Op::BoolConst)
            {
                for (int i = 0; i < 4; ++i)
                    h = mix(h, evm::low64(n.value >> (64 * i)));
            }
            for (char c : n.name)
                h = mix(h, static_cast<unsigned char>(c));
            for (auto const &a : n.args)
                h = mix(h, a.hash());
            return h;
        }

        void require(bool ok, char const *what)
        {
            if (!ok)
                throw std::logic_error(std::string("expression sort mismatch: ") + what);
        }

        bool same_width(Expr const &a, Expr const &b)
        {
            return !a.is_bool() && !b.is_bool() && a.width() == b.width();
        }

        bool is_neg(u256 const &x, unsigned w)
        {
            return ((x >> (w - 1)) & 1) != 0;
        }

        u256 negate(u256 const &x, unsigned w)
        {
            return (~x + 1) & mask_of(w);
        }

        u256 abs_of(u256 const &x, unsigned w)
        {
            return is_neg(x, w) ? negate(x, w) : x;
        }

        u256 fold_sdiv(u256 const &a, u256 const &b, unsigned w)
        {
            if (b == 0)
                return 0;
            u256 q = abs_of(a, w) / abs_of(b, w);
            return is_neg(a, w) != is_neg(b, w) ? negate(q, w) : (q & mask_of(w));
        }

        u256 fold_srem(u256 const &a, u256 const &b, unsigned w)
        {
            if (b == 0)
                return 0;
            u256 r = abs_of(a, w) % abs_of(b, w);
            return is_neg(a, w) ? negate(r, w) : r;
        }

        u256 fold_shl(u256 const &v, u256 const &s, unsigned w)
        {
            if (s >= w)
                return 0;
            return (v << static_cast<unsigned>(s)) & mask_of(w);
        }

        u256 fold_lshr(u256 const &v, u256 const &s, unsigned w)
        {
            if (s >= w)
                return 0;
            return v >> static_cast<unsigned>(s);
        }

        u256 fold_ashr(u256 const &v, u256 const &s, unsigned w)
        {
            bool neg = is_neg(v, w);
            if (s >= w)
                return neg ? mask_of(w) : u256{0};
            auto k = static_cast<unsigned>(s);
            u256 r = v >> k;
            if (neg && k > 0)
                r |= (mask_of(k) << (w - k)) & mask_of(w);
            return r;
        }

        bool fold_slt(u256 const &a, u256 const &b, unsigned w)
        {
            bool na = is_neg(a, w), nb = is_neg(b, w);
            if (na != nb)
                return na;
            return a < b;
        }

        u256 fold_sext(u256 const &v, unsigned from, unsigned to)
        {
            if (!is_neg(v, from))
                return v;
            return v | (mask_of(to) & ~mask_of(from));
        }

        // Exponent k when v == 2^k, else -1.
        int log2_exact(u256 const &v)
        {
            if (v == 0 || (v & (v - 1)) != 0)
                return -1;
            return static_cast<int>(boost::multiprecision::msb(v));
        }

        Expr cst(u256 const &v, unsigned w)
        {
            return Expr::constant(v, w);
        }

        Expr node(Op op, unsigned width, std::vector<Expr> args, unsigned hi = 0, unsigned lo = 0)
        {
            Node n;
            n.op = op;
            n.width = width;
            n.hi = hi;
            n.lo = lo;
            n.args = std::move(args);
            return make_node(std::move(n));
        }

        // Constant operand goes right so the rewrites below only need one shape.
        void canonicalize(Expr &a, Expr &b)
        {
            if (a.is_const() && !b.is_const())
                std::swap(a, b);
        }

        // ite(c, k1, k2) with constant arms.
        bool const_ite(Expr const &e)
        {
            return e.op() == Op::Ite && e.arg(1).is_const() && e.arg(2).is_const();
        }

        bool is_bool_word(Expr const &e)
        {
            return const_ite(e) && e.arg(1).value() == 1 && e.arg(2).value() == 0;
        }

        std::vector<Expr> parts_of(Expr const &e)
        {
            if (e.op() == Op::Concat)
                return {e.args().begin(), e.args().end()};
            return {e};
        }

        // Splits a part list so that a boundary exists at every bit offset in
        // `cuts` (offsets counted from the least significant bit).
        std::vector<Expr> split_parts(std::vector<Expr> const &parts, std::vector<unsigned> const &cuts)
        {
            std::vector<Expr> out;
            unsigned total = 0;
            for (auto const &p : parts)
                total += p.width();
            unsigned top = total;
            for (auto const &p : parts)
            {
                unsigned lo_bit = top - p.width();
                unsigned hi_edge = top;
                std::vector<unsigned> inner;
                for (unsigned c : cuts)
                    if (c > lo_bit && c < hi_edge)
                        inner.push_back(c);
                std::sort(inner.rbegin(), inner.rend());
                unsigned cur = hi_edge;
                for (unsigned c : inner)
                {
                    out.push_back(extract(p, cur - 1 - lo_bit, c - lo_bit));
                    cur = c;
                }
                out.push_back(cur == hi_edge ? p : extract(p, cur - 1 - lo_bit, 0));
                top = lo_bit;
            }
            return out;
        }

        std::vector<unsigned> boundaries(std::vector<Expr> const &parts)
        {
            std::vector<unsigned> cuts;
            unsigned total = 0;
            for (auto const &p : parts)
                total += p.width();
            unsigned top = total;
            for (auto const &p : parts)
            {
                top -= p.width();
                cuts.push_back(top);
            }
            return cuts;
        }

        // a | b (or a ^ b) where, segment by segment, one side is zero.
        Expr merge_disjoint(Expr const &a, Expr const &b, Op op)
        {
            auto pa = parts_of(a), pb = parts_of(b);
            if (pa.size() == 1 && pb.size() == 1)
                return {};
            auto cuts = boundaries(pa);
            auto cb = boundaries(pb);
            cuts.insert(cuts.end(), cb.begin(), cb.end());
            auto sa = split_parts(pa, cuts);
            auto sb = split_parts(pb, cuts);
            if (sa.size() != sb.size())
                return {};
            std::vector<Expr> merged;
            for (std::size_t i = 0; i < sa.size(); ++i)
            {
                if (sa[i].width() != sb[i].width())
                    return {};
                bool za = sa[i].is_const() && sa[i].value() == 0;
                bool zb = sb[i].is_const() && sb[i].value() == 0;
                if (za)
                    merged.push_back(sb[i]);
                else if (zb)
                    merged.push_back(sa[i]);
                else if (sa[i].is_const() && sb[i].is_const())
                    merged.push_back(cst(op == Op::Or ? (sa[i].value() | sb[i].value())
                                                      : (sa[i].value() ^ sb[i].value()),
                                         sa[i].width()));
                else
                    return {};
            }
            return concat(merged);
        }

        // Conjunction of slice equalities for eq(concat(parts), k).
        Expr eq_parts(std::vector<Expr> const &parts, u256 const &k)
        {
            unsigned top = 0;
            for (auto const &p : parts)
                top += p.width();
            Expr result = Expr::boolean(true);
            for (auto const &p : parts)
            {
                top -= p.width();
                u256 slice = (k >> top) & mask_of(p.width());
                result = land(result, eq(p, cst(slice, p.width())));
                if (result.is_false())
                    return result;
            }
            return result;
        }

        std::string op_name(Op op)
        {
            switch (op)
            {
            case Op::Add: return "bvadd";
            case Op::Sub: return "bvsub";
            case Op::Mul: return "bvmul";
            case Op::UDiv: return "evm_udiv";
            case Op::SDiv: return "evm_sdiv";
            case Op::URem: return "evm_urem";
            case Op::SRem: return "evm_srem";
            case Op::And: return "bvand";
            case Op::Or: return "bvor";
            case Op::Xor: return "bvxor";
            case Op::Not: return "bvnot";
            case Op::Shl: return "bvshl";
            case Op::LShr: return "bvlshr";
            case Op::AShr: return "bvashr";
            case Op::Extract: return "extract";
            case Op::Concat: return "concat";
            case Op::SExt: return "sext";
            case Op::Ite: return "ite";
            case Op::Eq: return "=";
            case Op::Ult: return "bvult";
            case Op::Ule: return "bvule";
            case Op::Slt: return "bvslt";
            case Op::Sle: return "bvsle";
            case Op::LNot: return "not";
            case Op::LAnd: return "and";
            case Op::LOr: return "or";
            default: return "?";
            }
        }

        void render(Expr const &e, std::string &out)
        {
            switch (e.op())
            {
            case Op::Const:
                out += evm::to_hex(e.value());
                if (e.width() != 256)
                    out += ":" + std::to_string(e.width());
                return;
            case Op::BoolConst:
                out += e.is_true() ? "true" : "false";
                return;
            case Op::Var:
                out += e.name();
                return;
            default:
                break;
            }
            out += "(";
            out += op_name(e.op());
            if (e.op() == Op::Extract)
                out += " " + std::to_string(e.hi()) + " " + std::to_string(e.lo());
            if (e.op() == Op::SExt)
                out += " " + std::to_string(e.width());
            for (auto const &a : e.args())
            {
                out += " ";
                render(a, out);
            }
            out += ")";
        }

        bool structurally_equal(Node const *a, Node const *b)
        {
            if (a == b)
                return true;
            if (a->hash != b->hash || a->op != b->op || a->width != b->width || a->hi != b->hi ||
                a->lo != b->lo || a->value != b->value || a->name != b->name ||
                a->args.size() != b->args.size())
                return false;
            for (std::size_t i = 0; i < a->args.size(); ++i)
                if (!structurally_equal(a->args[i].id(), b->args[i].id()))
                    return false;
            return true;
        }
    }

    Expr make_node(Node &&n)
    {
        n.hash = hash_node(n);
        Expr e;
        e.node_ = std::make_shared<const Node>(std::move(n));
        return e;
    }

    u256 mask_of(unsigned width)
    {
        if (width >= 256)
            return evm::max_u256();
        return (u256{1} << width) - 1;
    }

    Expr Expr::constant(u256 const &value, unsigned width)
    {
        if (width == 0 || width > 256)
            throw std::logic_error("constant width out of range");
        Node n;
        n.op = Op::Const;
        n.width = width;
        n.value = value & mask_of(width);
        return make_node(std::move(n));
    }

    Expr Expr::var(std::string name, unsigned width)
    {
        if (width == 0 || width > 256)
            throw std::logic_error("variable width out of range");
        Node n;
        n.op = Op::Var;
        n.width = width;
        n.name = std::move(name);
        return make_node(std::move(n));
    }

    Expr Expr::boolean(bool value)
    {
        static Expr const t = [] {
            Node n;
            n.op = Op::BoolConst;
            n.value = 1;
            return make_node(std::move(n));
        }();
        static Expr const f = [] {
            Node n;
            n.op = Op::BoolConst;
            n.value = 0;
            return make_node(std::move(n));
        }();
        return value ? t : f;
    }

    Op Expr::op() const { return node_->op; }
    unsigned Expr::width() const { return node_->width; }

    bool Expr::is_bool() const
    {
        return node_->op >= Op::BoolConst;
    }

    bool Expr::is_const() const
    {
        return node_->op == Op::Const || node_->op == Op::BoolConst;
    }

    bool Expr::is_true() const { return node_->op == Op::BoolConst && node_->value != 0; }
    bool Expr::is_false() const { return node_->op == Op::BoolConst && node_->value == 0; }
    u256 const &Expr::value() const { return node_->value; }
    std::string const &Expr::name() const { return node_->name; }
    unsigned Expr::hi() const { return node_->hi; }
    unsigned Expr::lo() const { return node_->lo; }
    std::span<const Expr> Expr::args() const { return node_->args; }
    Expr const &Expr::arg(std::size_t i) const { return node_->args.at(i); }
    std::uint64_t Expr::hash() const { return node_->hash; }

    std::string Expr::to_string() const
    {
        if (!node_)
            return "<null>";
        std::string out;
        render(*this, out);
        return out;
    }

    bool operator==(Expr const &a, Expr const &b)
    {
        if (!a.node_ || !b.node_)
            return a.node_ == b.node_;
        return structurally_equal(a.node_.get(), b.node_.get());
    }

    Expr add(Expr const &a0, Expr const &b0)
    {
        require(same_width(a0, b0), "add");
        Expr a = a0, b = b0;
        canonicalize(a, b);
        unsigned w = a.width();
        if (a.is_const())
            return cst(a.value() + b.value(), w);
        if (b.is_const())
        {
            if (b.value() == 0)
                return a;
            if (a.op() == Op::Add && a.arg(1).is_const())
                return add(a.arg(0), cst(a.arg(1).value() + b.value(), w));
        }
        return node(Op::Add, w, {a, b});
    }

    Expr sub(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "sub");
        unsigned w = a.width();
        if (a.is_const() && b.is_const())
            return cst(a.value() - b.value(), w);
        if (b.is_const())
            return add(a, cst(negate(b.value(), w), w));
        if (a == b)
            return cst(0, w);
        return node(Op::Sub, w, {a, b});
    }

    Expr mul(Expr const &a0, Expr const &b0)
    {
        require(same_width(a0, b0), "mul");
        Expr a = a0, b = b0;
        canonicalize(a, b);
        unsigned w = a.width();
        if (a.is_const())
            return cst(a.value() * b.value(), w);
        if (b.is_const())
        {
            if (b.value() == 0)
                return b;
            if (b.value() == 1)
                return a;
            int k = log2_exact(b.value());
            if (k > 0)
                return shl(a, cst(static_cast<unsigned>(k), w));
            if (a.op() == Op::Mul && a.arg(1).is_const())
                return mul(a.arg(0), cst(a.arg(1).value() * b.value(), w));
        }
        return node(Op::Mul, w, {a, b});
    }

    Expr udiv(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "udiv");
        unsigned w = a.width();
        if (b.is_const())
        {
            if (b.value() == 0)
                return cst(0, w);
            if (a.is_const())
                return cst(a.value() / b.value(), w);
            if (b.value() == 1)
                return a;
            int k = log2_exact(b.value());
            if (k > 0)
                return lshr(a, cst(static_cast<unsigned>(k), w));
        }
        if (a.is_const() && a.value() == 0)
            return a;
        return node(Op::UDiv, w, {a, b});
    }

    Expr sdiv(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "sdiv");
        unsigned w = a.width();
        if (b.is_const())
        {
            if (a.is_const())
                return cst(fold_sdiv(a.value(), b.value(), w), w);
            if (b.value() == 0)
                return cst(0, w);
            if (b.value() == 1)
                return a;
        }
        if (a.is_const() && a.value() == 0)
            return a;
        return node(Op::SDiv, w, {a, b});
    }

    Expr urem(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "urem");
        unsigned w = a.width();
        if (b.is_const())
        {
            if (b.value() == 0 || b.value() == 1)
                return cst(0, w);
            if (a.is_const())
                return cst(a.value() % b.value(), w);
            int k = log2_exact(b.value());
            if (k > 0)
                return zext(extract(a, static_cast<unsigned>(k) - 1, 0), w);
        }
        if (a.is_const() && a.value() == 0)
            return a;
        return node(Op::URem, w, {a, b});
    }

    Expr srem(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "srem");
        unsigned w = a.width();
        if (b.is_const())
        {
            if (a.is_const())
                return cst(fold_srem(a.value(), b.value(), w), w);
            if (b.value() == 0 || b.value() == 1)
                return cst(0, w);
        }
        if (a.is_const() && a.value() == 0)
            return a;
        return node(Op::SRem, w, {a, b});
    }

    Expr bit_and(Expr const &a0, Expr const &b0)
    {
        require(same_width(a0, b0), "and");
        Expr a = a0, b = b0;
        canonicalize(a, b);
        unsigned w = a.width();
        if (a.is_const())
            return cst(a.value() & b.value(), w);
        if (a == b)
            return a;
        if (is_bool_word(a) && is_bool_word(b))
            return ite(land(a.arg(0), b.arg(0)), cst(1, w), cst(0, w));
        if (b.is_const())
        {
            u256 const &m = b.value();
            if (m == 0)
                return b;
            if (m == mask_of(w))
                return a;
            // contiguous run of ones: keep the selected slice
            auto lo = static_cast<unsigned>(boost::multiprecision::lsb(m));
            auto hi = static_cast<unsigned>(boost::multiprecision::msb(m));
            if (m == (mask_of(hi - lo + 1) << lo))
            {
                std::vector<Expr> parts;
                if (hi + 1 < w)
                    parts.push_back(cst(0, w - 1 - hi));
                parts.push_back(extract(a, hi, lo));
                if (lo > 0)
                    parts.push_back(cst(0, lo));
                return concat(parts);
            }
        }
        return node(Op::And, w, {a, b});
    }

    Expr bit_or(Expr const &a0, Expr const &b0)
    {
        require(same_width(a0, b0), "or");
        Expr a = a0, b = b0;
        canonicalize(a, b);
        unsigned w = a.width();
        if (a.is_const())
            return cst(a.value() | b.value(), w);
        if (a == b)
            return a;
        if (b.is_const())
        {
            if (b.value() == 0)
                return a;
            if (b.value() == mask_of(w))
                return b;
        }
        if (is_bool_word(a) && is_bool_word(b))
            return ite(lor(a.arg(0), b.arg(0)), cst(1, w), cst(0, w));
        if (auto merged = merge_disjoint(a, b, Op::Or))
            return merged;
        return node(Op::Or, w, {a, b});
    }

    Expr bit_xor(Expr const &a0, Expr const &b0)
    {
        require(same_width(a0, b0), "xor");
        Expr a = a0, b = b0;
        canonicalize(a, b);
        unsigned w = a.width();
        if (a.is_const())
            return cst(a.value() ^ b.value(), w);
        if (a == b)
            return cst(0, w);
        if (b.is_const() && b.value() == 0)
            return a;
        if (auto merged = merge_disjoint(a, b, Op::Xor))
            return merged;
        return node(Op::Xor, w, {a, b});
    }

    Expr bit_not(Expr const &a)
    {
        require(!a.is_bool(), "not");
        if (a.is_const())
            return cst(~a.value(), a.width());
        if (a.op() == Op::Not)
            return a.arg(0);
        return node(Op::Not, a.width(), {a});
    }

    Expr shl(Expr const &v, Expr const &s)
    {
        require(same_width(v, s), "shl");
        unsigned w = v.width();
        if (s.is_const())
        {
            if (v.is_const())
                return cst(fold_shl(v.value(), s.value(), w), w);
            if (s.value() >= w)
                return cst(0, w);
            auto k = static_cast<unsigned>(s.value());
            if (k == 0)
                return v;
            std::vector<Expr> parts{extract(v, w - 1 - k, 0), cst(0, k)};
            return concat(parts);
        }
        if (v.is_const() && v.value() == 0)
            return v;
        return node(Op::Shl, w, {v, s});
    }

    Expr lshr(Expr const &v, Expr const &s)
    {
        require(same_width(v, s), "lshr");
        unsigned w = v.width();
        if (s.is_const())
        {
            if (v.is_const())
                return cst(fold_lshr(v.value(), s.value(), w), w);
            if (s.value() >= w)
                return cst(0, w);
            auto k = static_cast<unsigned>(s.value());
            if (k == 0)
                return v;
            std::vector<Expr> parts{cst(0, k), extract(v, w - 1, k)};
            return concat(parts);
        }
        if (v.is_const() && v.value() == 0)
            return v;
        return node(Op::LShr, w, {v, s});
    }

    Expr ashr(Expr const &v, Expr const &s)
    {
        require(same_width(v, s), "ashr");
        unsigned w = v.width();
        if (s.is_const())
        {
            if (v.is_const())
                return cst(fold_ashr(v.value(), s.value(), w), w);
            if (s.value() == 0)
                return v;
            if (s.value() >= w)
                return sext(extract(v, w - 1, w - 1), w);
            auto k = static_cast<unsigned>(s.value());
            return sext(extract(v, w - 1, k), w);
        }
        return node(Op::AShr, w, {v, s});
    }

    Expr extract(Expr const &a, unsigned hi, unsigned lo)
    {
        require(!a.is_bool() && hi >= lo && hi < a.width(), "extract");
        unsigned w = hi - lo + 1;
        if (lo == 0 && hi + 1 == a.width())
            return a;
        if (a.op() == Op::Const)
            return cst(a.value() >> lo, w);
        if (a.op() == Op::Extract)
            return extract(a.arg(0), a.lo() + hi, a.lo() + lo);
        if (a.op() == Op::Concat)
        {
            std::vector<Expr> picked;
            unsigned top = a.width();
            for (auto const &p : a.args())
            {
                unsigned plo = top - p.width();
                unsigned phi = top - 1;
                top = plo;
                if (phi < lo || plo > hi)
                    continue;
                unsigned from = std::min(hi, phi) - plo;
                unsigned to = std::max(lo, plo) - plo;
                picked.push_back(extract(p, from, to));
            }
            return concat(picked);
        }
        if (const_ite(a))
            return ite(a.arg(0), extract(a.arg(1), hi, lo), extract(a.arg(2), hi, lo));
        if (a.op() == Op::SExt)
        {
            unsigned inner = a.arg(0).width();
            if (hi < inner)
                return extract(a.arg(0), hi, lo);
        }
        return node(Op::Extract, w, {a}, hi, lo);
    }

    Expr concat(Expr const &high, Expr const &low)
    {
        std::vector<Expr> parts{high, low};
        return concat(parts);
    }

    Expr concat(std::span<const Expr> input)
    {
        std::vector<Expr> flat;
        for (auto const &p : input)
        {
            require(!p.is_bool(), "concat");
            if (p.op() == Op::Concat)
                flat.insert(flat.end(), p.args().begin(), p.args().end());
            else
                flat.push_back(p);
        }
        if (flat.empty())
            throw std::logic_error("empty concat");
        std::vector<Expr> merged;
        for (auto const &p : flat)
        {
            if (!merged.empty())
            {
                Expr const &last = merged.back();
                if (last.is_const() && p.is_const() && last.width() + p.width() <= 256)
                {
                    merged.back() = cst((last.value() << p.width()) | p.value(), last.width() + p.width());
                    continue;
                }
                if (last.op() == Op::Extract && p.op() == Op::Extract && last.lo() == p.hi() + 1 &&
                    last.arg(0) == p.arg(0))
                {
                    merged.back() = extract(last.arg(0), last.hi(), p.lo());
                    continue;
                }
            }
            merged.push_back(p);
        }
        if (merged.size() == 1)
            return merged.front();
        unsigned w = 0;
        for (auto const &p : merged)
            w += p.width();
        require(w <= 256, "concat width");
        return node(Op::Concat, w, std::move(merged));
    }

    Expr zext(Expr const &a, unsigned width)
    {
        require(!a.is_bool() && width >= a.width() && width <= 256, "zext");
        if (width == a.width())
            return a;
        return concat(cst(0, width - a.width()), a);
    }

    Expr sext(Expr const &a, unsigned width)
    {
        require(!a.is_bool() && width >= a.width() && width <= 256, "sext");
        if (width == a.width())
            return a;
        if (a.is_const())
            return cst(fold_sext(a.value(), a.width(), width), width);
        return node(Op::SExt, width, {a});
    }

    Expr ite(Expr const &c, Expr const &t, Expr const &e)
    {
        require(c.is_bool() && t.is_bool() == e.is_bool() && t.width() == e.width(), "ite");
        if (c.is_true())
            return t;
        if (c.is_false())
            return e;
        if (t == e)
            return t;
        if (c.op() == Op::LNot)
            return ite(c.arg(0), e, t);
        return node(Op::Ite, t.width(), {c, t, e});
    }

    Expr eq(Expr const &a0, Expr const &b0)
    {
        require(same_width(a0, b0), "eq");
        Expr a = a0, b = b0;
        canonicalize(a, b);
        unsigned w = a.width();
        if (a.is_const())
            return Expr::boolean(a.value() == b.value());
        if (a == b)
            return Expr::boolean(true);
        if (b.is_const())
        {
            u256 const &k = b.value();
            if (const_ite(a))
            {
                bool t = a.arg(1).value() == k;
                bool f = a.arg(2).value() == k;
                if (t && f)
                    return Expr::boolean(true);
                if (t)
                    return a.arg(0);
                if (f)
                    return lnot(a.arg(0));
                return Expr::boolean(false);
            }
            if (a.op() == Op::Concat)
                return eq_parts(parts_of(a), k);
            if (a.op() == Op::Add && a.arg(1).is_const())
                return eq(a.arg(0), cst(k - a.arg(1).value(), w));
            if (a.op() == Op::Xor && a.arg(1).is_const())
                return eq(a.arg(0), cst(k ^ a.arg(1).value(), w));
            if (a.op() == Op::Not)
                return eq(a.arg(0), cst(~k, w));
        }
        return node(Op::Eq, 0, {a, b});
    }

    Expr ult(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "ult");
        if (a.is_const() && b.is_const())
            return Expr::boolean(a.value() < b.value());
        if (a == b)
            return Expr::boolean(false);
        if (b.is_const() && b.value() == 0)
            return Expr::boolean(false);
        if (a.is_const() && a.value() == mask_of(a.width()))
            return Expr::boolean(false);
        if (a.is_const() && a.value() == 0)
            return lnot(eq(b, a));
        return node(Op::Ult, 0, {a, b});
    }

    Expr ule(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "ule");
        if (a.is_const() && b.is_const())
            return Expr::boolean(a.value() <= b.value());
        if (a == b)
            return Expr::boolean(true);
        if (a.is_const() && a.value() == 0)
            return Expr::boolean(true);
        if (b.is_const() && b.value() == mask_of(b.width()))
            return Expr::boolean(true);
        return node(Op::Ule, 0, {a, b});
    }

    Expr slt(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "slt");
        if (a.is_const() && b.is_const())
            return Expr::boolean(fold_slt(a.value(), b.value(), a.width()));
        if (a == b)
            return Expr::boolean(false);
        return node(Op::Slt, 0, {a, b});
    }

    Expr sle(Expr const &a, Expr const &b)
    {
        require(same_width(a, b), "sle");
        if (a.is_const() && b.is_const())
            return Expr::boolean(!fold_slt(b.value(), a.value(), a.width()));
        if (a == b)
            return Expr::boolean(true);
        return node(Op::Sle, 0, {a, b});
    }

    Expr lnot(Expr const &a)
    {
        require(a.is_bool(), "lnot");
        if (a.is_const())
            return Expr::boolean(!a.is_true());
        if (a.op() == Op::LNot)
            return a.arg(0);
        return node(Op::LNot, 0, {a});
    }

    Expr land(Expr const &a, Expr const &b)
    {
        require(a.is_bool() && b.is_bool(), "land");
        if (a.is_false() || b.is_false())
            return Expr::boolean(false);
        if (a.is_true())
            return b;
        if (b.is_true())
            return a;
        if (a == b)
            return a;
        if ((a.op() == Op::LNot && a.arg(0) == b) || (b.op() == Op::LNot && b.arg(0) == a))
            return Expr::boolean(false);
        return node(Op::LAnd, 0, {a, b});
    }

    Expr lor(Expr const &a, Expr const &b)
    {
        require(a.is_bool() && b.is_bool(), "lor");
        if (a.is_true() || b.is_true())
            return Expr::boolean(true);
        if (a.is_false())
            return b;
        if (b.is_false())
            return a;
        if (a == b)
            return a;
        if ((a.op() == Op::LNot && a.arg(0) == b) || (b.op() == Op::LNot && b.arg(0) == a))
            return Expr::boolean(true);
        return node(Op::LOr, 0, {a, b});
    }

    Expr land(std::span<const Expr> terms)
    {
        Expr acc = Expr::boolean(true);
        for (auto const &t : terms)
            acc = land(acc, t);
        return acc;
    }

    Expr bool_to_word(Expr const &cond)
    {
        return ite(cond, cst(1, 256), cst(0, 256));
    }

    Expr is_nonzero(Expr const &word)
    {
        return lnot(eq(word, cst(0, word.width())));
    }

    namespace
    {
        struct Evaluator
        {
            Assignment const &assignment;
            std::unordered_map<Node const *, u256> memo;

            u256 run(Expr const &e)
            {
                auto it = memo.find(e.id());
                if (it != memo.end())
                    return it->second;
                u256 r = compute(e);
                memo.emplace(e.id(), r);
                return r;
            }

            u256 compute(Expr const &e)
            {
                unsigned w = e.width();
                auto a = [&](std::size_t i) { return run(e.arg(i)); };
                auto wa = [&](std::size_t i) { return e.arg(i).width(); };
                switch (e.op())
                {
                case Op::Const:
                case Op::BoolConst:
                    return e.value();
                case Op::Var:
                {
                    auto it = assignment.find(e.name());
                    return it == assignment.end() ? u256{0} : (it->second & mask_of(w));
                }
                case Op::Add: return (a(0) + a(1)) & mask_of(w);
                case Op::Sub: return (a(0) - a(1)) & mask_of(w);
                case Op::Mul: return (a(0) * a(1)) & mask_of(w);
                case Op::UDiv:
                {
                    u256 d = a(1);
                    return d == 0 ? u256{0} : a(0) / d;
                }
                case Op::URem:
                {
                    u256 d = a(1);
                    return d == 0 ? u256{0} : a(0) % d;
                }
                case Op::SDiv: return fold_sdiv(a(0), a(1), w);
                case Op::SRem: return fold_srem(a(0), a(1), w);
                case Op::And: return a(0) & a(1);
                case Op::Or: return a(0) | a(1);
                case Op::Xor: return a(0) ^ a(1);
                case Op::Not: return ~a(0) & mask_of(w);
                case Op::Shl: return fold_shl(a(0), a(1), w);
                case Op::LShr: return fold_lshr(a(0), a(1), w);
                case Op::AShr: return fold_ashr(a(0), a(1), w);
                case Op::Extract: return (a(0) >> e.lo()) & mask_of(w);
                case Op::Concat:
                {
                    u256 r = 0;
                    for (std::size_t i = 0; i < e.args().size(); ++i)
                    {
                        // shifting by the full 256 bits is avoided: the first
                        // part starts from r == 0
                        if (i > 0)
                            r <<= wa(i);
                        r |= a(i);
                    }
                    return r;
                }
                case Op::SExt: return fold_sext(a(0), wa(0), w);
                case Op::Ite: return a(0) != 0 ? a(1) : a(2);
                case Op::Eq: return a(0) == a(1) ? 1 : 0;
                case Op::Ult: return a(0) < a(1) ? 1 : 0;
                case Op::Ule: return a(0) <= a(1) ? 1 : 0;
                case Op::Slt: return fold_slt(a(0), a(1), wa(0)) ? 1 : 0;
                case Op::Sle: return fold_slt(a(1), a(0), wa(0)) ? 0 : 1;
                case Op::LNot: return a(0) == 0 ? 1 : 0;
                case Op::LAnd: return (a(0) != 0 && a(1) != 0) ? 1 : 0;
                case Op::LOr: return (a(0) != 0 || a(1) != 0) ? 1 : 0;
                }
                throw std::logic_error("unknown expression kind");
            }
        };
    }

    u256 evaluate(Expr const &e, Assignment const &assignment)
    {
        Evaluator ev{assignment, {}};
        return ev.run(e);
    }

    void collect_vars(Expr const &e, std::map<std::string, unsigned> &out)
    {
        std::unordered_set<Node const *> seen;
        std::vector<Expr> work{e};
        while (!work.empty())
        {
            Expr cur = std::move(work.back());
            work.pop_back();
            if (!seen.insert(cur.id()).second)
                continue;
            if (cur.op() == Op::Var)
                out.emplace(cur.name(), cur.width());
            for (auto const &a : cur.args())
                work.push_back(a);
        }
    }
}
