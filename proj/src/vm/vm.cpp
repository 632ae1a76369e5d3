#include <reentry/vm/vm.hpp>

#include <reentry/evm/keccak.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdio>

namespace reentry::vm
{
    using evm::Opcode;
    using sym::BasicBlock;
    using sym::ByteCell;
    using sym::CallKind;
    using sym::CallStackEntry;
    using sym::ConstraintOrigin;
    using sym::EdgeKind;
    using sym::EndState;
    using sym::Expr;
    using sym::LocalWorldState;
    using sym::MachineState;

    namespace env
    {
        u256 victim_address() { return u256("0xd00d00000000000000000000000000000000d00d"); }
        u256 attacker_address() { return u256("0xa77ac4e5000000000000000000000000a77ac4e5"); }
        u256 origin_address() { return u256("0x0e0a00000000000000000000000000000000e0a0"); }
    }

    char const *to_string(ScenarioMode m)
    {
        switch (m)
        {
        case ScenarioMode::Extraction: return "extraction";
        case ScenarioMode::Sequential: return "sequential";
        case ScenarioMode::Reentrant: return "reentrant";
        }
        return "?";
    }

    std::string EntryPoint::to_string() const
    {
        switch (kind)
        {
        case Kind::Any: return "any";
        case Kind::Fallback: return "fallback";
        case Kind::Selector: return evm::FunctionId{selector}.to_hex();
        }
        return "?";
    }

    namespace
    {
        enum class Flow
        {
            Next,
            Done,
        };

        std::string hex64(std::uint64_t v)
        {
            char buf[20];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
            return buf;
        }

        // Name derived from the structure of the operands, so the same
        // symbolic input yields the same variable on every path.
        std::string hashed_name(std::string const &stem, std::initializer_list<Expr> parts)
        {
            std::uint64_t h = 1469598103934665603ULL;
            for (auto const &p : parts)
                h = (h ^ p.hash()) * 1099511628211ULL;
            return stem + "_h" + hex64(h);
        }

        int log2_exact(u256 const &v)
        {
            if (v == 0 || (v & (v - 1)) != 0)
                return -1;
            return static_cast<int>(boost::multiprecision::msb(v));
        }

        u256 pow_mod(u256 base, u256 e)
        {
            u256 r = 1;
            while (e != 0)
            {
                if ((e & 1) != 0)
                    r *= base;
                base *= base;
                e >>= 1;
            }
            return r;
        }

        Expr word(u256 const &v) { return Expr::constant(v); }
        Expr word(std::uint64_t v) { return Expr::constant(v); }

        std::string short_key(std::string const &key)
        {
            return key.size() > 10 ? key.substr(key.size() - 6) : key;
        }
    }

    struct SymVm::Run
    {
        SymVm &vm;
        ScenarioConfig const &cfg;
        evm::ProgramPtr victim;
        cfg::CfgManager mgr;
        ScenarioResult result;
        std::set<std::string> warned;
        std::set<std::string> created_digests;
        std::map<std::string, evm::ProgramPtr> programs;
        std::string victim_key = LocalWorldState::key_of(word(env::victim_address()));
        std::string attacker_key = LocalWorldState::key_of(word(env::attacker_address()));

        Run(SymVm &v, ScenarioConfig const &c, evm::ProgramPtr p)
            : vm(v), cfg(c), victim(std::move(p)), mgr(v.solver_, v.limits_.loop_bound, c.record_ecfg)
        {
        }

        void warn(std::string const &msg)
        {
            if (warned.size() < 64 && warned.insert(msg).second)
                result.warnings.push_back(msg);
        }

        // ---- helpers -------------------------------------------------------

        std::string fresh(BasicBlock &b, std::string const &stem)
        {
            unsigned n = b.fresh_counts[stem]++;
            return n == 0 ? stem : stem + "#" + std::to_string(n);
        }

        std::string site(BasicBlock const &b)
        {
            return sym::names::tx_tag(b.machine.tx) + ":" + short_key(b.machine.active_contract) + ":" +
                   std::to_string(b.machine.pc);
        }

        evm::ProgramPtr program_for(std::vector<std::uint8_t> bytes, evm::CodeOrigin origin)
        {
            evm::Bytecode code{std::move(bytes), origin};
            auto digest = evm::to_hex(evm::keccak256(code.bytes));
            auto it = programs.find(digest);
            if (it != programs.end())
                return it->second;
            auto p = evm::make_program(std::move(code));
            programs.emplace(digest, p);
            return p;
        }

        void kill(BasicBlock &&b, EndState state, std::string const &note = {})
        {
            if (!note.empty())
                b.note = note;
            mgr.seal(b, state);
            if (state == EndState::DepthBound || state == EndState::LoopBound)
                ++result.bounded_paths;
            else
                ++result.dead_paths;
        }

        /// Pins a symbolic value to one model value (recorded in the path
        /// condition). `below` asks for a value under a bound when possible.
        std::optional<u256> concretize(BasicBlock &b, Expr const &e, std::optional<u256> below = std::nullopt)
        {
            if (e.is_const())
                return e.value();
            std::optional<smt::Result> r;
            if (below)
            {
                auto exprs = b.path.exprs();
                exprs.push_back(sym::ult(e, word(*below)));
                r = vm.solver_.check_sat(exprs, true);
                if (r->status != smt::Status::Sat)
                    r.reset();
            }
            if (!r)
            {
                r = vm.solver_.check_sat(b.path, true);
                if (r->status != smt::Status::Sat)
                {
                    if (r->status == smt::Status::Unknown)
                        warn("solver could not produce a value for a symbolic operand; path dropped");
                    return std::nullopt;
                }
            }
            u256 v = sym::evaluate(e, *r->model);
            b.path.add(sym::eq(e, word(v)), ConstraintOrigin::Concretization);
            b.flags |= sym::flag::concretized;
            warn("symbolic operand pinned to a single value");
            return v;
        }

        /// Concrete [offset, offset+size) memory region; false when the path
        /// had to be dropped.
        bool region(BasicBlock &b, Expr const &off, Expr const &size, std::uint64_t &o, std::uint64_t &s)
        {
            auto sz = concretize(b, size, u256(1) << 16);
            if (!sz)
                return false;
            if (*sz == 0)
            {
                o = 0;
                s = 0;
                return true;
            }
            auto of = concretize(b, off, u256(1) << 20);
            if (!of)
                return false;
            if (*sz > sym::Memory::limit || *of > sym::Memory::limit || *of + *sz > sym::Memory::limit)
                return false;
            o = evm::low64(*of);
            s = evm::low64(*sz);
            return true;
        }

        std::vector<ByteCell> fresh_bytes(std::string const &stem, std::uint64_t n)
        {
            std::vector<ByteCell> out;
            out.reserve(n);
            for (std::uint64_t j = 0; out.size() < n; ++j)
            {
                Expr w = Expr::var(stem + "[" + std::to_string(j) + "]");
                for (unsigned k = 0; k < 32 && out.size() < n; ++k)
                    out.push_back(ByteCell::of(w, k));
            }
            return out;
        }

        // ---- transactions --------------------------------------------------

        MachineState tx_frame(unsigned tx)
        {
            MachineState m;
            m.code = victim;
            m.active_contract = victim_key;
            m.address = word(env::victim_address());
            m.caller = word(env::attacker_address());
            m.tx = tx;
            if (cfg.tx_seeds.size() >= tx)
            {
                auto const &seed = cfg.tx_seeds[tx - 1];
                m.calldata = sym::CallData::concrete(seed.calldata);
                m.callvalue = word(seed.callvalue);
            }
            else
            {
                m.calldata = sym::CallData::symbolic(tx);
                m.callvalue = Expr::var(sym::names::callvalue(tx));
            }
            return m;
        }

        void add_entry(BasicBlock &b, unsigned tx, EntryPoint const &entry)
        {
            if (cfg.tx_seeds.size() >= tx)
                return;
            Expr cds = Expr::var(sym::names::calldata_size(tx));
            switch (entry.kind)
            {
            case EntryPoint::Kind::Any:
                return;
            case EntryPoint::Kind::Selector:
                b.path.add(sym::eq(Expr::var(sym::names::function_id(tx), 32), Expr::constant(entry.selector, 32)),
                           ConstraintOrigin::Entry);
                b.path.add(sym::ule(word(4), cds), ConstraintOrigin::Entry);
                return;
            case EntryPoint::Kind::Fallback:
                b.path.add(sym::ult(cds, word(4)), ConstraintOrigin::Entry);
                return;
            }
        }

        void begin_tx(BasicBlock &b, unsigned tx)
        {
            b.machine = tx_frame(tx);
            b.world.transfer(attacker_key, victim_key, b.machine.callvalue);
            if (tx == 2)
                b.flags |= sym::flag::second_tx;
        }

        BasicBlock make_root()
        {
            BasicBlock root;
            root.id = mgr.next_id();
            root.reentry_budget = cfg.mode == ScenarioMode::Reentrant ? cfg.reentry_budget : 0;
            Expr victim_balance = Expr::var("balance[" + victim_key + "]");
            Expr attacker_balance = Expr::var("balance[" + attacker_key + "]");
            if (cfg.world_seed)
            {
                victim_balance = word(cfg.world_seed->victim_balance);
                attacker_balance = word(cfg.world_seed->attacker_balance);
            }
            auto &v = root.world.install(word(env::victim_address()), victim, victim_balance);
            if (cfg.world_seed)
                v.seeded_storage = cfg.world_seed->victim_storage;
            auto &a = root.world.install(word(env::attacker_address()), nullptr, attacker_balance);
            a.attacker = true;

            add_entry(root, 1, cfg.f);
            if (cfg.mode != ScenarioMode::Extraction)
                add_entry(root, 2, cfg.g);
            begin_tx(root, 1);
            root.contract = victim_key;
            return root;
        }

        // ---- main loop -----------------------------------------------------

        ScenarioResult go()
        {
            mgr.push(make_root());
            while (auto next = mgr.pop())
            {
                if (result.ends.size() >= vm.limits_.path_cap)
                {
                    result.truncated = true;
                    result.truncation_reason = "path cap reached";
                    break;
                }
                if (mgr.stats().blocks >= vm.limits_.block_cap)
                {
                    result.truncated = true;
                    result.truncation_reason = "block cap reached";
                    break;
                }
                execute(std::move(*next));
            }
            result.blocks = mgr.stats().blocks;
            result.ecfg = mgr.take_ecfg();
            return std::move(result);
        }

        void execute(BasicBlock b)
        {
            for (;;)
            {
                auto const *ins = b.machine.code ? b.machine.code->at(b.machine.pc) : nullptr;
                if (!ins)
                {
                    // running off the end of code halts like STOP
                    halt(std::move(b), EndState::Stop, {});
                    return;
                }
                if (ins->opcode == Opcode::JUMPDEST && b.instruction_count > 0)
                {
                    mgr.seal(b, EndState::Continued);
                    mgr.push(mgr.successor(std::move(b), EdgeKind::Fallthrough));
                    return;
                }
                b.end_pc = b.machine.pc;
                ++b.instruction_count;
                if (step(b, *ins) == Flow::Done)
                    return;
            }
        }

        Expr pop(BasicBlock &b)
        {
            Expr e = std::move(b.machine.stack.back());
            b.machine.stack.pop_back();
            return e;
        }

        void push(BasicBlock &b, Expr e) { b.machine.stack.push_back(std::move(e)); }

        Flow step(BasicBlock &b, evm::Instruction const &ins)
        {
            auto &m = b.machine;
            auto const &meta = evm::opcode_table()[ins.raw];
            if (!meta.defined || ins.opcode == Opcode::INVALID)
            {
                halt(std::move(b), EndState::Invalid, {});
                return Flow::Done;
            }
            if (m.stack.size() < meta.pops)
            {
                kill(std::move(b), EndState::Invalid, "stack underflow");
                return Flow::Done;
            }
            if (m.stack.size() - meta.pops + meta.pushes > 1024)
            {
                kill(std::move(b), EndState::Invalid, "stack overflow");
                return Flow::Done;
            }

            Opcode op = ins.opcode;
            if (evm::is_push(op) || op == Opcode::PUSH0)
            {
                push(b, word(ins.push_value()));
                m.pc += ins.size();
                return Flow::Next;
            }
            if (evm::is_dup(op))
            {
                std::size_t n = static_cast<std::size_t>(op) - 0x80 + 1;
                push(b, m.stack[m.stack.size() - n]);
                ++m.pc;
                return Flow::Next;
            }
            if (evm::is_swap(op))
            {
                std::size_t n = static_cast<std::size_t>(op) - 0x90 + 1;
                std::swap(m.stack.back(), m.stack[m.stack.size() - 1 - n]);
                ++m.pc;
                return Flow::Next;
            }
            if (evm::is_log(op))
            {
                for (unsigned i = 0; i < meta.pops; ++i)
                    pop(b);
                ++m.pc;
                return Flow::Next;
            }

            switch (op)
            {
            case Opcode::STOP:
                halt(std::move(b), EndState::Stop, {});
                return Flow::Done;
            case Opcode::ADD: { auto x = pop(b), y = pop(b); push(b, sym::add(x, y)); break; }
            case Opcode::MUL: { auto x = pop(b), y = pop(b); push(b, sym::mul(x, y)); break; }
            case Opcode::SUB: { auto x = pop(b), y = pop(b); push(b, sym::sub(x, y)); break; }
            case Opcode::DIV: { auto x = pop(b), y = pop(b); push(b, sym::udiv(x, y)); break; }
            case Opcode::SDIV: { auto x = pop(b), y = pop(b); push(b, sym::sdiv(x, y)); break; }
            case Opcode::MOD: { auto x = pop(b), y = pop(b); push(b, sym::urem(x, y)); break; }
            case Opcode::SMOD: { auto x = pop(b), y = pop(b); push(b, sym::srem(x, y)); break; }
            case Opcode::ADDMOD:
            case Opcode::MULMOD:
            {
                auto x = pop(b), y = pop(b), n = pop(b);
                if (x.is_const() && y.is_const() && n.is_const())
                {
                    using boost::multiprecision::uint512_t;
                    uint512_t nn(n.value());
                    uint512_t r = 0;
                    if (nn != 0)
                        r = op == Opcode::ADDMOD ? (uint512_t(x.value()) + uint512_t(y.value())) % nn
                                                 : (uint512_t(x.value()) * uint512_t(y.value())) % nn;
                    push(b, word(u256(r)));
                }
                else
                {
                    b.flags |= sym::flag::approximated;
                    push(b, Expr::var(hashed_name(op == Opcode::ADDMOD ? "addmod" : "mulmod", {x, y, n})));
                }
                break;
            }
            case Opcode::EXP: { auto x = pop(b), y = pop(b); push(b, exp_word(b, x, y)); break; }
            case Opcode::SIGNEXTEND:
            {
                auto k = pop(b), x = pop(b);
                if (k.is_const())
                {
                    if (k.value() >= 31)
                        push(b, x);
                    else
                    {
                        unsigned bits = 8 * static_cast<unsigned>(k.value()) + 8;
                        push(b, sym::sext(sym::extract(x, bits - 1, 0), 256));
                    }
                }
                else
                {
                    b.flags |= sym::flag::approximated;
                    push(b, Expr::var(hashed_name("signextend", {k, x})));
                }
                break;
            }
            case Opcode::LT: { auto x = pop(b), y = pop(b); push(b, sym::bool_to_word(sym::ult(x, y))); break; }
            case Opcode::GT: { auto x = pop(b), y = pop(b); push(b, sym::bool_to_word(sym::ult(y, x))); break; }
            case Opcode::SLT: { auto x = pop(b), y = pop(b); push(b, sym::bool_to_word(sym::slt(x, y))); break; }
            case Opcode::SGT: { auto x = pop(b), y = pop(b); push(b, sym::bool_to_word(sym::slt(y, x))); break; }
            case Opcode::EQ: { auto x = pop(b), y = pop(b); push(b, sym::bool_to_word(sym::eq(x, y))); break; }
            case Opcode::ISZERO: { auto x = pop(b); push(b, sym::bool_to_word(sym::eq(x, word(0)))); break; }
            case Opcode::AND: { auto x = pop(b), y = pop(b); push(b, sym::bit_and(x, y)); break; }
            case Opcode::OR: { auto x = pop(b), y = pop(b); push(b, sym::bit_or(x, y)); break; }
            case Opcode::XOR: { auto x = pop(b), y = pop(b); push(b, sym::bit_xor(x, y)); break; }
            case Opcode::NOT: { auto x = pop(b); push(b, sym::bit_not(x)); break; }
            case Opcode::BYTE:
            {
                auto i = pop(b), x = pop(b);
                if (i.is_const())
                {
                    if (i.value() >= 32)
                        push(b, word(0));
                    else
                    {
                        unsigned k = static_cast<unsigned>(i.value());
                        push(b, sym::zext(sym::extract(x, 255 - 8 * k, 248 - 8 * k), 256));
                    }
                }
                else
                {
                    Expr shift = sym::mul(sym::sub(word(31), i), word(8));
                    Expr picked = sym::bit_and(sym::lshr(x, shift), word(0xff));
                    push(b, sym::ite(sym::ult(i, word(32)), picked, word(0)));
                }
                break;
            }
            case Opcode::SHL: { auto s = pop(b), x = pop(b); push(b, sym::shl(x, s)); break; }
            case Opcode::SHR: { auto s = pop(b), x = pop(b); push(b, sym::lshr(x, s)); break; }
            case Opcode::SAR: { auto s = pop(b), x = pop(b); push(b, sym::ashr(x, s)); break; }

            case Opcode::SHA3:
            {
                auto off = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, off, size, o, s))
                    return drop(std::move(b), "memory region out of range");
                auto cells = m.memory.read(o, s);
                if (auto bytes = sym::concrete_bytes(cells))
                {
                    auto h = evm::keccak256(*bytes);
                    push(b, word(evm::load_be(h)));
                }
                else
                {
                    Expr acc = word(s);
                    for (std::uint64_t i = 0; i < s; i += 32)
                    {
                        auto n = std::min<std::uint64_t>(32, s - i);
                        Expr chunk = sym::assemble(std::span<const ByteCell>(cells).subspan(i, n));
                        acc = Expr::var(hashed_name("keccak", {acc, chunk}));
                    }
                    push(b, Expr::var(hashed_name("keccak", {acc})));
                }
                break;
            }

            case Opcode::ADDRESS: push(b, m.address); break;
            case Opcode::BALANCE:
            {
                auto a = sym::bit_and(pop(b), Expr::constant(sym::mask_of(160)));
                auto &acct = b.world.ensure(a);
                push(b, b.world.balance(acct.key));
                break;
            }
            case Opcode::SELFBALANCE: push(b, b.world.balance(m.active_contract)); break;
            case Opcode::ORIGIN: push(b, word(env::origin_address())); break;
            case Opcode::CALLER: push(b, m.caller); break;
            case Opcode::CALLVALUE: push(b, m.callvalue); break;
            case Opcode::CALLDATALOAD:
            {
                auto off = pop(b);
                if (off.is_const())
                {
                    if (off.value() > (u256(1) << 32))
                        push(b, m.calldata.tx ? Expr::var(hashed_name("cdload", {off})) : word(0));
                    else
                        push(b, m.calldata.load(evm::low64(off.value())));
                }
                else
                {
                    b.flags |= sym::flag::approximated;
                    std::string stem = "cdload@" + sym::names::tx_tag(m.tx);
                    push(b, Expr::var(hashed_name(stem, {off})));
                }
                break;
            }
            case Opcode::CALLDATASIZE: push(b, m.calldata.size); break;
            case Opcode::CALLDATACOPY:
            {
                auto dst = pop(b), src = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, dst, size, o, s))
                    return drop(std::move(b), "memory region out of range");
                if (s == 0)
                    break;
                std::vector<ByteCell> cells;
                if (src.is_const() && src.value() < (u256(1) << 32))
                    cells = m.calldata.read(evm::low64(src.value()), s);
                else
                {
                    b.flags |= sym::flag::approximated;
                    cells = fresh_bytes(hashed_name("cdcopy@" + sym::names::tx_tag(m.tx), {src, size}), s);
                }
                m.memory.write(o, cells);
                break;
            }
            case Opcode::CODESIZE: push(b, word(m.code->code().size())); break;
            case Opcode::CODECOPY:
            {
                auto dst = pop(b), src = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, dst, size, o, s))
                    return drop(std::move(b), "memory region out of range");
                if (s == 0)
                    break;
                auto from = concretize(b, src);
                if (!from)
                    return drop(std::move(b), "unresolvable code offset");
                m.memory.write(o, code_cells(m.code, *from, s));
                break;
            }
            case Opcode::GASPRICE: push(b, Expr::var("gasprice")); break;
            case Opcode::EXTCODESIZE:
            {
                auto a = sym::bit_and(pop(b), Expr::constant(sym::mask_of(160)));
                auto const *acct = b.world.find(LocalWorldState::key_of(a));
                if (acct && acct->code)
                    push(b, word(acct->code->code().size()));
                else
                    push(b, Expr::var("extcodesize[" + LocalWorldState::key_of(a) + "]"));
                break;
            }
            case Opcode::EXTCODECOPY:
            {
                auto a = sym::bit_and(pop(b), Expr::constant(sym::mask_of(160)));
                auto dst = pop(b), src = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, dst, size, o, s))
                    return drop(std::move(b), "memory region out of range");
                if (s == 0)
                    break;
                auto const *acct = b.world.find(LocalWorldState::key_of(a));
                auto from = concretize(b, src);
                if (!from)
                    return drop(std::move(b), "unresolvable code offset");
                if (acct && acct->code)
                    m.memory.write(o, code_cells(acct->code, *from, s));
                else
                    m.memory.write(o, fresh_bytes(hashed_name("extcode", {a, src, size}), s));
                break;
            }
            case Opcode::RETURNDATASIZE: push(b, word(m.returndata.size())); break;
            case Opcode::RETURNDATACOPY:
            {
                auto dst = pop(b), src = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, dst, size, o, s))
                    return drop(std::move(b), "memory region out of range");
                auto from = concretize(b, src);
                if (!from)
                    return drop(std::move(b), "unresolvable return data offset");
                if (*from + s > m.returndata.size())
                {
                    halt(std::move(b), EndState::Invalid, {});
                    return Flow::Done;
                }
                if (s > 0)
                {
                    auto f = evm::low64(*from);
                    m.memory.write(o, std::span<const ByteCell>(m.returndata).subspan(f, s));
                }
                break;
            }
            case Opcode::EXTCODEHASH:
            {
                auto a = sym::bit_and(pop(b), Expr::constant(sym::mask_of(160)));
                auto const *acct = b.world.find(LocalWorldState::key_of(a));
                if (acct && acct->code)
                    push(b, word(evm::load_be(evm::keccak256(acct->code->code().bytes))));
                else
                    push(b, Expr::var("extcodehash[" + LocalWorldState::key_of(a) + "]"));
                break;
            }
            case Opcode::BLOCKHASH: { auto n = pop(b); push(b, Expr::var(hashed_name("blockhash", {n}))); break; }
            case Opcode::COINBASE: push(b, Expr::var("coinbase")); break;
            case Opcode::TIMESTAMP: push(b, Expr::var("timestamp")); break;
            case Opcode::NUMBER: push(b, Expr::var("number")); break;
            case Opcode::DIFFICULTY: push(b, Expr::var("prevrandao")); break;
            case Opcode::GASLIMIT: push(b, Expr::var("gaslimit")); break;
            case Opcode::CHAINID: push(b, Expr::var("chainid")); break;
            case Opcode::BASEFEE: push(b, Expr::var("basefee")); break;
            case Opcode::BLOBHASH: { auto i = pop(b); push(b, Expr::var(hashed_name("blobhash", {i}))); break; }
            case Opcode::BLOBBASEFEE: push(b, Expr::var("blobbasefee")); break;

            case Opcode::POP: pop(b); break;
            case Opcode::MLOAD:
            {
                auto off = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, off, word(32), o, s))
                    return drop(std::move(b), "memory region out of range");
                push(b, m.memory.load_word(o));
                break;
            }
            case Opcode::MSTORE:
            {
                auto off = pop(b), v = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, off, word(32), o, s))
                    return drop(std::move(b), "memory region out of range");
                m.memory.store_word(o, v);
                break;
            }
            case Opcode::MSTORE8:
            {
                auto off = pop(b), v = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, off, word(1), o, s))
                    return drop(std::move(b), "memory region out of range");
                m.memory.store_byte(o, sym::extract(v, 7, 0));
                break;
            }
            case Opcode::SLOAD: { auto k = pop(b); push(b, b.world.read_storage(m.active_contract, k)); break; }
            case Opcode::SSTORE:
            {
                auto k = pop(b), v = pop(b);
                b.world.write_storage(m.active_contract, k, v);
                break;
            }
            case Opcode::TLOAD: { auto k = pop(b); push(b, b.world.read_transient(m.active_contract, k)); break; }
            case Opcode::TSTORE:
            {
                auto k = pop(b), v = pop(b);
                b.world.write_transient(m.active_contract, k, v);
                break;
            }
            case Opcode::MCOPY:
            {
                auto dst = pop(b), src = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0, so = 0, ss = 0;
                if (!region(b, dst, size, o, s) || !region(b, src, size, so, ss))
                    return drop(std::move(b), "memory region out of range");
                if (s > 0)
                {
                    auto cells = m.memory.read(so, s);
                    m.memory.write(o, cells);
                }
                break;
            }
            case Opcode::JUMP:
            {
                auto dest = pop(b);
                auto target = concretize(b, dest);
                if (!target)
                    return drop(std::move(b), "unresolvable jump target");
                if (!evm::fits_u64(*target) || !m.code->is_jumpdest(evm::low64(*target)))
                {
                    halt(std::move(b), EndState::Invalid, {});
                    return Flow::Done;
                }
                mgr.seal(b, EndState::Continued);
                if (auto next = mgr.jump_to(std::move(b), evm::low64(*target)))
                    mgr.push(std::move(*next));
                else
                    ++result.bounded_paths;
                return Flow::Done;
            }
            case Opcode::JUMPI:
            {
                auto dest = pop(b), c = pop(b);
                Expr cond = sym::is_nonzero(c);
                std::uint64_t target = 0;
                bool valid = false;
                if (!cond.is_false())
                {
                    auto t = dest.is_const() ? std::optional<u256>(dest.value()) : concretize(b, dest);
                    if (!t)
                        return drop(std::move(b), "unresolvable jump target");
                    valid = evm::fits_u64(*t) && m.code->is_jumpdest(evm::low64(*t));
                    target = evm::low64(*t);
                    if (!valid)
                        warn("conditional jump to a non-JUMPDEST offset; that side is dropped");
                }
                auto before = mgr.stats().loop_bounded;
                mgr.branch_on_jumpi(std::move(b), target, valid, cond);
                result.bounded_paths += mgr.stats().loop_bounded - before;
                return Flow::Done;
            }
            case Opcode::PC: push(b, word(m.pc)); break;
            case Opcode::MSIZE: push(b, word(m.memory.size())); break;
            case Opcode::GAS: push(b, Expr::var(fresh(b, "gas@" + site(b)))); break;
            case Opcode::JUMPDEST: break;

            case Opcode::CREATE:
            case Opcode::CREATE2:
                return create(std::move(b), op);
            case Opcode::CALL:
            case Opcode::CALLCODE:
            case Opcode::DELEGATECALL:
            case Opcode::STATICCALL:
                return call(std::move(b), op);
            case Opcode::RETURN:
            case Opcode::REVERT:
            {
                auto off = pop(b), size = pop(b);
                std::uint64_t o = 0, s = 0;
                if (!region(b, off, size, o, s))
                    return drop(std::move(b), "memory region out of range");
                auto out = m.memory.read(o, s);
                halt(std::move(b), op == Opcode::RETURN ? EndState::Return : EndState::Revert, std::move(out));
                return Flow::Done;
            }
            case Opcode::SELFDESTRUCT:
                pop(b);
                halt(std::move(b), EndState::Stop, {});
                return Flow::Done;
            default:
                halt(std::move(b), EndState::Invalid, {});
                return Flow::Done;
            }
            ++m.pc;
            return Flow::Next;
        }

        Flow drop(BasicBlock &&b, std::string const &why)
        {
            warn(why + "; path dropped");
            kill(std::move(b), EndState::Invalid, why);
            return Flow::Done;
        }

        std::vector<ByteCell> code_cells(evm::ProgramPtr const &code, u256 const &from, std::uint64_t n)
        {
            std::vector<ByteCell> cells;
            cells.reserve(n);
            auto bytes = code->bytes();
            for (std::uint64_t i = 0; i < n; ++i)
            {
                u256 at = from + i;
                cells.push_back(ByteCell::concrete(at < bytes.size() ? bytes[evm::low64(at)] : 0));
            }
            return cells;
        }

        Expr exp_word(BasicBlock &b, Expr const &base, Expr const &e)
        {
            if (base.is_const() && e.is_const())
                return word(pow_mod(base.value(), e.value()));
            if (base.is_const())
            {
                u256 const &v = base.value();
                if (v == 0)
                    return sym::bool_to_word(sym::eq(e, word(0)));
                if (v == 1)
                    return word(1);
                int k = log2_exact(v);
                if (k > 0)
                {
                    // (2^k)^e == 1 << (k*e), zero once k*e reaches 256
                    unsigned limit = (256 + static_cast<unsigned>(k) - 1) / static_cast<unsigned>(k);
                    Expr shifted = sym::shl(word(1), sym::mul(e, word(static_cast<std::uint64_t>(k))));
                    return sym::ite(sym::ult(e, word(limit)), shifted, word(0));
                }
            }
            if (e.is_const() && e.value() <= 8)
            {
                Expr r = word(1);
                for (unsigned i = 0; i < static_cast<unsigned>(e.value()); ++i)
                    r = sym::mul(r, base);
                return r;
            }
            b.flags |= sym::flag::approximated;
            return Expr::var(hashed_name("exp", {base, e}));
        }

        // ---- calls and creation -------------------------------------------

        Flow create(BasicBlock &&b, Opcode op)
        {
            auto &m = b.machine;
            auto value = pop(b), off = pop(b), size = pop(b);
            if (op == Opcode::CREATE2)
                pop(b);
            std::uint64_t o = 0, s = 0;
            if (!region(b, off, size, o, s))
                return drop(std::move(b), "memory region out of range");
            auto init = sym::concrete_bytes(m.memory.read(o, s));
            if (!init)
            {
                warn("CREATE with symbolic init code is not supported; path dropped");
                kill(std::move(b), EndState::Invalid, "symbolic init code");
                return Flow::Done;
            }
            if (b.calls.size() >= vm.limits_.call_depth)
            {
                kill(std::move(b), EndState::DepthBound, "call depth bound");
                return Flow::Done;
            }
            Expr address = b.world.next_created_address(m.active_contract);
            auto &acct = b.world.install(address, nullptr, word(0));
            b.world.transfer(m.active_contract, acct.key, value);

            CallStackEntry entry;
            entry.kind = CallKind::Create;
            entry.contract = m.active_contract;
            entry.return_pc = m.pc + 1;
            entry.created_address = address;

            MachineState callee;
            callee.code = program_for(std::move(*init), evm::CodeOrigin::File);
            callee.active_contract = acct.key;
            callee.address = address;
            callee.calldata = sym::CallData::concrete({});
            callee.caller = m.address;
            callee.callvalue = value;
            callee.tx = m.tx;
            callee.is_create = true;

            mgr.seal(b, EndState::Continued);
            entry.saved = std::move(m);
            entry.saved.pc = entry.return_pc;
            b.calls.push_back(std::move(entry));
            b.machine = std::move(callee);
            mgr.push(mgr.successor(std::move(b), EdgeKind::CreateEnter));
            return Flow::Done;
        }

        Flow call(BasicBlock &&b, Opcode op)
        {
            auto &m = b.machine;
            bool has_value = op == Opcode::CALL || op == Opcode::CALLCODE;
            pop(b); // gas
            Expr to = sym::bit_and(pop(b), Expr::constant(sym::mask_of(160)));
            Expr value = has_value ? pop(b) : word(0);
            auto in_off = pop(b), in_size = pop(b), out_off = pop(b), out_size = pop(b);
            std::uint64_t io = 0, is = 0, oo = 0, os = 0;
            if (!region(b, in_off, in_size, io, is) || !region(b, out_off, out_size, oo, os))
                return drop(std::move(b), "memory region out of range");
            auto input = m.memory.read(io, is);
            m.memory.touch(oo, os);
            std::string tag = fresh(b, "ret@" + site(b));
            if (op == Opcode::CALL)
                b.flags |= sym::flag::callable;

            bool precompile = to.is_const() && to.value() >= 1 && to.value() <= 0x11;
            if (op == Opcode::DELEGATECALL || op == Opcode::CALLCODE)
            {
                warn("DELEGATECALL/CALLCODE are treated as successful calls with unknown results");
                return noop_call(std::move(b), tag, oo, os);
            }
            if (op == Opcode::CALL)
            {
                auto &target = b.world.ensure(to);
                b.world.transfer(m.active_contract, target.key, value);
            }
            auto const *target = b.world.find(LocalWorldState::key_of(to));
            if (!precompile && target && target->code && !target->attacker)
                return enter_call(std::move(b), to, value, std::move(input), oo, os, tag);
            if (!precompile && op == Opcode::CALL && cfg.mode == ScenarioMode::Reentrant && b.reentry_budget > 0)
                return reenter(std::move(b), oo, os, tag);
            return noop_call(std::move(b), tag, oo, os);
        }

        Flow noop_call(BasicBlock &&b, std::string const &tag, std::uint64_t oo, std::uint64_t os)
        {
            auto &m = b.machine;
            m.returndata = fresh_bytes(tag, os);
            if (os > 0)
                m.memory.write(oo, m.returndata);
            push(b, word(1));
            ++m.pc;
            return Flow::Next;
        }

        Flow enter_call(BasicBlock &&b, Expr const &to, Expr const &value, std::vector<ByteCell> input,
                        std::uint64_t oo, std::uint64_t os, std::string const &tag)
        {
            if (b.calls.size() >= vm.limits_.call_depth)
            {
                kill(std::move(b), EndState::DepthBound, "call depth bound");
                return Flow::Done;
            }
            auto &m = b.machine;
            auto const &target = b.world.at(LocalWorldState::key_of(to));
            MachineState callee;
            callee.code = target.code;
            callee.active_contract = target.key;
            callee.address = to;
            callee.calldata = sym::CallData::from_cells(std::move(input));
            callee.caller = m.address;
            callee.callvalue = value;
            callee.tx = m.tx;

            CallStackEntry entry;
            entry.kind = CallKind::Call;
            entry.contract = m.active_contract;
            entry.return_pc = m.pc + 1;
            entry.out_offset = oo;
            entry.out_size = os;
            entry.tag = tag;

            mgr.seal(b, EndState::Continued);
            entry.saved = std::move(m);
            entry.saved.pc = entry.return_pc;
            b.calls.push_back(std::move(entry));
            b.machine = std::move(callee);
            mgr.push(mgr.successor(std::move(b), EdgeKind::CallEnter));
            return Flow::Done;
        }

        /// The callee is the attacker: it calls back into the victim with
        /// the second function before returning.
        Flow reenter(BasicBlock &&b, std::uint64_t oo, std::uint64_t os, std::string const &tag)
        {
            if (b.calls.size() + 2 > vm.limits_.call_depth)
            {
                kill(std::move(b), EndState::DepthBound, "call depth bound");
                return Flow::Done;
            }
            auto &m = b.machine;
            CallStackEntry into_attacker;
            into_attacker.kind = CallKind::Call;
            into_attacker.contract = m.active_contract;
            into_attacker.return_pc = m.pc + 1;
            into_attacker.out_offset = oo;
            into_attacker.out_size = os;
            into_attacker.tag = tag;

            mgr.seal(b, EndState::Continued);
            into_attacker.saved = std::move(m);
            into_attacker.saved.pc = into_attacker.return_pc;
            b.calls.push_back(std::move(into_attacker));
            b.machine = MachineState{};
            b.machine.active_contract = attacker_key;
            b.machine.tx = into_attacker_tx(b);

            BasicBlock d = mgr.successor(std::move(b), EdgeKind::CallEnter);
            d.dummy = true;
            d.contract = attacker_key;
            d.note = "re-enters " + cfg.g.to_string();
            mgr.seal(d, EndState::Continued);

            CallStackEntry in_attacker;
            in_attacker.kind = CallKind::Dummy;
            in_attacker.contract = attacker_key;
            d.calls.push_back(std::move(in_attacker));
            begin_tx(d, 2);
            d.flags |= sym::flag::reentered;
            --d.reentry_budget;
            mgr.push(mgr.successor(std::move(d), EdgeKind::CallEnter));
            return Flow::Done;
        }

        unsigned into_attacker_tx(BasicBlock const &b) { return b.calls.back().saved.tx; }

        // ---- halting -------------------------------------------------------

        void halt(BasicBlock &&b, EndState kind, std::vector<ByteCell> output)
        {
            if (kind == EndState::Revert || kind == EndState::Invalid)
            {
                kill(std::move(b), kind);
                return;
            }
            if (!b.calls.empty())
                return_from_frame(std::move(b), kind, std::move(output));
            else
                end_transaction(std::move(b), kind, std::move(output));
        }

        void return_from_frame(BasicBlock &&b, EndState kind, std::vector<ByteCell> output)
        {
            auto kind_of_top = b.calls.back().kind;
            if (kind_of_top == CallKind::Create)
            {
                std::vector<std::uint8_t> runtime;
                if (kind == EndState::Return)
                {
                    auto bytes = sym::concrete_bytes(output);
                    if (!bytes)
                    {
                        warn("constructor returned symbolic runtime code; path dropped");
                        kill(std::move(b), EndState::Invalid, "symbolic runtime code");
                        return;
                    }
                    runtime = std::move(*bytes);
                }
                mgr.seal(b, kind);
                auto entry = std::move(b.calls.back());
                b.calls.pop_back();
                auto key = LocalWorldState::key_of(entry.created_address);
                if (!runtime.empty())
                {
                    auto program = program_for(std::move(runtime), evm::CodeOrigin::CreateReturned);
                    b.world.at(key).code = program;
                    if (created_digests.insert(program->digest()).second)
                        result.created.push_back(program);
                }
                b.machine = std::move(entry.saved);
                b.machine.returndata.clear();
                push(b, entry.created_address);
                mgr.push(mgr.successor(std::move(b), EdgeKind::CreateReturn));
                return;
            }

            mgr.seal(b, kind);
            auto entry = std::move(b.calls.back());
            b.calls.pop_back();
            if (entry.kind == CallKind::Dummy)
            {
                // back in the attacker frame, which returns to the victim's call
                b.machine = MachineState{};
                b.machine.active_contract = attacker_key;
                b.machine.tx = b.calls.back().saved.tx;
                BasicBlock d = mgr.successor(std::move(b), EdgeKind::CallReturn);
                d.dummy = true;
                d.contract = attacker_key;
                d.note = "returns to the victim";
                mgr.seal(d, EndState::Continued);
                auto call_entry = std::move(d.calls.back());
                d.calls.pop_back();
                resume_after_call(d, call_entry, fresh_bytes(call_entry.tag, call_entry.out_size));
                mgr.push(mgr.successor(std::move(d), EdgeKind::CallReturn));
                return;
            }
            resume_after_call(b, entry, std::move(output));
            mgr.push(mgr.successor(std::move(b), EdgeKind::CallReturn));
        }

        void resume_after_call(BasicBlock &b, CallStackEntry &entry, std::vector<ByteCell> ret)
        {
            b.machine = std::move(entry.saved);
            auto n = std::min<std::uint64_t>(entry.out_size, ret.size());
            if (n > 0)
                b.machine.memory.write(entry.out_offset, std::span<const ByteCell>(ret).subspan(0, n));
            b.machine.returndata = std::move(ret);
            push(b, word(1));
        }

        void end_transaction(BasicBlock &&b, EndState kind, std::vector<ByteCell> output)
        {
            if (b.machine.tx == 1)
                ++result.f_ends;
            if (cfg.mode != ScenarioMode::Extraction && !(b.flags & sym::flag::second_tx))
            {
                mgr.seal(b, kind);
                begin_tx(b, 2);
                mgr.push(mgr.successor(std::move(b), EdgeKind::NextTx));
                return;
            }
            bool constrained = false;
            for (auto const &c : b.world.positivity_constraints())
            {
                if (c.is_true())
                    continue;
                b.path.add(c, ConstraintOrigin::BalancePositivity);
                constrained = true;
            }
            mgr.seal(b, kind);
            if (constrained)
            {
                auto r = vm.solver_.check_sat(b.path);
                if (r.status == smt::Status::Unsat)
                {
                    ++result.dead_paths;
                    return;
                }
                if (r.status == smt::Status::Unknown)
                    warn("solver could not decide balance feasibility of an end state; kept");
            }
            PathEnd end;
            end.block = b.id;
            end.kind = kind;
            end.path = std::move(b.path);
            end.flags = b.flags;
            end.world = std::move(b.world);
            end.output = std::move(output);
            result.ends.push_back(std::move(end));
        }
    };

    SymVm::SymVm(smt::Solver &solver, Limits limits) : solver_(solver), limits_(limits) {}

    ScenarioResult SymVm::run(evm::ProgramPtr victim, ScenarioConfig const &config)
    {
        auto queries_before = solver_.stats().queries;
        Run r(*this, config, std::move(victim));
        auto result = r.go();
        if (result.bounded_paths > 0)
            result.warnings.push_back(std::to_string(result.bounded_paths) + " path(s) cut by the loop or depth bound");
        result.solver_queries = solver_.stats().queries - queries_before;
        return result;
    }
}
