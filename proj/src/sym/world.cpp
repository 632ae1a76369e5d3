#include <reentry/sym/world.hpp>

#include <reentry/evm/keccak.hpp>

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace reentry::sym
{
    namespace
    {
        std::string hash_label(Expr const &e)
        {
            char buf[24];
            std::snprintf(buf, sizeof buf, "h%016llx", static_cast<unsigned long long>(e.hash()));
            return buf;
        }

        std::string slot_label(Expr const &slot)
        {
            return slot.is_const() ? evm::to_hex(slot.value()) : hash_label(slot);
        }

        Expr storage_chain(Expr base, std::vector<StorageWrite> const &writes, Expr const &slot)
        {
            for (auto const &w : writes)
                base = ite(eq(w.slot, slot), w.value, base);
            return base;
        }
    }

    std::string LocalWorldState::key_of(Expr const &address)
    {
        if (address.is_const())
            return evm::to_hex(address.value() & mask_of(160));
        return "sym:" + hash_label(address);
    }

    Account *LocalWorldState::find(std::string const &key)
    {
        auto it = accounts_.find(key);
        return it == accounts_.end() ? nullptr : &it->second;
    }

    Account const *LocalWorldState::find(std::string const &key) const
    {
        auto it = accounts_.find(key);
        return it == accounts_.end() ? nullptr : &it->second;
    }

    Account &LocalWorldState::at(std::string const &key)
    {
        if (auto *a = find(key))
            return *a;
        throw std::out_of_range("unknown account " + key);
    }

    Account const &LocalWorldState::at(std::string const &key) const
    {
        if (auto const *a = find(key))
            return *a;
        throw std::out_of_range("unknown account " + key);
    }

    Account &LocalWorldState::ensure(Expr const &address)
    {
        auto key = key_of(address);
        if (auto *a = find(key))
            return *a;
        Account acct;
        acct.key = key;
        acct.address = address;
        acct.initial_balance = Expr::var("balance[" + key + "]");
        return accounts_.emplace(key, std::move(acct)).first->second;
    }

    Account &LocalWorldState::install(Expr const &address, evm::ProgramPtr code, Expr initial_balance)
    {
        auto key = key_of(address);
        Account acct;
        acct.key = key;
        acct.address = address;
        acct.code = std::move(code);
        acct.initial_balance = std::move(initial_balance);
        auto &slot = accounts_[key];
        slot = std::move(acct);
        return slot;
    }

    Expr LocalWorldState::read_storage(std::string const &key, Expr const &slot) const
    {
        auto const &acct = at(key);
        Expr base;
        if (acct.seeded_storage)
        {
            base = Expr::constant(0);
            if (slot.is_const())
            {
                auto it = acct.seeded_storage->find(slot.value());
                if (it != acct.seeded_storage->end())
                    base = Expr::constant(it->second);
            }
            else
            {
                for (auto const &[k, v] : *acct.seeded_storage)
                    base = ite(eq(slot, Expr::constant(k)), Expr::constant(v), base);
            }
        }
        else
        {
            base = Expr::var("storage[" + key + "][" + slot_label(slot) + "]");
        }
        return storage_chain(base, acct.writes, slot);
    }

    void LocalWorldState::write_storage(std::string const &key, Expr const &slot, Expr const &value)
    {
        auto &writes = at(key).writes;
        // a later write to the very same slot term shadows the earlier one
        std::erase_if(writes, [&](StorageWrite const &w) { return w.slot == slot; });
        writes.push_back({slot, value});
    }

    Expr LocalWorldState::read_transient(std::string const &key, Expr const &slot) const
    {
        return storage_chain(Expr::constant(0), at(key).transient_writes, slot);
    }

    void LocalWorldState::write_transient(std::string const &key, Expr const &slot, Expr const &value)
    {
        at(key).transient_writes.push_back({slot, value});
    }

    Expr LocalWorldState::balance(std::string const &key) const
    {
        auto const &acct = at(key);
        Expr b = acct.initial_balance;
        for (auto const &c : acct.credits)
            b = add(b, c);
        for (auto const &d : acct.debits)
            b = sub(b, d);
        return b;
    }

    void LocalWorldState::transfer(std::string const &from, std::string const &to, Expr const &value)
    {
        if (value.is_const() && value.value() == 0)
            return;
        at(from).debits.push_back(value);
        at(to).credits.push_back(value);
    }

    std::vector<Expr> LocalWorldState::positivity_constraints() const
    {
        // Sums are built in a canonical term order so that paths moving the
        // same amounts in a different order get identical constraints.
        auto canonical = [](std::vector<Expr> terms) {
            std::sort(terms.begin(), terms.end(), [](Expr const &a, Expr const &b) {
                if (a.hash() != b.hash())
                    return a.hash() < b.hash();
                return a.to_string() < b.to_string();
            });
            return terms;
        };
        std::vector<Expr> out;
        auto keep = [&](Expr const &c) {
            if (!c.is_true())
                out.push_back(c);
        };
        for (auto const &[key, acct] : accounts_)
        {
            if (acct.debits.empty())
                continue;
            Expr in = acct.initial_balance;
            for (auto const &c : canonical(acct.credits))
            {
                Expr next = add(in, c);
                keep(ule(in, next));
                in = next;
            }
            Expr spent = Expr::constant(0);
            for (auto const &d : canonical(acct.debits))
            {
                Expr next = add(spent, d);
                keep(ule(spent, next));
                spent = next;
            }
            keep(ule(spent, in));
        }
        return out;
    }

    Expr LocalWorldState::next_created_address(std::string const &creator)
    {
        auto digest = evm::keccak256(creator + "/" + std::to_string(created_++));
        return Expr::constant(evm::load_be(std::span<const std::uint8_t>(digest).subspan(12)));
    }
}
