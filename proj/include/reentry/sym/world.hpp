#pragma once

#include <reentry/evm/bytecode.hpp>
#include <reentry/sym/expr.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reentry::sym
{
    struct StorageWrite
    {
        Expr slot;
        Expr value;
    };

    struct Account
    {
        std::string key;
        Expr address;
        evm::ProgramPtr code; // null for accounts whose code is unknown
        bool attacker = false;

        Expr initial_balance;
        std::vector<Expr> credits;
        std::vector<Expr> debits;

        std::vector<StorageWrite> writes;
        std::vector<StorageWrite> transient_writes;
        /// When set, storage not written on this path reads from this map
        /// (absent slots read as zero) instead of fresh symbols.
        std::optional<std::map<u256, u256>> seeded_storage;
    };

    /// Per-path view of accounts, balances and storage.
    class LocalWorldState
    {
    public:
        /// Account key of an address term: lowercase hex for concrete
        /// addresses, a structural digest otherwise.
        static std::string key_of(Expr const &address);

        Account *find(std::string const &key);
        Account const *find(std::string const &key) const;
        Account &at(std::string const &key);
        Account const &at(std::string const &key) const;

        /// Returns the account for an address, creating an external account
        /// with an unconstrained balance when it is not yet known.
        Account &ensure(Expr const &address);

        Account &install(Expr const &address, evm::ProgramPtr code, Expr initial_balance);

        Expr read_storage(std::string const &key, Expr const &slot) const;
        void write_storage(std::string const &key, Expr const &slot, Expr const &value);
        Expr read_transient(std::string const &key, Expr const &slot) const;
        void write_transient(std::string const &key, Expr const &slot, Expr const &value);

        Expr balance(std::string const &key) const;
        void transfer(std::string const &from, std::string const &to, Expr const &value);

        /// No account ends with a negative balance: for every account that
        /// paid something, credits and debits do not wrap and total debits
        /// stay within the initial balance plus credits.
        std::vector<Expr> positivity_constraints() const;

        /// Fresh deterministic address for a contract created by `creator`.
        Expr next_created_address(std::string const &creator);

        std::map<std::string, Account> const &accounts() const { return accounts_; }

    private:
        std::map<std::string, Account> accounts_;
        std::uint64_t created_ = 0;
    };
}
