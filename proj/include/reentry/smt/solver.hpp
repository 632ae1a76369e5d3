#pragma once

#include <reentry/sym/expr.hpp>
#include <reentry/sym/path_condition.hpp>

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace reentry::smt
{
    enum class Status
    {
        Sat,
        Unsat,
        Unknown,
    };

    char const *to_string(Status s);

    /// Values for the variables of a query (unlisted variables are 0).
    using Model = sym::Assignment;

    struct Result
    {
        Status status = Status::Unknown;
        std::optional<Model> model;
        std::string reason; // solver's explanation for Unknown
    };

    /// The solver gave up on an equivalence query.
    class Indeterminate : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// A Sat model failed re-evaluation against the query.
    class ModelMismatch : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    struct SolverStats
    {
        std::uint64_t queries = 0;
        std::uint64_t sat = 0;
        std::uint64_t unsat = 0;
        std::uint64_t unknown = 0;
        std::uint64_t trivial = 0; // answered without calling the backend
        std::uint64_t probed = 0;  // satisfied by local search before the backend
        std::uint64_t abstracted = 0; // equivalences proven with nonlinear terms left uninterpreted
        std::chrono::nanoseconds time{0};
    };

    /// One backend context. Not thread-safe; use one instance per worker.
    class Solver
    {
    public:
        explicit Solver(std::chrono::milliseconds timeout = std::chrono::seconds(60));
        ~Solver();
        Solver(Solver const &) = delete;
        Solver &operator=(Solver const &) = delete;

        std::chrono::milliseconds timeout() const { return timeout_; }
        void set_timeout(std::chrono::milliseconds t) { timeout_ = t; }

        /// Satisfiability of the conjunction. With want_model, a Sat answer
        /// carries a model that has been re-checked against every constraint.
        Result check_sat(std::span<const sym::Expr> constraints, bool want_model = false,
                         std::optional<std::chrono::milliseconds> timeout = std::nullopt);
        Result check_sat(sym::PathCondition const &pc, bool want_model = false,
                         std::optional<std::chrono::milliseconds> timeout = std::nullopt);

        /// True iff c and i admit exactly the same inputs. Throws
        /// Indeterminate when the backend cannot decide.
        bool check_equivalence(sym::PathCondition const &c, sym::PathCondition const &i);

        /// Model distinguishing c from i (satisfying exactly one), if any.
        Result distinguish(sym::PathCondition const &c, sym::PathCondition const &i);

        SolverStats const &stats() const { return stats_; }

    private:
        Result distinguish_terms(std::vector<sym::Expr> const &c, std::vector<sym::Expr> const &i);
        std::optional<Model> probe_distinguish(std::vector<sym::Expr> const &c, std::vector<sym::Expr> const &i);
        bool equivalent_terms(std::vector<sym::Expr> const &c, std::vector<sym::Expr> const &i);
        bool abstractly_equal(std::vector<sym::Expr> const &c, std::vector<sym::Expr> const &i);
        /// Satisfiability of a path condition, remembering earlier answers.
        bool known_sat(sym::PathCondition const &pc);

        struct Impl;
        std::unique_ptr<Impl> impl_;
        std::chrono::milliseconds timeout_;
        SolverStats stats_;
        std::unordered_map<std::uint64_t, std::vector<sym::PathCondition>> sat_paths_;
    };
}
