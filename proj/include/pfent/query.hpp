#ifndef PFENT_QUERY_HPP
#define PFENT_QUERY_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfent/base.hpp"
#include "pfent/interp.hpp"

namespace pfent {

/// Boolean conjunctive query: all variables existentially quantified.
/// Atoms have set semantics (kept sorted and deduplicated).
struct ConjunctiveQuery {
    struct Atom {
        bool unary;            // true: concept atom, false: role atom
        int predicate;         // ConceptId or RoleId
        VarId x;
        VarId y = kNoId;       // role atoms only

        auto operator<=>(const Atom &) const = default;
    };

    std::string name;
    std::vector<std::string> variables;  // declaration order
    std::vector<Atom> atoms;             // sorted, unique

    int num_variables() const { return static_cast<int>(variables.size()); }
    VarId variable_id(const std::string &var) const;
    VarId intern_variable(const std::string &var);
    void add_atom(Atom atom);

    auto operator<=>(const ConjunctiveQuery &) const = default;
};

struct Ucq {
    std::vector<ConjunctiveQuery> disjuncts;
};

using Match = std::map<VarId, ElemId>;

struct UcqResult {
    bool satisfied = false;
    std::string disjunct;
    Match match;
    explicit operator bool() const { return satisfied; }
};

/// Parses `cq <name>: atom {, atom}` lines. With a signature, binary atoms must
/// use declared roles; without one, predicates are classified by arity alone.
Ucq parse_queries(const std::string &text, Signature &sig);
Ucq parse_queries(const std::string &text);

std::string cq_to_string(const ConjunctiveQuery &q, const Signature &sig);
std::string ucq_to_string(const Ucq &q, const Signature &sig);

/// Complete backtracking search with a most-constrained-variable-first
/// ordering; deterministic (candidates ascending, ties by declaration order).
std::optional<Match> find_match(const ConjunctiveQuery &q, const Interpretation &i);

/// Atom-by-atom check that `m` satisfies `q` in `i` (independent of the search).
bool verify_match(const ConjunctiveQuery &q, const Interpretation &i, const Match &m);

UcqResult evaluate_ucq(const Ucq &q, const Interpretation &i);

std::string match_to_json(const UcqResult &r, const ConjunctiveQuery &q);

} // namespace pfent

#endif
