#ifndef PFENT_CONCEPTS_HPP
#define PFENT_CONCEPTS_HPP

#include <memory>
#include <string>

#include "pfent/base.hpp"
#include "pfent/signature.hpp"

namespace pfent {

/// Complex concept terms: Bot | Top | A | !C | (C & D) | (C | D) |
/// some r . C | only r . C. Immutable shared trees; only raw (pre-normal)
/// TBox axioms use these.
struct ConceptNode;
using ConceptExpr = std::shared_ptr<const ConceptNode>;

struct ConceptNode {
    enum class Kind { Bot, Top, Name, Not, And, Or, Exists, Forall };

    Kind kind = Kind::Bot;
    ConceptId name = kNoId;   // Name
    RoleId role = kNoId;      // Exists / Forall
    ConceptExpr left;         // Not / And / Or / Exists / Forall (the filler)
    ConceptExpr right;        // And / Or
};

ConceptExpr concept_bot();
ConceptExpr concept_top();
ConceptExpr concept_name(ConceptId id);
ConceptExpr concept_not(ConceptExpr c);
ConceptExpr concept_and(ConceptExpr a, ConceptExpr b);
ConceptExpr concept_or(ConceptExpr a, ConceptExpr b);
ConceptExpr concept_exists(RoleId r, ConceptExpr filler);
ConceptExpr concept_forall(RoleId r, ConceptExpr filler);

std::string concept_to_string(const ConceptExpr &c, const Signature &sig);

bool concept_equal(const ConceptExpr &a, const ConceptExpr &b);

} // namespace pfent

#endif
