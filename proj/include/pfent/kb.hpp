#ifndef PFENT_KB_HPP
#define PFENT_KB_HPP

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pfent/base.hpp"
#include "pfent/concepts.hpp"
#include "pfent/signature.hpp"

namespace pfent {

/// Normalized TBox axiom. Exactly one of the three shapes:
///   ConjDisj:   A1 & ... & An <= B1 | ... | Bm   (empty lhs = top, empty rhs = bot)
///   AllValues:  A <= only r . B
///   SomeValues: A <= some r . B
struct Axiom {
    enum class Kind { ConjDisj, AllValues, SomeValues };

    Kind kind;
    std::set<ConceptId> lhs;  // ConjDisj
    std::set<ConceptId> rhs;  // ConjDisj
    ConceptId a = kNoId;      // AllValues / SomeValues
    RoleId role = kNoId;
    ConceptId b = kNoId;

    static Axiom conj_disj(std::set<ConceptId> lhs, std::set<ConceptId> rhs);
    static Axiom all_values(ConceptId a, RoleId r, ConceptId b);
    static Axiom some_values(ConceptId a, RoleId r, ConceptId b);

    auto operator<=>(const Axiom &) const = default;
};

struct Assertion {
    // Role assertions have role != kNoId and use both individuals.
    ConceptId concept_ = kNoId;
    RoleId role = kNoId;
    IndividualId first = kNoId;
    IndividualId second = kNoId;

    static Assertion concept_assertion(ConceptId c, IndividualId a);
    static Assertion role_assertion(RoleId r, IndividualId a, IndividualId b);
    bool is_role() const { return role != kNoId; }

    auto operator<=>(const Assertion &) const = default;
};

using RawAxiom = std::pair<ConceptExpr, ConceptExpr>;

struct KnowledgeBase {
    Signature signature;
    std::vector<RawAxiom> raw_tbox;       // as parsed, before normalization
    std::set<Axiom> tbox;                 // normalized
    std::set<Assertion> abox;
    ConceptId finite_concept = kNoId;     // F; kNoId when the file declares none

    bool has_finite_concept() const { return finite_concept != kNoId; }
};

/// Occurrence summary reported by kb_signature. `effective_l` is the number of
/// concept names in the signature, which is what the elementary-size bounds use
/// (declared-but-unused names still enlarge Types(K)).
struct SignatureReport {
    std::set<ConceptId> occurring_concepts;
    std::set<RoleId> occurring_roles;
    std::set<IndividualId> occurring_individuals;
    std::set<ConceptId> unused_concepts;
    std::set<RoleId> unused_roles;
    std::set<IndividualId> unused_individuals;
    int effective_l = 0;
};

KnowledgeBase parse_kb(const std::string &text);
std::string serialize_kb(const KnowledgeBase &kb);

/// Rewrites raw inclusions into the three normal shapes. Fresh names use the
/// reserved prefix `_n` with a deterministic counter. The result is a
/// conservative extension of the input over the enlarged signature.
std::set<Axiom> normalize_tbox(const std::vector<RawAxiom> &raw, Signature &sig);

/// Convenience: parse + normalize in one step.
KnowledgeBase parse_and_normalize_kb(const std::string &text);

SignatureReport kb_signature(const KnowledgeBase &kb);

std::string axiom_to_string(const Axiom &ax, const Signature &sig);

/// Re-expresses a normalized axiom as a raw concept inclusion (used by the
/// idempotence tests and the serializer).
RawAxiom axiom_to_raw(const Axiom &ax);

} // namespace pfent

#endif
