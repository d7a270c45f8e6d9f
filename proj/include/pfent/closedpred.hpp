#ifndef PFENT_CLOSEDPRED_HPP
#define PFENT_CLOSEDPRED_HPP

#include <functional>
#include <set>
#include <vector>

#include "pfent/entail.hpp"
#include "pfent/kb.hpp"
#include "pfent/query.hpp"

namespace pfent {

/// Query containment under closed predicates: does q1 contained-in q2 hold for
/// every ABox and every model fixing each closed concept's extension to the
/// ABox assertions?
struct ContainmentInstance {
    ConjunctiveQuery q1;
    ConjunctiveQuery q2;
    std::vector<RawAxiom> tbox;
    std::set<ConceptId> closed;
    Signature signature;
};

struct QueryImage {
    ConjunctiveQuery image;
    std::vector<int> quotient;  // original variable -> image variable
};

/// All quotients of q's variable set, canonicalized and duplicate-free.
std::vector<QueryImage> enumerate_query_images(const ConjunctiveQuery &q);

/// One fresh individual per image variable; an assertion per atom.
/// Individuals are named a<var> (disambiguated when taken).
KnowledgeBase build_abox(const QueryImage &image, const ContainmentInstance &inst);

using EntailmentBackend = std::function<Verdict(const KnowledgeBase &, const Ucq &)>;

/// Theorem-level reduction: q1 contained in q2 iff every image's instance
/// entails q2 with F realized as a fresh name equal to the union of the closed
/// concepts.
Verdict decide_containment(const ContainmentInstance &inst, const EntailmentBackend &backend);

ContainmentInstance parse_containment(const std::string &text);

} // namespace pfent

#endif
