#ifndef PFENT_CONSTRUCT_HPP
#define PFENT_CONSTRUCT_HPP

#include <map>
#include <optional>
#include <vector>

#include "pfent/base.hpp"
#include "pfent/elementary.hpp"
#include "pfent/homo.hpp"
#include "pfent/interp.hpp"

namespace pfent {

/// Identity of an unravelling node: an original element kept verbatim, or a
/// per-path copy. PathCopy paths start at a successor of the family cluster and
/// visit only non-critical, non-root elements.
struct UnravelNode {
    enum class Kind { Kept, PathCopy };

    Kind kind = Kind::Kept;
    ElemId original = kNoId;       // Kept: the element itself; PathCopy: last path element
    int family = -1;               // PathCopy: index into families
    std::vector<ElemId> path;      // PathCopy only
};

struct Generator {
    enum class Mode { Classical, Quasi };

    RootedInterpretation base;
    Mode mode = Mode::Quasi;
};

struct Unravelling {
    Interpretation interp;
    ElemId root = kNoId;
    Homomorphism projection;            // into `target` below
    Interpretation target;              // base* for quasi, base for classical
    std::map<ElemId, UnravelNode> nodes;
    std::map<ElemId, int> depth;        // defining path length; 0 for kept nodes
    std::map<ElemId, Label> labels;     // propagated when input labels given
};

/// Depth-bounded quasi-unravelling of a single-transitive-role base: critical
/// clusters and the root are kept once, everything else is copied per path.
/// The projection maps into the transitive closure of the base. Reach-set
/// exactness (t-strongness away from the path frontier) holds when the base is
/// generated by its root; elements that reach the root without being reachable
/// from it lose reach witnesses, since the root is never copied.
Unravelling quasi_unravel(const Generator &g, RoleId role, ConceptId finite_concept,
                          int depth, const std::map<ElemId, Label> *labels = nullptr);

/// Depth-bounded classical unravelling (all roles, no transitive closing).
Unravelling classical_unravel(const Generator &g, int depth);

/// Removes dispensable critical elements (tp(u) subseteq reach_t(u)) other than
/// `keep`, one by one. Survivors keep their reach sets; afterwards every simple
/// critical path avoiding `keep` has length at most the occurring concept count.
Interpretation prune_dispensable(const Interpretation &i, ElemId keep, RoleId t,
                                 ConceptId finite_concept);

struct ElementarizeResult {
    RootedInterpretation rooted;
    std::map<ElemId, Label> labels;
    /// Anchor of each result element in the input; this is the t-strong
    /// homomorphism carried by the (isomorphic) quasi-unravelling of the result.
    Homomorphism anchors;
    /// Longest chain of non-critical elements; quasi-unravelling the result at
    /// this depth or more reproduces it up to transitive closure.
    int saturation_depth = 0;
};

/// Builds an elementary rooted labelled interpretation whose quasi-unravelling
/// maps into the (transitively closed) input via a t-strong label-preserving
/// homomorphism, of size at most (l+1)^((l+1)^2) for l the occurring concept
/// count. Requires a transitive single-role input whose non-critical part is
/// acyclic (inputs produced by unravelling pipelines always are; others are
/// rejected).
ElementarizeResult elementarize(const RootedInterpretation &i, RoleId t,
                                ConceptId finite_concept,
                                const std::map<ElemId, Label> *labels = nullptr);

struct BlownInterpretation {
    Interpretation flat;                           // G_n
    PiecewiseElementary structure;                 // piece decomposition of G_n
    std::map<ElemId, ElemId> provenance;           // G_n element -> input element
    std::vector<std::vector<ElemId>> blown_cycles; // copy elements in cycle order
};

/// The blow-up G_n: per-piece top-down cycle unravelling to (2n+1)x length with
/// fresh pendant copies, partial transitive closure excluding intra-blown-cycle
/// pairs, then closure of the first n copies within each blown cycle.
BlownInterpretation blow_up(const PiecewiseElementary &g, int n, const Signature &sig,
                            ConceptId finite_concept);

/// Depth-bounded materialization of the unravelling of a piecewise single-role
/// interpretation: per-piece quasi-unravellings composed along the piece tree,
/// then transitive closure. Returns the interpretation plus the projection to
/// the flattened (closed) input.
Unravelling piecewise_unravel(const PiecewiseElementary &g, const Signature &sig,
                              ConceptId finite_concept, int path_depth);

std::string generator_to_json(const Generator &g, const Signature &sig);
Generator generator_from_json(const std::string &text, Signature &sig);
std::string piecewise_to_json(const PiecewiseElementary &g, const Signature &sig);
PiecewiseElementary piecewise_from_json(const std::string &text, Signature &sig);

} // namespace pfent

#endif
