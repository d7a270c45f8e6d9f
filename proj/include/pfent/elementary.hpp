#ifndef PFENT_ELEMENTARY_HPP
#define PFENT_ELEMENTARY_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pfent/base.hpp"
#include "pfent/interp.hpp"
#include "pfent/query.hpp"

namespace pfent {

/// Most specific class first; every class except NotElementary is elementary.
enum class ShapeClass {
    Singleton,
    Cycle,
    CriticalCluster,
    LoopTree,
    Elementary,
    NotElementary,
};

bool is_elementary(ShapeClass c);
std::string shape_class_name(ShapeClass c);

struct ShapeWitness {
    // textual derivation trace; per-node rule applications in preorder
    std::vector<std::string> derivation;
};

struct ShapeResult {
    ShapeClass shape = ShapeClass::NotElementary;
    ShapeWitness witness;
    std::string reason;  // set when NotElementary
};

/// Classifies a rooted single-role interpretation against the shape grammar.
/// Criticality comes from `finite_concept`. Derivation pieces may treat a
/// cluster's guest attachment point as non-critical (the criticality belongs to
/// the cluster piece); everything else uses global criticality.
ShapeResult classify_shape(const RootedInterpretation &i, RoleId role,
                           ConceptId finite_concept);

/// A tree of single-role pieces joined by unique cross edges. pieces[0] is the
/// root piece. Element ids are globally unique across pieces.
struct Piece {
    RootedInterpretation shape;
    std::optional<RoleId> role;        // the single role; nullopt for singletons
    int parent = -1;                   // index into pieces; -1 for the root piece
    ElemId parent_element = kNoId;
    RoleId cross_role = kNoId;
};

struct PiecewiseElementary {
    std::vector<Piece> pieces;

    Interpretation flatten() const;
    ElemId root() const { return pieces.at(0).shape.root; }
};

struct PiecewiseCheck {
    bool ok = true;
    std::string violation;
    explicit operator bool() const { return ok; }
};

/// Checks the piecewise invariants: root piece a singleton, one cross edge per
/// child, the transitive-role escape condition, and single-role pieces.
PiecewiseCheck validate_piecewise(const PiecewiseElementary &g, const Signature &sig,
                                  ConceptId finite_concept);

/// A canonicalized conjunctive query derived from an input disjunct by an atom
/// subset plus a variable identification; `root_var` marks subqueries whose
/// distinguished variable is pinned to a subtree root during decomposition.
struct Subquery {
    ConjunctiveQuery query;
    std::optional<VarId> root_var;

    auto operator<=>(const Subquery &) const = default;
};

/// Closure of the disjuncts under atom subsets and variable identification,
/// canonicalized; contains each full disjunct (unrooted), the empty query, and
/// every rooted variant.
std::set<Subquery> subqueries_of(const Ucq &q);

Subquery canonical_subquery(const ConjunctiveQuery &q, std::optional<VarId> root_var);

/// An existential obligation discharged across a piece boundary: the cross edge
/// goes from `element` via `role` to the root of some fulfilling block.
/// `required_root` must hold at that root; for transitive roles,
/// `required_everywhere` must hold at every element of the fulfilling piece
/// (value restrictions propagate through the closure).
struct Port {
    ElemId element;
    RoleId role;
    UnaryType required_root;
    UnaryType required_everywhere;

    auto operator<=>(const Port &) const = default;
};

/// Type-elimination building block: a singleton or a single-transitive-role
/// elementary shape, with ports and subquery annotations.
struct Block {
    RootedInterpretation shape;
    std::optional<RoleId> role;            // nullopt: singleton block
    std::vector<Port> ports;
    std::set<Subquery> root_annotation;
    std::vector<std::set<Subquery>> port_annotations;  // parallel to ports

    bool singleton() const { return !role.has_value(); }
};

struct BlockCaps {
    int max_shape_size = 3;
    int safety_limit = 12;
    // Annotation lattices are exponential; blocks stream lazily through the
    // callback in enumerate_blocks rather than materializing.
};

struct LabelledShape {
    RootedInterpretation rooted;
    std::map<ElemId, Label> labels;
};

/// Every elementary rooted labelled interpretation over the given transitive
/// role with at most size_cap elements, up to root- and label-preserving
/// isomorphism, in a deterministic order. Types range over `num_concepts`
/// names; criticality is membership of `finite_concept`.
std::vector<LabelledShape> enumerate_elementary(int num_concepts, ConceptId finite_concept,
                                                RoleId role, int size_cap,
                                                const std::vector<Label> &labels,
                                                int safety_limit = 12);

/// Streams blocks for the given KB and UCQ within caps. Shapes × port layouts ×
/// annotation sets; the callback returns false to stop. Returns the number of
/// blocks produced.
long enumerate_blocks(const KnowledgeBase &kb, const Ucq &q, const BlockCaps &caps,
                      const std::function<bool(const Block &)> &sink);

std::string block_to_json(const Block &b, const Signature &sig);

} // namespace pfent

#endif
