#ifndef PFENT_INTERP_HPP
#define PFENT_INTERP_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pfent/base.hpp"
#include "pfent/kb.hpp"

namespace pfent {

using Edge = std::pair<ElemId, ElemId>;
using UnaryType = std::set<ConceptId>;

/// A finite interpretation: node/edge-labelled directed multigraph. Concept and
/// role extensions are sets, so there is at most one edge per role per ordered
/// pair. Element ids are global identity (induced substructures and unions keep
/// them); individuals map injectively to elements (Standard Name Assumption).
struct Interpretation {
    std::set<ElemId> elements;
    std::map<ConceptId, std::set<ElemId>> concepts;
    std::map<RoleId, std::set<Edge>> roles;
    std::map<IndividualId, ElemId> individual_of;

    void add_element(ElemId e) { elements.insert(e); }
    void add_concept(ConceptId c, ElemId e);
    void add_edge(RoleId r, ElemId u, ElemId v);
    void set_individual(IndividualId a, ElemId e);

    bool has_element(ElemId e) const { return elements.count(e) > 0; }
    bool in_concept(ConceptId c, ElemId e) const;
    bool has_edge(RoleId r, ElemId u, ElemId v) const;
    const std::set<Edge> &edges(RoleId r) const;
    std::vector<ElemId> successors(RoleId r, ElemId u) const;
    std::vector<ElemId> predecessors(RoleId r, ElemId v) const;
    ElemId max_element() const;
    size_t size() const { return elements.size(); }

    bool operator==(const Interpretation &) const = default;
};

struct RootedInterpretation {
    Interpretation interp;
    ElemId root = kNoId;
};

struct LabelledInterpretation {
    Interpretation interp;
    std::map<ElemId, Label> labels;  // total on elements
};

/// An SCC of a single-role graph; critical iff it contains an element of F's
/// extension.
struct Cluster {
    std::set<ElemId> members;
    bool critical = false;
};

struct Violation {
    std::string description;
    std::optional<ElemId> witness;
};

struct ModelCheckResult {
    bool ok = true;
    std::optional<Violation> violation;
    explicit operator bool() const { return ok; }
};

/// t* for every transitive role of the signature; everything else unchanged.
Interpretation transitive_closure(const Interpretation &i, const Signature &sig);

/// Closure of a single role regardless of its transitivity tag.
Interpretation transitive_closure_role(const Interpretation &i, RoleId role);

bool is_transitively_closed(const Interpretation &i, RoleId role);

/// SCC partition of the graph of `role`, with criticality from `finite_concept`.
std::vector<Cluster> clusters(const Interpretation &i, RoleId role, ConceptId finite_concept);

/// Concept names reachable from u via >= 1 t-step, excluding u itself as a
/// witness: { A : (A^I minus {u}) meets the set of t-reachable nodes }.
std::set<ConceptId> reach_t(const Interpretation &i, ElemId u, RoleId t);

ModelCheckResult check_model(const Interpretation &i, const KnowledgeBase &kb);

Interpretation induced(const Interpretation &i, const std::set<ElemId> &domain);

/// Pointwise union; overlapping element ids denote the same element. Throws on
/// conflicting individual assignments.
Interpretation interp_union(const Interpretation &i1, const Interpretation &i2);

UnaryType element_type(const Interpretation &i, ElemId e);

/// Elements whose type contains the given concept.
std::set<ElemId> critical_elements(const Interpretation &i, ConceptId finite_concept);

/// Undirected distance over the union of all roles (for k-neighbourhoods).
/// Returns -1 for unreachable pairs.
int undirected_distance(const Interpretation &i, ElemId x, ElemId y);

std::string interp_to_json(const Interpretation &i, const Signature &sig);
Interpretation interp_from_json(const std::string &json_text, Signature &sig);
std::string interp_to_dot(const Interpretation &i, const Signature &sig);

} // namespace pfent

#endif
