#ifndef PFENT_HOMO_HPP
#define PFENT_HOMO_HPP

#include <map>
#include <optional>
#include <set>

#include "pfent/base.hpp"
#include "pfent/interp.hpp"

namespace pfent {

/// Total map from source elements to target elements. Plain homomorphisms
/// preserve concepts, role edges, and named individuals (h(a) = a).
struct Homomorphism {
    std::map<ElemId, ElemId> mapping;

    ElemId operator()(ElemId e) const { return mapping.at(e); }
};

/// Partial map element -> colour.
struct Colouring {
    std::map<ElemId, Colour> colours;

    bool coloured(ElemId e) const { return colours.count(e) > 0; }
    std::optional<Colour> colour(ElemId e) const {
        auto it = colours.find(e);
        return it == colours.end() ? std::nullopt : std::optional<Colour>(it->second);
    }
};

/// Flags for find_homomorphism; attachments must be present for every flag
/// that needs them.
struct HomSpec {
    std::optional<std::pair<ElemId, ElemId>> rooted;  // h(first) = second
    bool labelled = false;
    bool colour_preserving = false;
    std::optional<RoleId> t_strong;
    bool surjective = false;
    std::set<ElemId> fixes;

    const std::map<ElemId, Label> *source_labels = nullptr;
    const std::map<ElemId, Label> *target_labels = nullptr;
    const Colouring *source_colouring = nullptr;
    const Colouring *target_colouring = nullptr;
};

std::optional<Homomorphism> find_homomorphism(const Interpretation &source,
                                              const Interpretation &target,
                                              const HomSpec &spec = {});

/// Checks the plain homomorphism conditions plus any spec flags, atom by atom.
bool verify_homomorphism(const Homomorphism &h, const Interpretation &source,
                         const Interpretation &target, const HomSpec &spec = {});

/// tp(a) = tp(h(a)) and reach_t(a) = reach_t(h(a)) for every source element.
bool verify_t_strong(const Homomorphism &h, const Interpretation &source,
                     const Interpretation &target, RoleId t);

/// Elements at undirected distance <= k from x (BFS over all roles, symmetrized).
std::set<ElemId> k_neighbourhood(const Interpretation &i, ElemId x, int k);

/// x ~_k y: x = y, or both coloured alike and the coloured k-neighbourhoods are
/// homomorphically equivalent via colour-preserving homomorphisms swapping the
/// two roots.
bool neighbourhood_equivalent(const Interpretation &i, const Colouring &col, ElemId x,
                              ElemId y, int k);

struct QuotientResult {
    Interpretation interp;
    Homomorphism projection;  // x -> [x], class named by its minimum element id
};

/// Quotient by an equivalence relation given as element -> class representative
/// (validated). Rejects relations identifying two distinct named individuals.
QuotientResult quotient(const Interpretation &i, const std::map<ElemId, ElemId> &eq_class);

/// No k-neighbourhood contains two distinct coloured elements of equal colour.
bool check_sparse(const Interpretation &i, const Colouring &col, int k);

/// Greedy colouring of `targets` in ascending id order: each gets the smallest
/// colour not present in its 2l-neighbourhood. The result is l-sparse.
Colouring greedy_sparse_colouring(const Interpretation &i, const std::set<ElemId> &targets,
                                  int l);

/// Quotient by ~_K (computed pairwise over equally coloured elements, with
/// memoization). Rejects colourings that are not K-sparse.
QuotientResult blocking_quotient(const Interpretation &i, const Colouring &col, int K);

/// The ~_K equivalence classes themselves, as element -> representative.
std::map<ElemId, ElemId> neighbourhood_classes(const Interpretation &i, const Colouring &col,
                                               int k);

std::string colouring_to_json(const Colouring &col);
Colouring colouring_from_json(const std::string &text);

} // namespace pfent

#endif
