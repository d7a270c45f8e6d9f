#ifndef PFENT_TESTS_HELPERS_HPP
#define PFENT_TESTS_HELPERS_HPP

#include <random>
#include <string>

#include "pfent/concepts.hpp"
#include "pfent/interp.hpp"
#include "pfent/kb.hpp"
#include "pfent/query.hpp"

namespace pfent::testing {

// The introduction's knowledge base: { A <= some r . B, B <= some r . A,
// (A | B) <= some r . F } with ABox { A(a) } and F finite.
inline const char *kChainKb = R"(role r
finite F
tbox:
A <= some r . B
B <= some r . A
(A | B) <= some r . F
abox:
A(a)
)";

inline const char *kQ1 = "cq q1: r(x,y), r(x,z), r(y,z)\n";
inline const char *kQ2 = "cq q2: r(x,y), r(y,z), r(x,w), r(z,w)\n";

// Evaluates a raw concept over an interpretation (independent of the
// normalized evaluation path in check_model).
inline std::set<ElemId> concept_extension(const ConceptExpr &c, const Interpretation &i) {
    std::set<ElemId> result;
    switch (c->kind) {
    case ConceptNode::Kind::Bot:
        return result;
    case ConceptNode::Kind::Top:
        return i.elements;
    case ConceptNode::Kind::Name: {
        auto it = i.concepts.find(c->name);
        return it == i.concepts.end() ? result : it->second;
    }
    case ConceptNode::Kind::Not: {
        std::set<ElemId> inner = concept_extension(c->left, i);
        for (ElemId e : i.elements)
            if (!inner.count(e))
                result.insert(e);
        return result;
    }
    case ConceptNode::Kind::And: {
        std::set<ElemId> l = concept_extension(c->left, i);
        std::set<ElemId> r = concept_extension(c->right, i);
        for (ElemId e : l)
            if (r.count(e))
                result.insert(e);
        return result;
    }
    case ConceptNode::Kind::Or: {
        result = concept_extension(c->left, i);
        std::set<ElemId> r = concept_extension(c->right, i);
        result.insert(r.begin(), r.end());
        return result;
    }
    case ConceptNode::Kind::Exists: {
        std::set<ElemId> filler = concept_extension(c->left, i);
        for (ElemId e : i.elements)
            for (ElemId v : i.successors(c->role, e))
                if (filler.count(v)) {
                    result.insert(e);
                    break;
                }
        return result;
    }
    case ConceptNode::Kind::Forall: {
        std::set<ElemId> filler = concept_extension(c->left, i);
        for (ElemId e : i.elements) {
            bool all = true;
            for (ElemId v : i.successors(c->role, e))
                if (!filler.count(v)) {
                    all = false;
                    break;
                }
            if (all)
                result.insert(e);
        }
        return result;
    }
    }
    return result;
}

// Satisfaction of raw inclusions plus transitivity and the ABox; the brute
// counterpart of check_model for unnormalized axioms.
inline bool satisfies_raw(const Interpretation &i, const KnowledgeBase &kb) {
    for (RoleId t : kb.signature.transitive_roles())
        if (!is_transitively_closed(i, t))
            return false;
    for (const RawAxiom &ax : kb.raw_tbox) {
        std::set<ElemId> lhs = concept_extension(ax.first, i);
        std::set<ElemId> rhs = concept_extension(ax.second, i);
        for (ElemId e : lhs)
            if (!rhs.count(e))
                return false;
    }
    for (const Assertion &as : kb.abox) {
        auto it = i.individual_of.find(as.first);
        if (it == i.individual_of.end())
            return false;
        if (as.is_role()) {
            auto second = i.individual_of.find(as.second);
            if (second == i.individual_of.end() ||
                !i.has_edge(as.role, it->second, second->second))
                return false;
        } else if (!i.in_concept(as.concept_, it->second)) {
            return false;
        }
    }
    return true;
}

// Deterministic random interpretations for property tests.
struct RandomInterp {
    std::mt19937_64 rng;

    explicit RandomInterp(uint64_t seed) : rng(seed) {}

    Interpretation next(int max_elems, int num_concepts, int num_roles,
                        double edge_density = 0.3, double concept_density = 0.4) {
        std::uniform_int_distribution<int> size_dist(1, max_elems);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        Interpretation i;
        int n = size_dist(rng);
        for (int e = 0; e < n; ++e)
            i.add_element(e);
        for (int c = 0; c < num_concepts; ++c)
            for (int e = 0; e < n; ++e)
                if (coin(rng) < concept_density)
                    i.add_concept(c, e);
        for (int r = 0; r < num_roles; ++r)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v)
                    if (coin(rng) < edge_density)
                        i.add_edge(r, u, v);
        return i;
    }
};

} // namespace pfent::testing

#endif
