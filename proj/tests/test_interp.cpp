#include <doctest.h>

#include "helpers.hpp"
#include "pfent/interp.hpp"

using namespace pfent;
using namespace pfent::testing;

namespace {

Interpretation chain_abc(Signature &sig) {
    sig.intern_role("t", true);
    Interpretation i;
    for (ElemId e : {0, 1, 2})
        i.add_element(e);
    i.add_edge(0, 0, 1);
    i.add_edge(0, 1, 2);
    return i;
}

// reference closure by repeated squaring of the adjacency matrix
std::set<Edge> brute_closure(const std::set<Edge> &edges, const std::set<ElemId> &elems) {
    std::map<ElemId, int> index;
    int n = 0;
    for (ElemId e : elems)
        index[e] = n++;
    std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
    for (const Edge &e : edges)
        m[index[e.first]][index[e.second]] = true;
    for (int round = 0; round < n; ++round) {
        auto next = m;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    if (m[i][k] && m[k][j])
                        next[i][j] = true;
        m = next;
    }
    std::set<Edge> result;
    std::vector<ElemId> back(elems.begin(), elems.end());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m[i][j])
                result.insert({back[i], back[j]});
    return result;
}

} // namespace

TEST_CASE("transitive closure adds the composite edge of a 2-path") {
    Signature sig;
    Interpretation i = chain_abc(sig);
    Interpretation closed = transitive_closure(i, sig);
    CHECK(closed.has_edge(0, 0, 2));
    CHECK(closed.edges(0).size() == 3);
}

TEST_CASE("transitive closure is idempotent") {
    Signature sig;
    Interpretation closed = transitive_closure(chain_abc(sig), sig);
    CHECK(transitive_closure(closed, sig) == closed);
}

TEST_CASE("closing a 2-cycle adds both loops") {
    Signature sig;
    sig.intern_role("t", true);
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.add_edge(0, 0, 1);
    i.add_edge(0, 1, 0);
    Interpretation closed = transitive_closure(i, sig);
    CHECK(closed.has_edge(0, 0, 0));
    CHECK(closed.has_edge(0, 1, 1));
    CHECK(closed.edges(0) == brute_closure(i.edges(0), i.elements));
}

TEST_CASE("closure is idempotent and monotone on random interpretations") {
    RandomInterp gen(41);
    Signature sig;
    sig.intern_role("t", true);
    sig.intern_role("r", false);
    for (int round = 0; round < 200; ++round) {
        Interpretation i = gen.next(8, 2, 2);
        Interpretation closed = transitive_closure(i, sig);
        CHECK(transitive_closure(closed, sig) == closed);
        for (const Edge &e : i.edges(0))
            CHECK(closed.edges(0).count(e) == 1);
        CHECK(closed.edges(1) == i.edges(1));  // non-transitive roles untouched
        CHECK(closed.edges(0) == brute_closure(i.edges(0), i.elements));
    }
}

TEST_CASE("clusters: 2-cycle forms one cluster, chain forms singletons") {
    Signature sig;
    sig.intern_role("t", true);
    ConceptId f = sig.intern_concept("F");
    Interpretation cyc;
    cyc.add_element(0);
    cyc.add_element(1);
    cyc.add_edge(0, 0, 1);
    cyc.add_edge(0, 1, 0);
    std::vector<Cluster> cs = clusters(cyc, 0, f);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].members == std::set<ElemId>{0, 1});
    CHECK_FALSE(cs[0].critical);

    Interpretation chain;
    chain.add_element(0);
    chain.add_element(1);
    chain.add_edge(0, 0, 1);
    std::vector<Cluster> chain_cs = clusters(chain, 0, f);
    CHECK(chain_cs.size() == 2);
}

TEST_CASE("clusters partition the domain and members are mutually reachable") {
    RandomInterp gen(47);
    Signature sig;
    sig.intern_role("t", true);
    ConceptId f = sig.intern_concept("F");
    for (int round = 0; round < 100; ++round) {
        Interpretation i = gen.next(8, 1, 1);
        std::vector<Cluster> cs = clusters(i, 0, f);
        std::set<ElemId> covered;
        for (const Cluster &c : cs) {
            for (ElemId e : c.members)
                CHECK(covered.insert(e).second);
            // mutual reachability by path search over the closure
            Interpretation closed = transitive_closure_role(i, 0);
            for (ElemId u : c.members)
                for (ElemId v : c.members)
                    if (u != v)
                        CHECK(closed.has_edge(0, u, v));
        }
        CHECK(covered == i.elements);
    }
}

TEST_CASE("the figure-2 critical cluster is the single F element") {
    // A -> B1, A -> B2, B1 -> C, B2 -> C, C -> F, F -> B3, F -> C2, B3 -> A2, C2 -> A2
    Signature sig;
    sig.intern_role("t", true);
    ConceptId f = sig.intern_concept("F");
    Interpretation i;
    for (ElemId e = 0; e < 9; ++e)
        i.add_element(e);
    i.add_concept(f, 4);
    for (Edge e : std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4},
                                    {4, 5}, {4, 6}, {5, 7}, {6, 8}})
        i.add_edge(0, e.first, e.second);
    for (const Cluster &c : clusters(i, 0, f)) {
        if (c.members.count(4)) {
            CHECK(c.members == std::set<ElemId>{4});
            CHECK(c.critical);
        } else {
            CHECK_FALSE(c.critical);
        }
    }
}

TEST_CASE("reach_t: chain, self-loop, and 2-cycle behave per the definition") {
    Signature sig;
    sig.intern_role("t", true);
    ConceptId b = sig.intern_concept("B");
    ConceptId c = sig.intern_concept("C");
    Interpretation chain;
    for (ElemId e : {0, 1, 2})
        chain.add_element(e);
    chain.add_concept(b, 1);
    chain.add_concept(c, 2);
    chain.add_edge(0, 0, 1);
    chain.add_edge(0, 1, 2);
    CHECK(reach_t(chain, 0, 0) == std::set<ConceptId>{b, c});

    Interpretation loop;
    loop.add_element(0);
    ConceptId a = sig.intern_concept("A");
    loop.add_concept(a, 0);
    loop.add_edge(0, 0, 0);
    CHECK(reach_t(loop, 0, 0).empty());  // A^I minus {u} is empty

    Interpretation cyc;
    cyc.add_element(0);
    cyc.add_element(1);
    cyc.add_concept(a, 0);
    cyc.add_concept(a, 1);
    cyc.add_edge(0, 0, 1);
    cyc.add_edge(0, 1, 0);
    CHECK(reach_t(cyc, 0, 0) == std::set<ConceptId>{a});
}

TEST_CASE("reach via the definition equals direct-successor inspection on the closure") {
    RandomInterp gen(53);
    Signature sig;
    sig.intern_role("t", true);
    for (int round = 0; round < 100; ++round) {
        Interpretation i = gen.next(7, 2, 1);
        Interpretation closed = transitive_closure_role(i, 0);
        for (ElemId u : i.elements) {
            std::set<ConceptId> by_definition = reach_t(i, u, 0);
            std::set<ConceptId> by_successors;
            for (ElemId v : closed.successors(0, u))
                if (v != u)
                    for (ConceptId c : element_type(closed, v))
                        by_successors.insert(c);
            CHECK(by_definition == by_successors);
        }
    }
}

namespace {

// the 4-element chain-KB countermodel: a in A, b in B, fa and fb in F
Interpretation chain_countermodel(const KnowledgeBase &kb) {
    const Signature &sig = kb.signature;
    Interpretation i;
    for (ElemId e : {0, 1, 2, 3})
        i.add_element(e);
    i.add_concept(sig.concept_id("A"), 0);
    i.add_concept(sig.concept_id("B"), 1);
    i.add_concept(sig.concept_id("F"), 2);
    i.add_concept(sig.concept_id("F"), 3);
    RoleId r = sig.role_id("r");
    i.add_edge(r, 0, 1);
    i.add_edge(r, 1, 0);
    i.add_edge(r, 0, 2);
    i.add_edge(r, 1, 3);
    i.set_individual(sig.individual_id("a"), 0);
    return i;
}

} // namespace

TEST_CASE("check_model accepts the 4-element chain countermodel") {
    KnowledgeBase kb = parse_and_normalize_kb(kChainKb);
    Interpretation i = chain_countermodel(kb);
    ModelCheckResult result = check_model(i, kb);
    CHECK(result.ok);
}

TEST_CASE("check_model pinpoints a missing witness") {
    KnowledgeBase kb = parse_and_normalize_kb(kChainKb);
    Interpretation i = chain_countermodel(kb);
    i.roles[kb.signature.role_id("r")].erase({1, 0});
    ModelCheckResult result = check_model(i, kb);
    REQUIRE_FALSE(result.ok);
    CHECK(result.violation->witness == 1);
    CHECK(result.violation->description.find("some") != std::string::npos);
}

TEST_CASE("check_model rejects an unclosed transitive role") {
    KnowledgeBase kb = parse_and_normalize_kb("trans t\ntbox:\nabox:\n");
    Interpretation i;
    for (ElemId e : {0, 1, 2})
        i.add_element(e);
    RoleId t = kb.signature.role_id("t");
    i.add_edge(t, 0, 1);
    i.add_edge(t, 1, 2);
    ModelCheckResult result = check_model(i, kb);
    REQUIRE_FALSE(result.ok);
    CHECK(result.violation->description.find("transitivity") != std::string::npos);
}

TEST_CASE("check_model is invariant under element renaming") {
    KnowledgeBase kb = parse_and_normalize_kb(kChainKb);
    Interpretation i = chain_countermodel(kb);
    // rename e -> e + 10
    Interpretation renamed;
    for (ElemId e : i.elements)
        renamed.add_element(e + 10);
    for (const auto &[c, ext] : i.concepts)
        for (ElemId e : ext)
            renamed.add_concept(c, e + 10);
    for (const auto &[r, edges] : i.roles)
        for (const Edge &e : edges)
            renamed.add_edge(r, e.first + 10, e.second + 10);
    for (const auto &[a, e] : i.individual_of)
        renamed.set_individual(a, e + 10);
    CHECK(check_model(renamed, kb).ok == check_model(i, kb).ok);
}

TEST_CASE("induced substructures and unions") {
    Signature sig;
    sig.intern_role("t", true);
    ConceptId a = sig.intern_concept("A");
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.add_concept(a, 0);
    i.add_edge(0, 0, 1);

    CHECK(induced(i, i.elements) == i);
    Interpretation empty = induced(i, {});
    CHECK(empty.elements.empty());

    Interpretation j;
    j.add_element(2);
    Interpretation u = interp_union(i, j);
    CHECK(u.size() == 3);
    CHECK(interp_union(i, i) == i);

    // overlap in one element: counts add up minus the shared one
    Interpretation k;
    k.add_element(1);
    k.add_element(5);
    k.add_edge(0, 1, 5);
    Interpretation shared = interp_union(i, k);
    CHECK(shared.size() == i.size() + k.size() - 1);
}

TEST_CASE("element types") {
    Signature sig;
    ConceptId a = sig.intern_concept("A");
    ConceptId f = sig.intern_concept("F");
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.add_element(2);
    i.add_concept(a, 0);
    i.add_concept(a, 2);
    i.add_concept(f, 2);
    CHECK(element_type(i, 0) == UnaryType{a});
    CHECK(element_type(i, 1).empty());
    CHECK(element_type(i, 2) == UnaryType{a, f});
}

TEST_CASE("interpretation JSON round-trips through the dump format") {
    KnowledgeBase kb = parse_and_normalize_kb(kChainKb);
    Interpretation i = chain_countermodel(kb);
    std::string dumped = interp_to_json(i, kb.signature);
    Signature sig2 = kb.signature;
    Interpretation back = interp_from_json(dumped, sig2);
    CHECK(back == i);
    CHECK(interp_to_json(back, sig2) == dumped);
}

TEST_CASE("DOT emission mentions every element and edge label") {
    KnowledgeBase kb = parse_and_normalize_kb(kChainKb);
    Interpretation i = chain_countermodel(kb);
    std::string dot = interp_to_dot(i, kb.signature);
    CHECK(dot.find("n0") != std::string::npos);
    CHECK(dot.find("label=\"r\"") != std::string::npos);
}
