#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "pfent/homo.hpp"
#include "pfent/query.hpp"

using namespace pfent;
using namespace pfent::testing;

namespace {

Interpretation single_node(ConceptId c) {
    Interpretation i;
    i.add_element(0);
    if (c != kNoId)
        i.add_concept(c, 0);
    return i;
}

// alternating A/B chain of `len` nodes with all F's merged into one hub
Interpretation merged_f(Signature &sig, int len) {
    RoleId r = sig.role_id("r") != kNoId ? sig.role_id("r") : sig.intern_role("r", false);
    ConceptId a = sig.intern_concept("A");
    ConceptId b = sig.intern_concept("B");
    ConceptId f = sig.intern_concept("F");
    Interpretation i;
    for (ElemId e = 0; e <= len; ++e)
        i.add_element(e);
    i.add_concept(f, len);
    for (int e = 0; e < len; ++e) {
        i.add_concept(e % 2 == 0 ? a : b, e);
        if (e + 1 < len)
            i.add_edge(r, e, e + 1);
        i.add_edge(r, e, len);
    }
    return i;
}

// same chain with one F per chain node (the figure-1a prefix)
Interpretation split_f(Signature &sig, int len) {
    RoleId r = sig.role_id("r") != kNoId ? sig.role_id("r") : sig.intern_role("r", false);
    ConceptId a = sig.intern_concept("A");
    ConceptId b = sig.intern_concept("B");
    ConceptId f = sig.intern_concept("F");
    Interpretation i;
    for (ElemId e = 0; e < 2 * len; ++e)
        i.add_element(e);
    for (int e = 0; e < len; ++e) {
        i.add_concept(e % 2 == 0 ? a : b, e);
        i.add_concept(f, len + e);
        if (e + 1 < len)
            i.add_edge(r, e, e + 1);
        i.add_edge(r, e, len + e);
    }
    return i;
}

} // namespace

TEST_CASE("a single A-node maps into any interpretation realizing A") {
    Signature sig;
    ConceptId a = sig.intern_concept("A");
    Interpretation source = single_node(a);
    Interpretation target = merged_f(sig, 4);
    auto h = find_homomorphism(source, target);
    REQUIRE(h.has_value());
    CHECK(verify_homomorphism(*h, source, target));
    CHECK(target.in_concept(a, (*h)(0)));
}

TEST_CASE("the identity is a homomorphism of anything onto itself") {
    RandomInterp gen(67);
    for (int round = 0; round < 30; ++round) {
        Interpretation i = gen.next(6, 2, 2);
        Homomorphism id;
        for (ElemId e : i.elements)
            id.mapping[e] = e;
        CHECK(verify_homomorphism(id, i, i));
    }
}

TEST_CASE("split F's map onto the merged hub; colours block the reverse") {
    Signature sig;
    Interpretation split = split_f(sig, 3);
    Interpretation merged = merged_f(sig, 3);
    auto forward = find_homomorphism(split, merged);
    REQUIRE(forward.has_value());
    CHECK(verify_homomorphism(*forward, split, merged));

    // reverse direction with colour-preservation on distinct F colours
    Colouring merged_col;
    merged_col.colours[3] = 0;  // the single hub F
    Colouring split_col;
    split_col.colours[3] = 0;
    split_col.colours[4] = 1;  // distinct colours on the split F's
    split_col.colours[5] = 2;
    HomSpec spec;
    spec.colour_preserving = true;
    spec.source_colouring = &merged_col;
    spec.target_colouring = &split_col;
    CHECK_FALSE(find_homomorphism(merged, split, spec).has_value());
}

TEST_CASE("missing attachments are rejected") {
    Interpretation i = single_node(kNoId);
    HomSpec spec;
    spec.colour_preserving = true;
    CHECK_THROWS_AS(find_homomorphism(i, i, spec), Error);
}

TEST_CASE("verify_t_strong accepts the identity and rejects type collapses") {
    Signature sig;
    RoleId t = sig.intern_role("t", true);
    ConceptId a = sig.intern_concept("A");
    ConceptId b = sig.intern_concept("B");
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.add_concept(a, 0);
    i.add_concept(b, 1);
    i.add_edge(t, 0, 1);
    Homomorphism id;
    id.mapping = {{0, 0}, {1, 1}};
    CHECK(verify_t_strong(id, i, i, t));

    Interpretation target;
    target.add_element(0);
    target.add_concept(a, 0);
    target.add_edge(t, 0, 0);
    Homomorphism collapse;
    collapse.mapping = {{0, 0}, {1, 0}};
    CHECK_FALSE(verify_t_strong(collapse, i, target, t));
}

TEST_CASE("k-neighbourhoods: radius zero, a path, and a 6-cycle") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation path;
    for (ElemId e : {0, 1, 2})
        path.add_element(e);
    path.add_edge(r, 0, 1);
    path.add_edge(r, 1, 2);
    CHECK(k_neighbourhood(path, 1, 0) == std::set<ElemId>{1});
    CHECK(k_neighbourhood(path, 1, 1) == std::set<ElemId>{0, 1, 2});

    Interpretation cycle;
    for (ElemId e = 0; e < 6; ++e)
        cycle.add_element(e);
    for (ElemId e = 0; e < 6; ++e)
        cycle.add_edge(r, e, (e + 1) % 6);
    CHECK(k_neighbourhood(cycle, 0, 2).size() == 5);
}

TEST_CASE("neighbourhood equivalence: reflexive, uncoloured pairs never merge") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.add_edge(r, 0, 1);
    Colouring none;
    CHECK(neighbourhood_equivalent(i, none, 0, 0, 3));
    CHECK_FALSE(neighbourhood_equivalent(i, none, 0, 1, 0));
}

TEST_CASE("equally coloured F's with isomorphic neighbourhoods are equivalent") {
    Signature sig;
    Interpretation i = split_f(sig, 4);  // F nodes 4..7 hang off chain 0..3
    Colouring col;
    col.colours[4] = 0;
    col.colours[6] = 0;  // both A-side F's
    CHECK(neighbourhood_equivalent(i, col, 4, 6, 0));
}

TEST_CASE("quotients: identity, merge-all-F, and parity merge reproduce the figures") {
    Signature sig;
    Interpretation i = split_f(sig, 4);
    ConceptId f = sig.concept_id("F");
    RoleId r = sig.role_id("r");

    std::map<ElemId, ElemId> identity;
    for (ElemId e : i.elements)
        identity[e] = e;
    QuotientResult iso = quotient(i, identity);
    CHECK(iso.interp == i);

    // merge all F-labelled nodes into one
    std::map<ElemId, ElemId> merge_all = identity;
    for (ElemId e : {5, 6, 7})
        merge_all[e] = 4;
    QuotientResult merged = quotient(i, merge_all);
    CHECK(merged.interp.size() == 5);
    REQUIRE(merged.interp.concepts.at(f).size() == 1);
    ElemId hub = *merged.interp.concepts.at(f).begin();
    for (ElemId e = 0; e < 4; ++e)
        CHECK(merged.interp.has_edge(r, e, hub));

    // separately merge those fed from A-nodes and those fed from B-nodes
    std::map<ElemId, ElemId> parity = identity;
    parity[6] = 4;  // A-side
    parity[7] = 5;  // B-side
    QuotientResult split = quotient(i, parity);
    CHECK(split.interp.concepts.at(f).size() == 2);
    CHECK(verify_homomorphism(split.projection, i, split.interp));
}

TEST_CASE("quotients reject non-equivalences and merged individuals") {
    Signature sig;
    IndividualId a = sig.intern_individual("a");
    IndividualId b = sig.intern_individual("b");
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.set_individual(a, 0);
    i.set_individual(b, 1);
    CHECK_THROWS_AS(quotient(i, {{0, 1}, {1, 0}}), Error);  // not idempotent
    CHECK_THROWS_AS(quotient(i, {{0, 0}, {1, 0}}), Error);  // merges individuals
}

TEST_CASE("sparsity: injective colourings pass, adjacent equal colours fail") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation i;
    for (ElemId e : {0, 1, 2})
        i.add_element(e);
    i.add_edge(r, 0, 1);
    i.add_edge(r, 1, 2);
    Colouring injective;
    injective.colours = {{0, 0}, {1, 1}, {2, 2}};
    for (int k = 0; k <= 4; ++k)
        CHECK(check_sparse(i, injective, k));
    Colouring clash;
    clash.colours = {{0, 0}, {1, 0}};
    CHECK(check_sparse(i, clash, 0));
    CHECK_FALSE(check_sparse(i, clash, 1));
}

TEST_CASE("greedy colouring: path c1-c2-c3 at l=1 gets colours 0,1,2") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation i;
    for (ElemId e : {0, 1, 2})
        i.add_element(e);
    i.add_edge(r, 0, 1);
    i.add_edge(r, 1, 2);
    Colouring col = greedy_sparse_colouring(i, {0, 1, 2}, 1);
    CHECK(col.colours == std::map<ElemId, Colour>{{0, 0}, {1, 1}, {2, 2}});
    CHECK(check_sparse(i, col, 1));
}

TEST_CASE("greedy colouring: far-apart targets share colour 0; empty targets") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation i;
    for (ElemId e = 0; e < 6; ++e)
        i.add_element(e);
    for (ElemId e = 0; e + 1 < 6; ++e)
        i.add_edge(r, e, e + 1);
    Colouring col = greedy_sparse_colouring(i, {0, 5}, 1);  // distance 5 > 2
    CHECK(col.colours.at(0) == 0);
    CHECK(col.colours.at(5) == 0);
    CHECK(greedy_sparse_colouring(i, {}, 2).colours.empty());
}

TEST_CASE("greedy colouring output is sparse on random graphs") {
    RandomInterp gen(71);
    for (int round = 0; round < 60; ++round) {
        Interpretation i = gen.next(9, 1, 1, 0.25);
        std::set<ElemId> targets;
        for (ElemId e : i.elements)
            if (e % 2 == 0)
                targets.insert(e);
        for (int l : {1, 2}) {
            Colouring col = greedy_sparse_colouring(i, targets, l);
            CHECK(check_sparse(i, col, l));
        }
    }
}

TEST_CASE("blocking quotient: injective or empty colourings give isomorphic copies") {
    RandomInterp gen(73);
    for (int round = 0; round < 20; ++round) {
        Interpretation i = gen.next(6, 2, 1);
        Colouring injective;
        Colour next = 0;
        for (ElemId e : i.elements)
            injective.colours[e] = next++;
        QuotientResult q = blocking_quotient(i, injective, 2);
        CHECK(q.interp == i);
        QuotientResult bare = blocking_quotient(i, Colouring{}, 2);
        CHECK(bare.interp == i);
    }
}

TEST_CASE("blocking quotient rejects non-sparse colourings") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation i;
    i.add_element(0);
    i.add_element(1);
    i.add_edge(r, 0, 1);
    Colouring clash;
    clash.colours = {{0, 0}, {1, 0}};
    CHECK_THROWS_AS(blocking_quotient(i, clash, 1), Error);
}

TEST_CASE("periodic pattern: ~K classes agree with pairwise equivalence checks") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    ConceptId a = sig.intern_concept("A");
    ConceptId f = sig.intern_concept("F");
    Interpretation i;
    for (ElemId e = 0; e < 9; ++e)
        i.add_element(e);
    // chain 0..5 of A's; F hubs 6,7,8, one per consecutive pair
    for (ElemId e = 0; e < 6; ++e) {
        i.add_concept(a, e);
        if (e + 1 < 6)
            i.add_edge(r, e, e + 1);
        i.add_edge(r, e, 6 + e / 2);
    }
    for (ElemId e : {6, 7, 8})
        i.add_concept(f, e);
    Colouring col;
    col.colours = {{6, 0}, {7, 0}, {8, 0}};
    REQUIRE(check_sparse(i, col, 1));
    QuotientResult q = blocking_quotient(i, col, 1);
    std::map<ElemId, ElemId> classes = neighbourhood_classes(i, col, 1);
    for (ElemId x : {6, 7, 8})
        for (ElemId y : {6, 7, 8})
            if (x < y)
                CHECK((classes.at(x) == classes.at(y)) ==
                      neighbourhood_equivalent(i, col, x, y, 1));
    CHECK(q.interp.concepts.at(f).size() <= 3);
}

TEST_CASE("~k is a symmetric relation refining smaller k, transitive on samples") {
    RandomInterp gen(79);
    std::mt19937_64 rng(80);
    for (int round = 0; round < 25; ++round) {
        Interpretation i = gen.next(7, 1, 1, 0.25);
        Colouring col;
        std::uniform_int_distribution<int> colour_dist(0, 2);
        for (ElemId e : i.elements)
            if (e % 2 == 0)
                col.colours[e] = colour_dist(rng);
        std::vector<ElemId> elems(i.elements.begin(), i.elements.end());
        for (ElemId x : elems) {
            CHECK(neighbourhood_equivalent(i, col, x, x, 2));
            for (ElemId y : elems) {
                CHECK(neighbourhood_equivalent(i, col, x, y, 2) ==
                      neighbourhood_equivalent(i, col, y, x, 2));
                if (neighbourhood_equivalent(i, col, x, y, 2))
                    CHECK(neighbourhood_equivalent(i, col, x, y, 1));
                for (ElemId z : elems)
                    if (neighbourhood_equivalent(i, col, x, y, 1) &&
                        neighbourhood_equivalent(i, col, y, z, 1))
                        CHECK(neighbourhood_equivalent(i, col, x, z, 1));
            }
        }
    }
}

TEST_CASE("distances satisfy the triangle inequality; homomorphisms contract them") {
    RandomInterp gen(83);
    for (int round = 0; round < 40; ++round) {
        Interpretation i = gen.next(6, 1, 2, 0.3);
        std::vector<ElemId> elems(i.elements.begin(), i.elements.end());
        for (ElemId x : elems)
            for (ElemId y : elems)
                for (ElemId z : elems) {
                    int xy = undirected_distance(i, x, y);
                    int yz = undirected_distance(i, y, z);
                    int xz = undirected_distance(i, x, z);
                    if (xy >= 0 && yz >= 0) {
                        REQUIRE(xz >= 0);
                        CHECK(xz <= xy + yz);
                    }
                }
        Interpretation j = gen.next(5, 1, 2, 0.45);
        auto h = find_homomorphism(i, j);
        if (h)
            for (ElemId x : elems)
                for (ElemId y : elems) {
                    int source = undirected_distance(i, x, y);
                    if (source < 0)
                        continue;
                    int target = undirected_distance(j, (*h)(x), (*h)(y));
                    REQUIRE(target >= 0);
                    CHECK(target <= source);
                }
    }
}

TEST_CASE("coloured blocking transfers small-query matches both ways (unit scale)") {
    RandomInterp gen(89);
    std::mt19937_64 rng(90);
    int checked = 0;
    for (int round = 0; round < 300 && checked < 60; ++round) {
        Interpretation i = gen.next(8, 1, 1, 0.2);
        int k = 1 + static_cast<int>(rng() % 2);
        int K = 2 * k * k * k;
        std::set<ElemId> targets;
        for (ElemId e : i.elements)
            if (rng() % 2)
                targets.insert(e);
        Colouring col = greedy_sparse_colouring(i, targets, K);
        REQUIRE(check_sparse(i, col, K));
        QuotientResult q = blocking_quotient(i, col, K);
        ++checked;
        Interpretation query = gen.next(k, 1, 1, 0.5);
        bool into_original = find_homomorphism(query, i).has_value();
        bool into_quotient = find_homomorphism(query, q.interp).has_value();
        CHECK(into_original == into_quotient);
    }
    CHECK(checked == 60);
}

TEST_CASE("surjective homomorphisms and fixes constraints are enforced") {
    Signature sig;
    RoleId r = sig.intern_role("r", false);
    Interpretation big;
    for (ElemId e : {0, 1, 2})
        big.add_element(e);
    big.add_edge(r, 0, 1);
    big.add_edge(r, 1, 2);
    Interpretation small;
    small.add_element(0);
    small.add_element(1);
    small.add_edge(r, 0, 1);
    small.add_edge(r, 1, 0);
    HomSpec surj;
    surj.surjective = true;
    auto h = find_homomorphism(big, small, surj);
    REQUIRE(h.has_value());
    CHECK(verify_homomorphism(*h, big, small, surj));
    CHECK_FALSE(find_homomorphism(small, big, surj).has_value());

    HomSpec fix;
    fix.fixes = {0};
    auto fixed = find_homomorphism(small, small, fix);
    REQUIRE(fixed.has_value());
    CHECK((*fixed)(0) == 0);
}
