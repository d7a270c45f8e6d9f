#include "pfent/oracle.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

namespace pfent {

namespace {

constexpr int kMaxElems = 10;
constexpr int kMaxRoles = 4;

struct CompiledConjDisj {
    uint32_t lhs;
    uint32_t rhs;
};

struct CompiledRoleAxiom {
    int role;
    uint32_t a;
    uint32_t b;
};

struct CompiledAtom {
    bool unary;
    int predicate;
    int x, y;
};

struct CompiledCq {
    int num_vars;
    std::vector<CompiledAtom> atoms;
};

struct Searcher {
    const KnowledgeBase &kb;
    int num_roles;
    int num_inds;
    int m = 0;

    std::vector<CompiledConjDisj> conj_disj;
    std::vector<CompiledRoleAxiom> all_values;
    std::vector<CompiledRoleAxiom> some_values;
    std::vector<bool> some_feasible;
    std::vector<CompiledCq> queries;
    std::vector<uint32_t> allowed_types;
    std::vector<uint32_t> required_type;           // per individual
    std::vector<std::array<int, 3>> role_asserts;  // (role, from, to)
    std::vector<bool> transitive;

    uint32_t type[kMaxElems] = {};
    uint16_t out[kMaxRoles][kMaxElems] = {};
    uint16_t in[kMaxRoles][kMaxElems] = {};

    bool edge(int r, int u, int v) const { return (out[r][u] >> v) & 1; }
    void set_edge(int r, int u, int v) {
        out[r][u] |= uint16_t(1) << v;
        in[r][v] |= uint16_t(1) << u;
    }
    void clear_edges(int r, int i) {
        for (int j = 0; j <= i; ++j) {
            out[r][j] &= ~(uint16_t(1) << i);
            in[r][j] &= ~(uint16_t(1) << i);
        }
        out[r][i] = 0;
        in[r][i] = 0;
    }

    bool type_allowed(uint32_t t) const {
        for (const auto &ax : conj_disj)
            if ((t & ax.lhs) == ax.lhs && (t & ax.rhs) == 0)
                return false;
        return true;
    }

    // no chance of ever witnessing some r.B: no allowed type realizes B
    bool hopeless(uint32_t t) const {
        for (size_t k = 0; k < some_values.size(); ++k)
            if ((t & some_values[k].a) == some_values[k].a && !some_feasible[k])
                return true;
        return false;
    }

    bool transitivity_ok(int i) const {
        for (int r = 0; r < num_roles; ++r) {
            if (!transitive[r])
                continue;
            for (int u = 0; u <= i; ++u)
                for (int v = 0; v <= i; ++v) {
                    if (edge(r, u, i) && edge(r, i, v) && !edge(r, u, v))
                        return false;
                    if (edge(r, u, v) && edge(r, v, i) && !edge(r, u, i))
                        return false;
                    if (edge(r, i, u) && edge(r, u, v) && !edge(r, i, v))
                        return false;
                }
        }
        return true;
    }

    bool all_values_ok(int i) const {
        for (const auto &ax : all_values) {
            for (int u = 0; u <= i; ++u) {
                if (edge(ax.role, u, i) && (type[u] & ax.a) == ax.a && (type[i] & ax.b) != ax.b)
                    return false;
                if (edge(ax.role, i, u) && (type[i] & ax.a) == ax.a && (type[u] & ax.b) != ax.b)
                    return false;
            }
        }
        return true;
    }

    bool asserts_ok(int i) const {
        for (const auto &[r, a, b] : role_asserts)
            if (std::max(a, b) == i && !edge(r, a, b))
                return false;
        return true;
    }

    // a fresh match of some disjunct that uses element i would doom every extension
    bool query_matches_with(int i) const {
        for (const CompiledCq &cq : queries) {
            if (cq.num_vars == 0)
                continue;  // empty CQ handled up front
            std::array<int, 8> assignment{};
            if (try_match(cq, 0, assignment, false, i))
                return true;
        }
        return false;
    }

    bool try_match(const CompiledCq &cq, int var, std::array<int, 8> &assignment,
                   bool used_new, int i) const {
        if (var == cq.num_vars)
            return used_new;
        for (int e = 0; e <= i; ++e) {
            assignment[var] = e;
            bool ok = true;
            for (const auto &atom : cq.atoms) {
                if (atom.unary) {
                    if (atom.x == var && (type[e] & (uint32_t(1) << atom.predicate)) == 0) {
                        ok = false;
                        break;
                    }
                } else {
                    if (atom.x <= var && atom.y <= var &&
                        (atom.x == var || atom.y == var) &&
                        !edge(atom.predicate, assignment[atom.x], assignment[atom.y])) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok && try_match(cq, var + 1, assignment, used_new || e == i, i))
                return true;
        }
        return false;
    }

    bool some_values_complete() const {
        for (const auto &ax : some_values)
            for (int u = 0; u < m; ++u) {
                if ((type[u] & ax.a) != ax.a)
                    continue;
                bool witnessed = false;
                for (int v = 0; v < m && !witnessed; ++v)
                    if (edge(ax.role, u, v) && (type[v] & ax.b) == ax.b)
                        witnessed = true;
                if (!witnessed)
                    return false;
            }
        return true;
    }

    // lexicographic encoding of the prefix under a permutation of the
    // non-individual elements; compares against identity for orderly pruning
    bool prefix_minimal(int i) const {
        int free_count = i - num_inds + 1;
        if (free_count < 2)
            return true;
        std::array<int, kMaxElems> perm{};
        for (int j = 0; j <= i; ++j)
            perm[j] = j;
        std::vector<int> ident = encode(i, perm);
        std::array<int, kMaxElems> p = perm;
        while (std::next_permutation(p.begin() + num_inds, p.begin() + i + 1)) {
            if (!order_valid(i, p))
                continue;
            if (encode(i, p) < ident)
                return false;
        }
        return true;
    }

    // perm[slot] = original element placed at this slot
    bool order_valid(int i, const std::array<int, kMaxElems> &perm) const {
        for (int slot = num_inds; slot <= i; ++slot) {
            bool has_in = false;
            for (int prev = 0; prev < slot && !has_in; ++prev)
                for (int r = 0; r < num_roles && !has_in; ++r)
                    if (edge(r, perm[prev], perm[slot]))
                        has_in = true;
            if (!has_in)
                return false;
        }
        return true;
    }

    std::vector<int> encode(int i, const std::array<int, kMaxElems> &perm) const {
        std::vector<int> code;
        code.reserve((i + 1) * (1 + num_roles * 2));
        for (int slot = 0; slot <= i; ++slot) {
            code.push_back(static_cast<int>(type[perm[slot]]));
            for (int r = 0; r < num_roles; ++r) {
                int bits_out = 0, bits_in = 0;
                for (int prev = 0; prev <= slot; ++prev) {
                    bits_out = (bits_out << 1) | (edge(r, perm[slot], perm[prev]) ? 1 : 0);
                    bits_in = (bits_in << 1) | (edge(r, perm[prev], perm[slot]) ? 1 : 0);
                }
                code.push_back(bits_out);
                code.push_back(bits_in);
            }
        }
        return code;
    }

    bool found = false;
    bool count_mode = false;
    long solutions = 0;
    Interpretation result;

    void capture() {
        result = Interpretation();
        for (int e = 0; e < m; ++e)
            result.add_element(e);
        for (ConceptId c = 0; c < kb.signature.num_concepts(); ++c)
            for (int e = 0; e < m; ++e)
                if (type[e] & (uint32_t(1) << c))
                    result.add_concept(c, e);
        for (int r = 0; r < num_roles; ++r)
            for (int u = 0; u < m; ++u)
                for (int v = 0; v < m; ++v)
                    if (edge(r, u, v))
                        result.add_edge(r, u, v);
        for (IndividualId a = 0; a < num_inds; ++a)
            result.set_individual(a, a);
    }

    bool assign(int i) {
        if (i == m) {
            if (!some_values_complete())
                return false;
            if (count_mode) {
                ++solutions;
                return false;  // keep searching
            }
            capture();
            return true;
        }
        const bool is_individual = i < num_inds;
        for (uint32_t t : allowed_types) {
            if (is_individual && (t & required_type[i]) != required_type[i])
                continue;
            if (hopeless(t))
                continue;
            type[i] = t;
            int slots = num_roles * (2 * i + 1);
            if (slots >= 31)
                throw Error("oracle: element/role budget too large for edge enumeration");
            for (uint32_t combo = 0; combo < (uint32_t(1) << slots); ++combo) {
                uint32_t bits = combo;
                for (int r = 0; r < num_roles; ++r)
                    clear_edges(r, i);
                for (int r = 0; r < num_roles; ++r) {
                    if (bits & 1)
                        set_edge(r, i, i);
                    bits >>= 1;
                    for (int j = 0; j < i; ++j) {
                        if (bits & 1)
                            set_edge(r, j, i);
                        bits >>= 1;
                        if (bits & 1)
                            set_edge(r, i, j);
                        bits >>= 1;
                    }
                }
                if (!is_individual) {
                    bool has_in = false;
                    for (int j = 0; j < i && !has_in; ++j)
                        for (int r = 0; r < num_roles && !has_in; ++r)
                            if (edge(r, j, i))
                                has_in = true;
                    if (!has_in && i > 0)
                        continue;
                }
                if (!asserts_ok(i))
                    continue;
                if (!transitivity_ok(i))
                    continue;
                if (!all_values_ok(i))
                    continue;
                if (query_matches_with(i))
                    continue;
                if ((count_mode || i + 1 < m) && !prefix_minimal(i))
                    continue;
                if (assign(i + 1))
                    return true;
            }
        }
        for (int r = 0; r < num_roles; ++r)
            clear_edges(r, i);
        return false;
    }
};

} // namespace

namespace {

// fills the compiled tables; false when the query is trivially satisfied
// everywhere (an atomless disjunct), so no countermodel can exist
bool prepare_searcher(Searcher &s, const KnowledgeBase &kb, const Ucq &q);

} // namespace

std::optional<Interpretation> bounded_countermodel_search(const KnowledgeBase &kb,
                                                          const Ucq &q,
                                                          const OracleOptions &opts) {
    if (opts.max_size > opts.safety_limit && !safety_override_enabled())
        throw Error("oracle: max_size exceeds the safety limit; set PFENT_SAFETY_OVERRIDE=1");
    if (kb.signature.num_concepts() > 30 || kb.signature.num_roles() > kMaxRoles)
        throw Error("oracle: signature too large for the bounded search");
    if (opts.max_size > kMaxElems)
        throw Error("oracle: max_size exceeds the hard element limit");

    Searcher s{kb};
    if (!prepare_searcher(s, kb, q))
        return std::nullopt;

    int min_size = std::max(s.num_inds, 1);
    for (int m = min_size; m <= opts.max_size; ++m) {
        s.m = m;
        if (s.assign(0)) {
            if (!verify_countermodel(s.result, kb, q))
                throw Error("oracle: candidate failed re-verification (internal)");
            return s.result;
        }
    }
    return std::nullopt;
}

long count_countermodels(const KnowledgeBase &kb, const Ucq &q, int size) {
    if (size > kMaxElems)
        throw Error("oracle: size exceeds the hard element limit");
    Searcher s{kb};
    if (!prepare_searcher(s, kb, q))
        return 0;
    s.count_mode = true;
    s.m = size;
    if (size < std::max(s.num_inds, 1))
        return 0;
    s.assign(0);
    return s.solutions;
}

namespace {

bool prepare_searcher(Searcher &s, const KnowledgeBase &kb, const Ucq &q) {
    s.num_roles = kb.signature.num_roles();
    s.num_inds = kb.signature.num_individuals();

    for (const Axiom &ax : kb.tbox) {
        switch (ax.kind) {
        case Axiom::Kind::ConjDisj: {
            CompiledConjDisj c{0, 0};
            for (ConceptId id : ax.lhs)
                c.lhs |= uint32_t(1) << id;
            for (ConceptId id : ax.rhs)
                c.rhs |= uint32_t(1) << id;
            s.conj_disj.push_back(c);
            break;
        }
        case Axiom::Kind::AllValues:
            s.all_values.push_back({ax.role, uint32_t(1) << ax.a, uint32_t(1) << ax.b});
            break;
        case Axiom::Kind::SomeValues:
            s.some_values.push_back({ax.role, uint32_t(1) << ax.a, uint32_t(1) << ax.b});
            break;
        }
    }
    for (RoleId r = 0; r < s.num_roles; ++r)
        s.transitive.push_back(kb.signature.role_transitive(r));

    // any element whose type realizes a single-unary-atom disjunct is an
    // immediate match, so such concepts are banned outright
    uint32_t banned = 0;
    for (const ConjunctiveQuery &cq : q.disjuncts) {
        if (cq.atoms.size() == 1 && cq.atoms[0].unary && cq.num_variables() == 1)
            banned |= uint32_t(1) << cq.atoms[0].predicate;
        if (cq.atoms.empty())
            return false;  // the empty CQ matches every interpretation
        CompiledCq compiled;
        compiled.num_vars = cq.num_variables();
        for (const auto &atom : cq.atoms)
            compiled.atoms.push_back({atom.unary, atom.predicate, atom.x, atom.y});
        s.queries.push_back(std::move(compiled));
    }

    for (uint32_t t = 0; t < (uint32_t(1) << kb.signature.num_concepts()); ++t)
        if ((t & banned) == 0 && s.type_allowed(t))
            s.allowed_types.push_back(t);
    for (const auto &ax : s.some_values) {
        bool feasible = false;
        for (uint32_t t : s.allowed_types)
            if ((t & ax.b) == ax.b) {
                feasible = true;
                break;
            }
        s.some_feasible.push_back(feasible);
    }

    s.required_type.assign(std::max(s.num_inds, 1), 0);
    for (const Assertion &as : kb.abox) {
        if (as.is_role())
            s.role_asserts.push_back({as.role, as.first, as.second});
        else
            s.required_type[as.first] |= uint32_t(1) << as.concept_;
    }
    return true;
}

} // namespace

bool verify_countermodel(const Interpretation &i, const KnowledgeBase &kb, const Ucq &q) {
    return check_model(i, kb).ok && !evaluate_ucq(q, i).satisfied;
}

} // namespace pfent
