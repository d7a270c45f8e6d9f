#include "pfent/elementary.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include <json.hpp>

namespace pfent {

bool is_elementary(ShapeClass c) { return c != ShapeClass::NotElementary; }

std::string shape_class_name(ShapeClass c) {
    switch (c) {
    case ShapeClass::Singleton: return "singleton";
    case ShapeClass::Cycle: return "cycle";
    case ShapeClass::CriticalCluster: return "critical-cluster";
    case ShapeClass::LoopTree: return "loop-tree";
    case ShapeClass::Elementary: return "elementary";
    case ShapeClass::NotElementary: return "not-elementary";
    }
    return "?";
}

namespace {

std::set<ElemId> directed_reach(const Interpretation &i, RoleId role, ElemId start,
                                const std::set<ElemId> &domain) {
    std::set<ElemId> visited{start};
    std::deque<ElemId> queue{start};
    while (!queue.empty()) {
        ElemId u = queue.front();
        queue.pop_front();
        for (const Edge &e : i.edges(role))
            if (e.first == u && domain.count(e.second) && visited.insert(e.second).second)
                queue.push_back(e.second);
    }
    return visited;
}

struct ShapeChecker {
    const Interpretation &interp;
    RoleId role;
    std::set<ElemId> criticals;
    ShapeWitness witness;
    std::string reason;

    bool fail(const std::string &why) {
        if (reason.empty())
            reason = why;
        return false;
    }

    std::set<ElemId> scc_of(ElemId r, const std::set<ElemId> &domain) const {
        std::set<ElemId> forward = directed_reach(interp, role, r, domain);
        std::set<ElemId> component;
        for (ElemId v : forward) {
            if (v == r) {
                component.insert(v);
                continue;
            }
            std::set<ElemId> back = directed_reach(interp, role, v, domain);
            if (back.count(r))
                component.insert(v);
        }
        return component;
    }

    bool shared_parts_ok(const std::vector<std::set<ElemId>> &domains) {
        for (size_t a = 0; a < domains.size(); ++a)
            for (size_t b = a + 1; b < domains.size(); ++b) {
                std::set<ElemId> inter;
                std::set_intersection(domains[a].begin(), domains[a].end(),
                                      domains[b].begin(), domains[b].end(),
                                      std::inserter(inter, inter.begin()));
                if (inter.empty())
                    continue;
                // non-critical sharing must live below a shared critical (the
                // glued guest of rule 2 is reachable from its glue point)
                std::set<ElemId> owned;
                for (ElemId c : inter)
                    if (criticals.count(c)) {
                        std::set<ElemId> below = directed_reach(interp, role, c, inter);
                        owned.insert(below.begin(), below.end());
                    }
                for (ElemId e : inter)
                    if (!criticals.count(e) && !owned.count(e))
                        return fail("branches share a non-critical element " +
                                    std::to_string(e));
            }
        return true;
    }

    bool check(ElemId r, const std::set<ElemId> &domain, bool allow_guests, int depth) {
        if (depth > 200)
            return fail("nesting too deep");
        if (domain.size() == 1) {
            bool loop = interp.has_edge(role, r, r);
            if (!loop) {
                witness.derivation.push_back("singleton " + std::to_string(r));
                return true;  // bare singleton leaf, critical or not
            }
            if (criticals.count(r)) {
                if (!allow_guests)
                    return fail("looped critical element inside a loop tree");
                witness.derivation.push_back("critical cluster {" + std::to_string(r) + "}");
                return true;
            }
            witness.derivation.push_back("cycle {" + std::to_string(r) + "}");
            return true;
        }

        std::set<ElemId> component = scc_of(r, domain);
        bool component_critical = false;
        for (ElemId v : component)
            if (criticals.count(v))
                component_critical = true;

        if (component_critical) {
            if (!allow_guests)
                return fail("critical cluster inside a loop tree");
            // cluster piece; one optional guest fan at a single element
            std::set<ElemId> rest;
            for (ElemId v : domain)
                if (!component.count(v))
                    rest.insert(v);
            std::set<ElemId> sources;
            std::set<ElemId> targets;
            for (const Edge &e : interp.edges(role))
                if (component.count(e.first) && rest.count(e.second)) {
                    sources.insert(e.first);
                    targets.insert(e.second);
                }
            if (sources.size() > 1)
                return fail("cluster hangs guests from several elements");
            witness.derivation.push_back("critical cluster of " +
                                         std::to_string(component.size()) + " at " +
                                         std::to_string(r));
            std::vector<std::set<ElemId>> subdomains;
            for (ElemId x : targets) {
                std::set<ElemId> sub = directed_reach(interp, role, x, rest);
                subdomains.push_back(sub);
                if (!check(x, sub, allow_guests, depth + 1))
                    return false;
            }
            if (!shared_parts_ok(subdomains))
                return false;
            std::set<ElemId> covered = component;
            for (const auto &sub : subdomains)
                covered.insert(sub.begin(), sub.end());
            if (covered != domain)
                return fail("elements not covered by the cluster decomposition");
            return true;
        }

        // loop-tree region: host cycle through r (if any), attachments at r
        if (criticals.count(r))
            return fail("critical root with successors outside a cluster");
        std::set<ElemId> host = component;  // non-critical SCC: {r} or the host cycle
        bool host_cycle = host.size() > 1 || interp.has_edge(role, r, r);
        if (host_cycle) {
            for (ElemId v : host) {
                int out_in_host = 0, in_in_host = 0;
                for (const Edge &e : interp.edges(role)) {
                    if (e.first == v && host.count(e.second))
                        ++out_in_host;
                    if (e.second == v && host.count(e.first))
                        ++in_in_host;
                }
                if (out_in_host != 1 || in_in_host != 1)
                    return fail("host component is not a simple cycle");
                if (v != r) {
                    for (const Edge &e : interp.edges(role)) {
                        if (e.first == v && !host.count(e.second))
                            return fail("attachment hangs from a non-root cycle element");
                    }
                }
            }
        }
        for (const Edge &e : interp.edges(role))
            if (domain.count(e.first) && host.count(e.second) && !host.count(e.first))
                return fail("edge re-enters the host cycle");
        witness.derivation.push_back((host_cycle ? "cycle host of " : "singleton host ") +
                                     std::to_string(host.size()) + " at " +
                                     std::to_string(r));

        std::set<ElemId> rest;
        for (ElemId v : domain)
            if (!host.count(v))
                rest.insert(v);
        std::set<ElemId> targets;
        for (const Edge &e : interp.edges(role))
            if (e.first == r && rest.count(e.second))
                targets.insert(e.second);
        std::vector<std::set<ElemId>> subdomains;
        for (ElemId x : targets) {
            std::set<ElemId> sub = directed_reach(interp, role, x, rest);
            subdomains.push_back(sub);
            if (!check(x, sub, allow_guests, depth + 1))
                return false;
        }
        if (!shared_parts_ok(subdomains))
            return false;
        std::set<ElemId> covered = host;
        for (const auto &sub : subdomains)
            covered.insert(sub.begin(), sub.end());
        if (covered != domain)
            return fail("elements not covered by the loop-tree decomposition");
        return true;
    }
};

} // namespace

ShapeResult classify_shape(const RootedInterpretation &i, RoleId role,
                           ConceptId finite_concept) {
    for (const auto &[r, edges] : i.interp.roles)
        if (r != role && !edges.empty())
            throw Error("classify_shape: interpretation uses more than one role");
    ShapeResult result;
    if (!i.interp.has_element(i.root)) {
        result.reason = "root not in domain";
        return result;
    }
    std::set<ElemId> reachable = directed_reach(i.interp, role, i.root, i.interp.elements);
    if (reachable != i.interp.elements) {
        result.reason = "elements unreachable from the root";
        return result;
    }
    std::set<ElemId> criticals = critical_elements(i.interp, finite_concept);
    bool has_critical = !criticals.empty();
    size_t n = i.interp.size();
    size_t edge_count = i.interp.edges(role).size();

    if (n == 1 && edge_count == 0) {
        result.shape = ShapeClass::Singleton;
        result.witness.derivation.push_back("singleton " + std::to_string(i.root));
        return result;
    }

    // one SCC covering everything?
    ShapeChecker probe{i.interp, role, criticals};
    std::set<ElemId> root_scc = probe.scc_of(i.root, i.interp.elements);
    if (root_scc == i.interp.elements) {
        if (has_critical) {
            result.shape = ShapeClass::CriticalCluster;
            result.witness.derivation.push_back("critical cluster of " + std::to_string(n));
            return result;
        }
        bool simple = true;
        for (ElemId v : i.interp.elements) {
            size_t out = i.interp.successors(role, v).size();
            size_t in = i.interp.predecessors(role, v).size();
            if (out != 1 || in != 1)
                simple = false;
        }
        if (simple) {
            result.shape = ShapeClass::Cycle;
            result.witness.derivation.push_back("cycle of " + std::to_string(n));
            return result;
        }
        result.reason = "strongly connected but neither a simple cycle nor critical";
        return result;
    }

    ShapeChecker lt{i.interp, role, criticals};
    if (lt.check(i.root, i.interp.elements, false, 0)) {
        result.shape = ShapeClass::LoopTree;
        result.witness = lt.witness;
        return result;
    }
    ShapeChecker el{i.interp, role, criticals};
    if (el.check(i.root, i.interp.elements, true, 0)) {
        result.shape = ShapeClass::Elementary;
        result.witness = el.witness;
        return result;
    }
    result.reason = el.reason;
    return result;
}

// ---------------------------------------------------------------------------
// Piecewise validation
// ---------------------------------------------------------------------------

PiecewiseCheck validate_piecewise(const PiecewiseElementary &g, const Signature &sig,
                                  ConceptId finite_concept) {
    (void)finite_concept;
    PiecewiseCheck result;
    auto fail = [&result](std::string why) {
        result.ok = false;
        result.violation = std::move(why);
        return result;
    };
    if (g.pieces.empty())
        return fail("no pieces");
    const Piece &root = g.pieces[0];
    if (root.parent != -1)
        return fail("piece 0 must be the root piece");
    if (root.shape.interp.size() != 1)
        return fail("root piece is not a singleton");
    bool root_has_edges = false;
    for (const auto &[r, edges] : root.shape.interp.roles)
        if (!edges.empty())
            root_has_edges = true;
    if (root_has_edges)
        return fail("root piece has edges");
    if (!root.shape.interp.has_element(root.shape.root))
        return fail("root piece root missing");

    std::set<ElemId> seen;
    for (size_t idx = 0; idx < g.pieces.size(); ++idx) {
        const Piece &p = g.pieces[idx];
        for (ElemId e : p.shape.interp.elements)
            if (!seen.insert(e).second)
                return fail("piece " + std::to_string(idx) + " shares element " +
                            std::to_string(e));
        if (!p.shape.interp.has_element(p.shape.root))
            return fail("piece " + std::to_string(idx) + " root missing");
        // single role
        std::optional<RoleId> used;
        for (const auto &[r, edges] : p.shape.interp.roles) {
            if (edges.empty())
                continue;
            if (used && *used != r)
                return fail("piece " + std::to_string(idx) + " uses several roles");
            used = r;
        }
        if (used && (!p.role || *p.role != *used))
            return fail("piece " + std::to_string(idx) + " role tag mismatch");
        if (p.shape.interp.size() > 1) {
            if (!p.role)
                return fail("non-singleton piece " + std::to_string(idx) + " lacks a role");
            if (!sig.role_transitive(*p.role))
                return fail("non-singleton piece " + std::to_string(idx) +
                            " is not a transitive piece");
        }
        if (idx == 0)
            continue;
        if (p.parent < 0 || p.parent >= static_cast<int>(idx))
            return fail("piece " + std::to_string(idx) + " has an invalid parent");
        const Piece &parent = g.pieces[p.parent];
        if (!parent.shape.interp.has_element(p.parent_element))
            return fail("piece " + std::to_string(idx) +
                        " attaches to a missing parent element");
        if (p.cross_role == kNoId || p.cross_role >= sig.num_roles())
            return fail("piece " + std::to_string(idx) + " has an invalid cross role");
    }

    // transitive-role escape condition
    for (size_t idx = 0; idx < g.pieces.size(); ++idx) {
        const Piece &p = g.pieces[idx];
        for (size_t child = 1; child < g.pieces.size(); ++child) {
            const Piece &c = g.pieces[child];
            if (c.parent != static_cast<int>(idx))
                continue;
            if (!sig.role_transitive(c.cross_role))
                continue;
            RoleId t = c.cross_role;
            bool piece_has_t = !p.shape.interp.edges(t).empty();
            bool root_incoming_t = idx > 0 && p.cross_role == t;
            if (piece_has_t || root_incoming_t)
                return fail("t-edge escapes piece " + std::to_string(idx) + " for role " +
                            sig.role_name(t));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Subqueries
// ---------------------------------------------------------------------------

Subquery canonical_subquery(const ConjunctiveQuery &q, std::optional<VarId> root_var) {
    int n = q.num_variables();
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i)
        perm[i] = i;

    using AtomTuple = std::tuple<bool, int, int, int>;
    auto encode = [&](const std::vector<int> &p) {
        std::vector<AtomTuple> atoms;
        for (const auto &atom : q.atoms)
            atoms.emplace_back(atom.unary, atom.predicate, p[atom.x],
                               atom.unary ? -1 : p[atom.y]);
        std::sort(atoms.begin(), atoms.end());
        atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
        int root = root_var ? p[*root_var] : -1;
        return std::make_pair(atoms, root);
    };

    auto best = encode(perm);
    std::vector<int> p = perm;
    while (std::next_permutation(p.begin(), p.end())) {
        auto candidate = encode(p);
        if (candidate < best)
            best = candidate;
    }

    Subquery result;
    result.query.name = q.name;
    for (int i = 0; i < n; ++i)
        result.query.variables.push_back("x" + std::to_string(i));
    for (const auto &[unary, predicate, x, y] : best.first) {
        ConjunctiveQuery::Atom atom;
        atom.unary = unary;
        atom.predicate = predicate;
        atom.x = x;
        atom.y = unary ? kNoId : y;
        result.query.add_atom(atom);
    }
    if (best.second >= 0)
        result.root_var = best.second;
    result.query.name.clear();
    return result;
}

namespace {

// all partitions of {0..n-1} as restricted-growth strings
std::vector<std::vector<int>> partitions_of(int n) {
    std::vector<std::vector<int>> result;
    if (n == 0) {
        result.push_back({});
        return result;
    }
    std::vector<int> rgs(n, 0);
    while (true) {
        result.push_back(rgs);
        int i = n - 1;
        while (i > 0) {
            int max_prefix = 0;
            for (int j = 0; j < i; ++j)
                max_prefix = std::max(max_prefix, rgs[j]);
            if (rgs[i] <= max_prefix) {
                ++rgs[i];
                for (int j = i + 1; j < n; ++j)
                    rgs[j] = 0;
                break;
            }
            --i;
        }
        if (i == 0)
            break;
    }
    return result;
}

} // namespace

std::set<Subquery> subqueries_of(const Ucq &q) {
    std::set<Subquery> result;
    for (const ConjunctiveQuery &disjunct : q.disjuncts) {
        int num_atoms = static_cast<int>(disjunct.atoms.size());
        for (int mask = 0; mask < (1 << num_atoms); ++mask) {
            std::vector<ConjunctiveQuery::Atom> chosen;
            std::set<VarId> vars;
            for (int a = 0; a < num_atoms; ++a)
                if (mask & (1 << a)) {
                    chosen.push_back(disjunct.atoms[a]);
                    vars.insert(disjunct.atoms[a].x);
                    if (!disjunct.atoms[a].unary)
                        vars.insert(disjunct.atoms[a].y);
                }
            std::vector<VarId> var_list(vars.begin(), vars.end());
            int n = static_cast<int>(var_list.size());
            std::map<VarId, int> var_index;
            for (int i = 0; i < n; ++i)
                var_index[var_list[i]] = i;
            for (const std::vector<int> &rgs : partitions_of(n)) {
                int classes = n == 0 ? 0 : *std::max_element(rgs.begin(), rgs.end()) + 1;
                ConjunctiveQuery sub;
                for (int c = 0; c < classes; ++c)
                    sub.variables.push_back("x" + std::to_string(c));
                for (const auto &atom : chosen) {
                    ConjunctiveQuery::Atom mapped = atom;
                    mapped.x = rgs[var_index[atom.x]];
                    if (!atom.unary)
                        mapped.y = rgs[var_index[atom.y]];
                    sub.add_atom(mapped);
                }
                result.insert(canonical_subquery(sub, std::nullopt));
                for (int c = 0; c < classes; ++c)
                    result.insert(canonical_subquery(sub, c));
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Enumeration of elementary shapes
// ---------------------------------------------------------------------------

std::vector<LabelledShape> enumerate_elementary(int num_concepts, ConceptId finite_concept,
                                                RoleId role, int size_cap,
                                                const std::vector<Label> &labels,
                                                int safety_limit) {
    if (size_cap > safety_limit && !safety_override_enabled())
        throw Error("enumerate_elementary: size_cap exceeds the safety limit");
    if (num_concepts > 8)
        throw Error("enumerate_elementary: too many concept names to enumerate");

    std::vector<Label> label_pool = labels.empty() ? std::vector<Label>{0} : labels;
    std::vector<LabelledShape> result;

    using Encoding = std::vector<int>;
    std::set<Encoding> seen;

    for (int n = 1; n <= size_cap; ++n) {
        if (n > 6)
            throw Error("enumerate_elementary: size_cap beyond enumeration range");
        long edge_space = 1L << (n * n);
        long type_space = 1;
        for (int i = 0; i < n; ++i)
            type_space *= (1L << num_concepts);
        long label_space = 1;
        for (int i = 0; i < n; ++i)
            label_space *= static_cast<long>(label_pool.size());

        std::vector<std::pair<Encoding, LabelledShape>> found;
        for (long edges = 0; edges < edge_space; ++edges) {
            // root 0 must reach everything
            unsigned reached = 1;
            bool grew = true;
            while (grew) {
                grew = false;
                for (int u = 0; u < n; ++u) {
                    if (!(reached & (1u << u)))
                        continue;
                    for (int v = 0; v < n; ++v)
                        if ((edges >> (u * n + v)) & 1 && !(reached & (1u << v))) {
                            reached |= 1u << v;
                            grew = true;
                        }
                }
            }
            if (reached != (1u << n) - 1)
                continue;

            for (long types = 0; types < type_space; ++types) {
                std::vector<uint32_t> type_of(n);
                long rest = types;
                for (int i = 0; i < n; ++i) {
                    type_of[i] = rest % (1L << num_concepts);
                    rest /= (1L << num_concepts);
                }
                for (long label_combo = 0; label_combo < label_space; ++label_combo) {
                    std::vector<Label> label_of(n);
                    long lrest = label_combo;
                    for (int i = 0; i < n; ++i) {
                        label_of[i] = label_pool[lrest % label_pool.size()];
                        lrest /= static_cast<long>(label_pool.size());
                    }

                    RootedInterpretation rooted;
                    for (int e = 0; e < n; ++e)
                        rooted.interp.add_element(e);
                    rooted.root = 0;
                    for (int c = 0; c < num_concepts; ++c)
                        for (int e = 0; e < n; ++e)
                            if (type_of[e] & (1u << c))
                                rooted.interp.add_concept(c, e);
                    for (int u = 0; u < n; ++u)
                        for (int v = 0; v < n; ++v)
                            if ((edges >> (u * n + v)) & 1)
                                rooted.interp.add_edge(role, u, v);

                    if (!is_elementary(classify_shape(rooted, role, finite_concept).shape))
                        continue;

                    // canonical encoding over root-fixing permutations
                    std::vector<int> perm(n);
                    for (int i = 0; i < n; ++i)
                        perm[i] = i;
                    auto encode = [&](const std::vector<int> &p) {
                        // p[slot] = original element at this slot
                        Encoding code{n};
                        for (int slot = 0; slot < n; ++slot) {
                            code.push_back(static_cast<int>(type_of[p[slot]]));
                            code.push_back(label_of[p[slot]]);
                        }
                        for (int u = 0; u < n; ++u)
                            for (int v = 0; v < n; ++v)
                                code.push_back(
                                    static_cast<int>((edges >> (p[u] * n + p[v])) & 1));
                        return code;
                    };
                    Encoding best = encode(perm);
                    std::vector<int> p = perm;
                    while (std::next_permutation(p.begin() + 1, p.end())) {
                        Encoding candidate = encode(p);
                        if (candidate < best)
                            best = candidate;
                    }
                    if (!seen.insert(best).second)
                        continue;
                    LabelledShape shape;
                    shape.rooted = rooted;
                    for (int e = 0; e < n; ++e)
                        shape.labels[e] = label_of[e];
                    found.emplace_back(best, std::move(shape));
                }
            }
        }
        std::sort(found.begin(), found.end(),
                  [](const auto &a, const auto &b) { return a.first < b.first; });
        for (auto &[enc, shape] : found)
            result.push_back(std::move(shape));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

namespace {

UnaryType all_values_targets(const KnowledgeBase &kb, const UnaryType &source_type,
                             RoleId role) {
    UnaryType targets;
    for (const Axiom &ax : kb.tbox)
        if (ax.kind == Axiom::Kind::AllValues && ax.role == role && source_type.count(ax.a))
            targets.insert(ax.b);
    return targets;
}

std::vector<Port> derive_ports(const KnowledgeBase &kb, const RootedInterpretation &shape,
                               std::optional<RoleId> piece_role) {
    std::vector<Port> ports;
    for (ElemId e : shape.interp.elements) {
        UnaryType type = element_type(shape.interp, e);
        std::set<std::pair<RoleId, ConceptId>> seen;
        for (const Axiom &ax : kb.tbox) {
            if (ax.kind != Axiom::Kind::SomeValues || !type.count(ax.a))
                continue;
            if (piece_role && ax.role == *piece_role)
                continue;  // transitive pieces satisfy their own role internally
            if (!seen.insert({ax.role, ax.b}).second)
                continue;
            Port p;
            p.element = e;
            p.role = ax.role;
            UnaryType av = all_values_targets(kb, type, ax.role);
            p.required_root = av;
            p.required_root.insert(ax.b);
            if (kb.signature.role_transitive(ax.role))
                p.required_everywhere = av;
            ports.push_back(std::move(p));
        }
    }
    std::sort(ports.begin(), ports.end());
    ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
    return ports;
}

bool type_passes_conj_disj(const KnowledgeBase &kb, const UnaryType &type) {
    for (const Axiom &ax : kb.tbox) {
        if (ax.kind != Axiom::Kind::ConjDisj)
            continue;
        bool lhs = true;
        for (ConceptId c : ax.lhs)
            if (!type.count(c)) {
                lhs = false;
                break;
            }
        if (!lhs)
            continue;
        bool rhs = false;
        for (ConceptId c : ax.rhs)
            if (type.count(c)) {
                rhs = true;
                break;
            }
        if (!rhs)
            return false;
    }
    return true;
}

} // namespace

long enumerate_blocks(const KnowledgeBase &kb, const Ucq &q, const BlockCaps &caps,
                      const std::function<bool(const Block &)> &sink) {
    std::set<Subquery> subqueries = subqueries_of(q);
    std::vector<Subquery> subquery_list(subqueries.begin(), subqueries.end());
    if (subquery_list.size() > 16 && !safety_override_enabled())
        throw Error("enumerate_blocks: annotation lattice too large; "
                    "set PFENT_SAFETY_OVERRIDE=1");

    long count = 0;
    bool stopped = false;

    auto emit_annotated = [&](const RootedInterpretation &shape, std::optional<RoleId> role,
                              const std::vector<Port> &ports) {
        long slots = static_cast<long>(ports.size()) + 1;
        std::vector<long> annotation(slots, 0);
        long lattice = 1L << subquery_list.size();
        while (!stopped) {
            Block b;
            b.shape = shape;
            b.role = role;
            b.ports = ports;
            for (size_t s = 0; s < subquery_list.size(); ++s)
                if (annotation[0] & (1L << s))
                    b.root_annotation.insert(subquery_list[s]);
            for (size_t p = 0; p < ports.size(); ++p) {
                std::set<Subquery> ann;
                for (size_t s = 0; s < subquery_list.size(); ++s)
                    if (annotation[p + 1] & (1L << s))
                        ann.insert(subquery_list[s]);
                b.port_annotations.push_back(std::move(ann));
            }
            ++count;
            if (!sink(b)) {
                stopped = true;
                return;
            }
            // odometer
            long idx = 0;
            while (idx < slots) {
                if (++annotation[idx] < lattice)
                    break;
                annotation[idx] = 0;
                ++idx;
            }
            if (idx == slots)
                return;
        }
    };

    // singleton blocks: one element per locally consistent type
    int num_concepts = kb.signature.num_concepts();
    if (num_concepts > 16)
        throw Error("enumerate_blocks: too many concept names");
    for (uint32_t type_mask = 0; type_mask < (uint32_t(1) << num_concepts) && !stopped;
         ++type_mask) {
        UnaryType type;
        for (int c = 0; c < num_concepts; ++c)
            if (type_mask & (uint32_t(1) << c))
                type.insert(c);
        if (!type_passes_conj_disj(kb, type))
            continue;
        RootedInterpretation shape;
        shape.interp.add_element(0);
        shape.root = 0;
        for (ConceptId c : type)
            shape.interp.add_concept(c, 0);
        emit_annotated(shape, std::nullopt, derive_ports(kb, shape, std::nullopt));
    }

    // transitive-role pieces
    for (RoleId t : kb.signature.transitive_roles()) {
        if (stopped)
            break;
        std::vector<LabelledShape> shapes =
            enumerate_elementary(num_concepts, kb.finite_concept, t, caps.max_shape_size, {},
                                 caps.safety_limit);
        for (const LabelledShape &shape : shapes) {
            if (stopped)
                break;
            if (shape.rooted.interp.size() == 1 && shape.rooted.interp.edges(t).empty())
                continue;  // singletons already emitted
            emit_annotated(shape.rooted, t, derive_ports(kb, shape.rooted, t));
        }
    }
    return count;
}

std::string block_to_json(const Block &b, const Signature &sig) {
    nlohmann::ordered_json j;
    j["shape"] = nlohmann::ordered_json::parse(interp_to_json(b.shape.interp, sig));
    j["root"] = b.shape.root;
    j["role"] = b.role ? nlohmann::ordered_json(sig.role_name(*b.role))
                       : nlohmann::ordered_json(nullptr);
    auto subquery_json = [&sig](const Subquery &s) {
        nlohmann::ordered_json sj;
        sj["query"] = cq_to_string(s.query, sig);
        sj["root_var"] = s.root_var ? nlohmann::ordered_json(s.query.variables[*s.root_var])
                                    : nlohmann::ordered_json(nullptr);
        return sj;
    };
    nlohmann::ordered_json ports = nlohmann::ordered_json::array();
    for (size_t p = 0; p < b.ports.size(); ++p) {
        nlohmann::ordered_json pj;
        pj["element"] = b.ports[p].element;
        pj["role"] = sig.role_name(b.ports[p].role);
        nlohmann::ordered_json req = nlohmann::ordered_json::array();
        for (ConceptId c : b.ports[p].required_root)
            req.push_back(sig.concept_name(c));
        pj["required_root"] = req;
        nlohmann::ordered_json req_all = nlohmann::ordered_json::array();
        for (ConceptId c : b.ports[p].required_everywhere)
            req_all.push_back(sig.concept_name(c));
        pj["required_everywhere"] = req_all;
        nlohmann::ordered_json ann = nlohmann::ordered_json::array();
        if (p < b.port_annotations.size())
            for (const Subquery &s : b.port_annotations[p])
                ann.push_back(subquery_json(s));
        pj["annotation"] = ann;
        ports.push_back(pj);
    }
    j["ports"] = ports;
    nlohmann::ordered_json root_ann = nlohmann::ordered_json::array();
    for (const Subquery &s : b.root_annotation)
        root_ann.push_back(subquery_json(s));
    j["root_annotation"] = root_ann;
    return j.dump(2) + "\n";
}

} // namespace pfent
