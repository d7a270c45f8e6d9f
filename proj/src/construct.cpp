#include "pfent/construct.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <functional>

#include <json.hpp>

namespace pfent {

namespace {

std::set<ElemId> reachable_from(const Interpretation &i, ElemId start) {
    std::set<ElemId> visited{start};
    std::deque<ElemId> queue{start};
    while (!queue.empty()) {
        ElemId u = queue.front();
        queue.pop_front();
        for (const auto &[role, edges] : i.roles)
            for (const Edge &e : edges)
                if (e.first == u && visited.insert(e.second).second)
                    queue.push_back(e.second);
    }
    return visited;
}

std::set<ElemId> delta_f_of(const Interpretation &i, RoleId role, ConceptId finite_concept) {
    std::set<ElemId> result;
    for (const Cluster &c : clusters(i, role, finite_concept))
        if (c.critical)
            result.insert(c.members.begin(), c.members.end());
    return result;
}

} // namespace

// ---------------------------------------------------------------------------
// Quasi-unravelling
// ---------------------------------------------------------------------------

Unravelling quasi_unravel(const Generator &g, RoleId role, ConceptId finite_concept,
                          int depth, const std::map<ElemId, Label> *labels) {
    if (g.mode != Generator::Mode::Quasi)
        throw Error("quasi_unravel: generator mode is not quasi");
    const Interpretation &base = g.base.interp;
    ElemId root = g.base.root;
    if (!base.has_element(root))
        throw Error("quasi_unravel: root not in base");
    for (const auto &[r, edges] : base.roles)
        if (r != role && !edges.empty())
            throw Error("quasi_unravel: base uses more than one role");

    std::vector<Cluster> base_clusters = clusters(base, role, finite_concept);
    std::set<ElemId> delta_f;
    std::set<ElemId> root_cluster{root};
    for (const Cluster &c : base_clusters) {
        if (c.critical)
            delta_f.insert(c.members.begin(), c.members.end());
        if (c.critical && c.members.count(root))
            root_cluster = c.members;
    }
    std::set<ElemId> kept = delta_f;
    kept.insert(root);

    // families: the root cluster plus every critical cluster
    std::vector<std::set<ElemId>> families;
    families.push_back(root_cluster);
    for (const Cluster &c : base_clusters)
        if (c.critical && c.members != root_cluster)
            families.push_back(c.members);

    Unravelling result;
    result.target = transitive_closure_role(base, role);

    auto label_of = [&](ElemId original) {
        if (labels == nullptr)
            return Label{0};
        auto it = labels->find(original);
        return it == labels->end() ? Label{0} : it->second;
    };

    for (ElemId e : kept) {
        result.interp.add_element(e);
        UnravelNode node;
        node.kind = UnravelNode::Kind::Kept;
        node.original = e;
        result.nodes[e] = node;
        result.depth[e] = 0;
        result.projection.mapping[e] = e;
        result.labels[e] = label_of(e);
    }
    result.root = root;
    for (const auto &[individual, elem] : base.individual_of)
        if (kept.count(elem))
            result.interp.set_individual(individual, elem);

    ElemId next_id = std::max(base.max_element(), ElemId{0}) + 1;
    // path copies, generated level by level
    struct PathNode {
        int family;
        std::vector<ElemId> path;
        ElemId id;
    };
    std::vector<PathNode> frontier;
    std::vector<PathNode> all_paths;
    for (int f = 0; f < static_cast<int>(families.size()); ++f) {
        std::set<ElemId> starts;
        for (ElemId member : families[f])
            for (ElemId v : base.successors(role, member))
                if (!kept.count(v))
                    starts.insert(v);
        for (ElemId v : starts) {
            PathNode node{f, {v}, next_id++};
            frontier.push_back(node);
            all_paths.push_back(node);
        }
    }
    for (int level = 1; level < depth; ++level) {
        std::vector<PathNode> next_frontier;
        for (const PathNode &node : frontier) {
            for (ElemId v : base.successors(role, node.path.back())) {
                if (kept.count(v))
                    continue;
                PathNode extended{node.family, node.path, next_id++};
                extended.path.push_back(v);
                next_frontier.push_back(extended);
                all_paths.push_back(extended);
            }
        }
        frontier = std::move(next_frontier);
    }

    for (const PathNode &node : all_paths) {
        result.interp.add_element(node.id);
        UnravelNode un;
        un.kind = UnravelNode::Kind::PathCopy;
        un.original = node.path.back();
        un.family = node.family;
        un.path = node.path;
        result.nodes[node.id] = un;
        result.depth[node.id] = static_cast<int>(node.path.size());
        result.projection.mapping[node.id] = node.path.back();
        result.labels[node.id] = label_of(node.path.back());
    }

    // concepts
    for (const auto &[concept_id, extension] : base.concepts) {
        for (ElemId e : extension)
            if (kept.count(e))
                result.interp.add_concept(concept_id, e);
        for (const PathNode &node : all_paths)
            if (extension.count(node.path.back()))
                result.interp.add_concept(concept_id, node.id);
    }

    // edge groups
    for (const Edge &e : base.edges(role))
        if (kept.count(e.first) && delta_f.count(e.second))
            result.interp.add_edge(role, e.first, e.second);
    std::map<std::pair<int, std::vector<ElemId>>, ElemId> path_ids;
    for (const PathNode &node : all_paths)
        path_ids[{node.family, node.path}] = node.id;
    for (const PathNode &node : all_paths) {
        for (ElemId member : families[node.family])
            result.interp.add_edge(role, member, node.id);
        if (node.path.size() > 1) {
            std::vector<ElemId> prefix(node.path.begin(), node.path.end() - 1);
            result.interp.add_edge(role, path_ids.at({node.family, prefix}), node.id);
        }
        for (ElemId v : base.successors(role, node.path.back()))
            if (delta_f.count(v))
                result.interp.add_edge(role, node.id, v);
    }

    result.interp = transitive_closure_role(result.interp, role);
    return result;
}

// ---------------------------------------------------------------------------
// Classical unravelling
// ---------------------------------------------------------------------------

Unravelling classical_unravel(const Generator &g, int depth) {
    const Interpretation &base = g.base.interp;
    ElemId root = g.base.root;
    if (!base.has_element(root))
        throw Error("classical_unravel: root not in base");

    Unravelling result;
    result.target = base;

    ElemId next_id = std::max(base.max_element(), ElemId{0}) + 1;
    struct PathNode {
        std::vector<ElemId> path;
        ElemId id;
    };
    std::vector<PathNode> all_paths;
    std::map<std::vector<ElemId>, ElemId> path_ids;

    PathNode root_node{{root}, next_id++};
    all_paths.push_back(root_node);
    path_ids[root_node.path] = root_node.id;
    std::vector<PathNode> frontier{root_node};
    for (int level = 0; level < depth; ++level) {
        std::vector<PathNode> next_frontier;
        for (const PathNode &node : frontier) {
            std::set<ElemId> succs;
            for (const auto &[role, edges] : base.roles)
                for (const Edge &e : edges)
                    if (e.first == node.path.back())
                        succs.insert(e.second);
            for (ElemId v : succs) {
                PathNode extended{node.path, next_id++};
                extended.path.push_back(v);
                all_paths.push_back(extended);
                path_ids[extended.path] = extended.id;
                next_frontier.push_back(extended);
            }
        }
        frontier = std::move(next_frontier);
    }

    for (const PathNode &node : all_paths) {
        result.interp.add_element(node.id);
        UnravelNode un;
        un.kind = UnravelNode::Kind::PathCopy;
        un.original = node.path.back();
        un.path = node.path;
        result.nodes[node.id] = un;
        result.depth[node.id] = static_cast<int>(node.path.size()) - 1;
        result.projection.mapping[node.id] = node.path.back();
        result.labels[node.id] = 0;
    }
    result.root = root_node.id;
    for (const auto &[individual, elem] : base.individual_of)
        if (elem == root)
            result.interp.set_individual(individual, root_node.id);

    for (const auto &[concept_id, extension] : base.concepts)
        for (const PathNode &node : all_paths)
            if (extension.count(node.path.back()))
                result.interp.add_concept(concept_id, node.id);

    for (const PathNode &node : all_paths) {
        if (node.path.size() < 2)
            continue;
        std::vector<ElemId> prefix(node.path.begin(), node.path.end() - 1);
        ElemId parent = path_ids.at(prefix);
        for (const auto &[role, edges] : base.roles)
            if (edges.count({prefix.back(), node.path.back()}))
                result.interp.add_edge(role, parent, node.id);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Dispensable-element pruning
// ---------------------------------------------------------------------------

Interpretation prune_dispensable(const Interpretation &i, ElemId keep, RoleId t,
                                 ConceptId finite_concept) {
    if (!i.has_element(keep))
        throw Error("prune_dispensable: keep element not in domain");
    Interpretation cur = transitive_closure_role(i, t);
    bool changed = true;
    while (changed) {
        changed = false;
        std::set<ElemId> criticals = critical_elements(cur, finite_concept);
        for (ElemId u : criticals) {
            if (u == keep)
                continue;
            UnaryType type = element_type(cur, u);
            std::set<ConceptId> reach = reach_t(cur, u, t);
            if (!std::includes(reach.begin(), reach.end(), type.begin(), type.end()))
                continue;
            std::set<ElemId> domain = cur.elements;
            domain.erase(u);
            Interpretation next = induced(cur, domain);
            // mutually witnessing pairs: dropping u may still lose a reach
            // witness for a survivor whose only other realizer was u itself
            bool preserves = true;
            for (ElemId v : next.elements)
                if (reach_t(next, v, t) != reach_t(cur, v, t)) {
                    preserves = false;
                    break;
                }
            if (!preserves)
                continue;
            cur = std::move(next);
            changed = true;
            break;
        }
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Elementarization
// ---------------------------------------------------------------------------

namespace {

struct ElementarizeState {
    const RoleId t;
    const ConceptId finite_concept;
    Interpretation base;  // closed, reachable, pruned
    const std::map<ElemId, Label> *labels;
    std::set<ElemId> delta_f;
    std::map<ElemId, std::set<ElemId>> cluster_of;  // delta_f member -> cluster
    std::map<ElemId, std::set<ElemId>> recurring;   // all-dispensable non-critical SCC
    std::map<ElemId, UnaryType> tp;
    std::map<ElemId, std::set<ConceptId>> reach;
    std::map<ElemId, std::set<ConceptId>> cr;
    std::map<ElemId, bool> indispensable;

    Interpretation out;
    std::map<ElemId, Label> out_labels;
    std::map<ElemId, ElemId> anchors;
    ElemId next_id = 0;
    int recursion_guard = 0;

    Label label_of(ElemId e) const {
        if (labels == nullptr)
            return 0;
        auto it = labels->find(e);
        return it == labels->end() ? Label{0} : it->second;
    }

    ElemId fresh(ElemId anchor) {
        ElemId id = next_id++;
        out.add_element(id);
        for (ConceptId c : tp.at(anchor))
            out.add_concept(c, id);
        out_labels[id] = label_of(anchor);
        anchors[id] = anchor;
        return id;
    }

    // Attach handle pieces under host_id so that the concepts reachable from
    // host_id in the result are exactly `target`.
    void cover(ElemId host_id, const std::set<ConceptId> &target,
               const std::set<ElemId> &candidates) {
        std::set<ConceptId> covered;
        for (ConceptId a : target) {
            if (covered.count(a))
                continue;
            ElemId handle = kNoId;
            for (ElemId v : candidates) {
                if (!tp.at(v).count(a))
                    continue;
                if (delta_f.count(v) || indispensable.at(v) || recurring.count(v)) {
                    handle = v;
                    break;
                }
            }
            if (handle == kNoId)
                throw Error("elementarize: no eligible cover handle (internal)");
            const std::set<ConceptId> &value = cr.at(handle);
            if (!std::includes(target.begin(), target.end(), value.begin(), value.end()))
                throw Error("elementarize: inadmissible handle (internal)");
            ElemId piece_root = build(handle);
            out.add_edge(t, host_id, piece_root);
            covered.insert(value.begin(), value.end());
        }
        if (covered != target)
            throw Error("elementarize: cover not exact (internal)");
    }

    ElemId build(ElemId anchor) {
        if (delta_f.count(anchor))
            return build_cluster_guest(anchor);
        if (recurring.count(anchor))
            return build_cycle(anchor);
        return build_fan(anchor);
    }

    ElemId build_fan(ElemId u) {
        enter();
        ElemId id = fresh(u);
        std::set<ElemId> candidates;
        for (ElemId v : base.successors(t, u))
            candidates.insert(v);
        cover(id, reach.at(u), candidates);
        leave();
        return id;
    }

    // An all-dispensable non-critical SCC recurs forever in the unravelling: a
    // grammar cycle over one realizer per concept, with the out-of-SCC needs
    // fanned off the anchor copy.
    ElemId build_cycle(ElemId anchor) {
        enter();
        const std::set<ElemId> &scc = recurring.at(anchor);
        std::set<ConceptId> realized;
        for (ElemId m : scc)
            realized.insert(tp.at(m).begin(), tp.at(m).end());
        std::vector<ElemId> members{anchor};
        std::set<ConceptId> covered = tp.at(anchor);
        for (ConceptId a : realized) {
            if (covered.count(a))
                continue;
            for (ElemId m : scc)
                if (tp.at(m).count(a)) {
                    members.push_back(m);
                    covered.insert(tp.at(m).begin(), tp.at(m).end());
                    break;
                }
        }
        std::vector<ElemId> copies;
        for (ElemId m : members)
            copies.push_back(fresh(m));
        for (size_t i = 0; i < copies.size(); ++i)
            out.add_edge(t, copies[i], copies[(i + 1) % copies.size()]);
        std::set<ElemId> outside;
        for (ElemId m : scc)
            for (ElemId v : base.successors(t, m))
                if (!scc.count(v))
                    outside.insert(v);
        std::set<ConceptId> target;
        for (ElemId w : outside)
            target.insert(tp.at(w).begin(), tp.at(w).end());
        cover(copies[0], target, outside);
        leave();
        return copies[0];
    }

    // A shrunken copy of `anchor_root`'s cluster rooted at its copy, with a fan
    // covering the out-of-cluster reach attached at the minimal kept member.
    ElemId build_cluster(ElemId anchor_root) {
        enter();
        const std::set<ElemId> &cluster = cluster_of.at(anchor_root);
        // keep the anchor plus up to two realizers of every concept realized here
        std::set<ElemId> kept{anchor_root};
        std::map<ConceptId, std::vector<ElemId>> realizers;
        for (ElemId m : cluster)
            for (ConceptId c : tp.at(m))
                realizers[c].push_back(m);
        for (auto &[c, v] : realizers) {
            std::sort(v.begin(), v.end());
            kept.insert(v[0]);
            if (v.size() > 1)
                kept.insert(v[1]);
        }
        std::map<ElemId, ElemId> copy;
        for (ElemId m : kept)
            copy[m] = fresh(m);
        for (ElemId x : kept)
            for (ElemId y : kept)
                if (base.has_edge(t, x, y))
                    out.add_edge(t, copy[x], copy[y]);
        // out-of-cluster needs, all attached at the minimal kept member
        std::set<ElemId> outside;
        for (ElemId m : cluster)
            for (ElemId v : base.successors(t, m))
                if (!cluster.count(v))
                    outside.insert(v);
        std::set<ConceptId> target;
        for (ElemId w : outside)
            target.insert(tp.at(w).begin(), tp.at(w).end());
        cover(copy.at(*kept.begin()), target, outside);
        leave();
        return copy.at(anchor_root);
    }

    // Guest glue point must be critical for the grammar, so root the copy at
    // the minimal F-element of the handle's cluster.
    ElemId build_cluster_guest(ElemId handle) {
        const std::set<ElemId> &cluster = cluster_of.at(handle);
        for (ElemId m : cluster)
            if (base.in_concept(finite_concept, m))
                return build_cluster(m);
        throw Error("elementarize: critical cluster without F-element (internal)");
    }

    void enter() {
        if (++recursion_guard > 10000)
            throw Error("elementarize: recursion guard tripped (internal)");
    }
    void leave() { --recursion_guard; }
};

} // namespace

ElementarizeResult elementarize(const RootedInterpretation &i, RoleId t,
                                ConceptId finite_concept,
                                const std::map<ElemId, Label> *labels) {
    for (const auto &[r, edges] : i.interp.roles)
        if (r != t && !edges.empty())
            throw Error("elementarize: input uses more than one role");
    if (!i.interp.has_element(i.root))
        throw Error("elementarize: root not in domain");

    Interpretation closed = transitive_closure_role(i.interp, t);
    closed = induced(closed, reachable_from(closed, i.root));

    int occurring = 0;
    for (const auto &[c, ext] : closed.concepts)
        if (!ext.empty())
            ++occurring;

    // non-critical cycles are representable only when every concept on them
    // recurs (each member dispensable); a uniquely realized concept on a cycle
    // has no elementary counterpart, since copies would out-reach the original
    std::set<ElemId> delta_f = delta_f_of(closed, t, finite_concept);
    for (ElemId u : closed.elements) {
        if (delta_f.count(u) || !closed.has_edge(t, u, u))
            continue;
        UnaryType type = element_type(closed, u);
        std::set<ConceptId> reach = reach_t(closed, u, t);
        if (!std::includes(reach.begin(), reach.end(), type.begin(), type.end()))
            throw Error("elementarize: a uniquely realized concept lies on a "
                        "non-critical cycle; no elementary representation exists");
    }

    Interpretation pruned = prune_dispensable(closed, i.root, t, finite_concept);
    pruned = induced(pruned, reachable_from(pruned, i.root));

    ElementarizeState state{t,  finite_concept, pruned, labels, {}, {}, {},
                            {}, {},             {},     {},     {}, {}, {},
                            0,  0};
    state.delta_f = delta_f_of(pruned, t, finite_concept);
    for (const Cluster &c : clusters(pruned, t, finite_concept)) {
        if (c.critical) {
            for (ElemId m : c.members)
                state.cluster_of[m] = c.members;
        } else if (c.members.size() > 1 ||
                   pruned.has_edge(t, *c.members.begin(), *c.members.begin())) {
            for (ElemId m : c.members)
                state.recurring[m] = c.members;
        }
    }
    for (ElemId e : pruned.elements) {
        state.tp[e] = element_type(pruned, e);
        state.reach[e] = reach_t(pruned, e, t);
        std::set<ConceptId> cr = state.tp[e];
        cr.insert(state.reach[e].begin(), state.reach[e].end());
        state.cr[e] = cr;
        state.indispensable[e] =
            !std::includes(state.reach[e].begin(), state.reach[e].end(), state.tp[e].begin(),
                           state.tp[e].end());
    }

    ElementarizeResult result;
    // The root piece is rooted at the root itself, not at a guest glue point.
    // A root inside a recurring SCC becomes a fan: the unravelling never copies
    // the root, so its recurrence must hang below it (the SCC itself is an
    // eligible cover handle).
    ElemId root_id = state.delta_f.count(i.root) ? state.build_cluster(i.root)
                                                 : state.build_fan(i.root);
    result.rooted.interp = std::move(state.out);
    result.rooted.root = root_id;
    result.labels = std::move(state.out_labels);
    result.anchors.mapping = std::move(state.anchors);
    for (const auto &[individual, elem] : pruned.individual_of)
        if (elem == i.root)
            result.rooted.interp.set_individual(individual, root_id);

    // size bound from the occurring concept count
    long double l = occurring;
    long double bound = std::pow(l + 1, (l + 1) * (l + 1));
    if (static_cast<long double>(result.rooted.interp.size()) > bound)
        throw Error("elementarize: size bound exceeded (internal)");

    // unravelling the result reproduces its reach sets once paths have crossed
    // every non-critical element and one full lap of each recurring cycle
    std::set<ElemId> out_critical;
    for (const Cluster &c : clusters(result.rooted.interp, t, finite_concept))
        if (c.critical)
            out_critical.insert(c.members.begin(), c.members.end());
    int non_critical = 0;
    for (ElemId e : result.rooted.interp.elements)
        if (!out_critical.count(e))
            ++non_critical;
    result.saturation_depth = non_critical + 1;
    return result;
}

// ---------------------------------------------------------------------------
// Blow-up
// ---------------------------------------------------------------------------

Interpretation PiecewiseElementary::flatten() const {
    Interpretation result;
    for (const Piece &p : pieces)
        result = interp_union(result, p.shape.interp);
    for (size_t idx = 1; idx < pieces.size(); ++idx) {
        const Piece &p = pieces[idx];
        result.add_edge(p.cross_role, p.parent_element, p.shape.root);
    }
    return result;
}

namespace {

struct PieceInstance {
    std::optional<RoleId> role;
    int parent = -1;
    ElemId parent_element = kNoId;
    RoleId cross_role = kNoId;
    ElemId root = kNoId;
};

struct BlowUpState {
    const Signature &sig;
    ConceptId finite_concept;
    int n;

    Interpretation cur;
    ElemId root;
    std::map<ElemId, int> instance_of;
    std::vector<PieceInstance> instances;
    std::map<ElemId, ElemId> provenance;
    std::vector<std::vector<ElemId>> blown_cycles;
    std::vector<RoleId> blown_cycle_role;
    std::map<ElemId, int> blown_cycle_of;
    ElemId next_id = 0;

    std::map<ElemId, int> bfs_distances() const {
        std::map<ElemId, int> dist;
        dist[root] = 0;
        std::deque<ElemId> queue{root};
        while (!queue.empty()) {
            ElemId u = queue.front();
            queue.pop_front();
            for (const auto &[role, edges] : cur.roles)
                for (const Edge &e : edges)
                    if (e.first == u && !dist.count(e.second)) {
                        dist[e.second] = dist[u] + 1;
                        queue.push_back(e.second);
                    }
        }
        return dist;
    }

    // next unblown non-critical cycle, top-down
    struct CycleRef {
        std::vector<ElemId> members_in_order;
        RoleId role;
        int instance;
    };

    std::optional<CycleRef> find_cycle() {
        struct Candidate {
            std::set<ElemId> members;
            RoleId role;
            int instance;
        };
        std::vector<Candidate> candidates;
        for (int inst = 0; inst < static_cast<int>(instances.size()); ++inst) {
            if (!instances[inst].role)
                continue;
            RoleId role = *instances[inst].role;
            std::set<ElemId> members;
            for (const auto &[e, i] : instance_of)
                if (i == inst && cur.has_element(e))
                    members.insert(e);
            if (members.empty())
                continue;
            Interpretation piece = induced(cur, members);
            for (const Cluster &scc : clusters(piece, role, finite_concept)) {
                if (scc.critical)
                    continue;
                bool cyclic = scc.members.size() > 1 ||
                              piece.has_edge(role, *scc.members.begin(), *scc.members.begin());
                if (!cyclic)
                    continue;
                bool already = false;
                for (ElemId m : scc.members)
                    if (blown_cycle_of.count(m))
                        already = true;
                if (already)
                    continue;
                candidates.push_back({scc.members, role, inst});
            }
        }
        if (candidates.empty())
            return std::nullopt;
        // strictly top-down: only cycles not reachable from another unblown cycle
        std::map<ElemId, int> dist = bfs_distances();
        std::optional<CycleRef> best;
        int best_key = 0;
        ElemId best_id = 0;
        for (size_t c = 0; c < candidates.size(); ++c) {
            bool dominated = false;
            for (size_t other = 0; other < candidates.size() && !dominated; ++other) {
                if (other == c)
                    continue;
                std::set<ElemId> from = reachable_from_set(candidates[other].members);
                for (ElemId m : candidates[c].members)
                    if (from.count(m)) {
                        dominated = true;
                        break;
                    }
            }
            if (dominated)
                continue;
            int key = 1 << 30;
            for (ElemId m : candidates[c].members)
                if (dist.count(m))
                    key = std::min(key, dist.at(m));
            ElemId min_id = *candidates[c].members.begin();
            if (!best || key < best_key || (key == best_key && min_id < best_id)) {
                Interpretation piece;
                {
                    std::set<ElemId> inst_members;
                    for (const auto &[e, i] : instance_of)
                        if (i == candidates[c].instance && cur.has_element(e))
                            inst_members.insert(e);
                    piece = induced(cur, inst_members);
                }
                CycleRef ref;
                ref.role = candidates[c].role;
                ref.instance = candidates[c].instance;
                ref.members_in_order = order_cycle(piece, candidates[c].role,
                                                   candidates[c].members);
                best = ref;
                best_key = key;
                best_id = min_id;
            }
        }
        if (!best)
            throw Error("blow_up: cyclic dependency among cycles (internal)");
        return best;
    }

    std::set<ElemId> reachable_from_set(const std::set<ElemId> &starts) const {
        std::set<ElemId> visited = starts;
        std::deque<ElemId> queue(starts.begin(), starts.end());
        while (!queue.empty()) {
            ElemId u = queue.front();
            queue.pop_front();
            for (const auto &[role, edges] : cur.roles)
                for (const Edge &e : edges)
                    if (e.first == u && visited.insert(e.second).second)
                        queue.push_back(e.second);
        }
        return visited;
    }

    std::vector<ElemId> order_cycle(const Interpretation &piece, RoleId role,
                                    const std::set<ElemId> &members) {
        // entry: member with a predecessor outside the cycle, else minimum id
        std::set<ElemId> entries;
        for (const auto &[r, edges] : cur.roles)
            for (const Edge &e : edges)
                if (members.count(e.second) && !members.count(e.first))
                    entries.insert(e.second);
        ElemId entry = entries.empty() ? *members.begin() : *entries.begin();
        if (entries.size() > 1)
            throw Error("blow_up: cycle has several entry points; shape is not elementary");
        std::vector<ElemId> order{entry};
        ElemId cursor = entry;
        while (order.size() < members.size()) {
            ElemId next = kNoId;
            for (ElemId v : piece.successors(role, cursor))
                if (members.count(v) && v != cursor) {
                    if (next != kNoId)
                        throw Error("blow_up: cycle is not simple");
                    next = v;
                }
            if (next == kNoId || next == entry)
                throw Error("blow_up: cycle is not simple");
            order.push_back(next);
            cursor = next;
        }
        // validate closing edge
        if (!piece.has_edge(role, order.back(), entry))
            throw Error("blow_up: cycle is not closed");
        return order;
    }

    void blow(const CycleRef &cycle) {
        const std::vector<ElemId> &members = cycle.members_in_order;
        std::set<ElemId> member_set(members.begin(), members.end());
        int m = static_cast<int>(members.size());
        int copies = 2 * n + 1;

        // pendants: reachable from v_i without visiting other cycle members
        std::vector<std::set<ElemId>> pendant(m);
        for (int i = 0; i < m; ++i) {
            std::set<ElemId> seen{members[i]};
            std::deque<ElemId> queue{members[i]};
            while (!queue.empty()) {
                ElemId u = queue.front();
                queue.pop_front();
                for (const auto &[role, edges] : cur.roles)
                    for (const Edge &e : edges) {
                        if (e.first != u)
                            continue;
                        if (member_set.count(e.second) && e.second != members[i])
                            continue;
                        if (seen.insert(e.second).second)
                            queue.push_back(e.second);
                    }
            }
            seen.erase(members[i]);
            for (ElemId other : members)
                if (seen.count(other))
                    throw Error("blow_up: pendant reaches back into its cycle");
            pendant[i] = std::move(seen);
        }

        // elements that stay: those still reachable from the root without the cycle
        std::set<ElemId> without_cycle;
        for (ElemId e : cur.elements)
            if (!member_set.count(e))
                without_cycle.insert(e);
        Interpretation survivor_graph = induced(cur, without_cycle);
        std::set<ElemId> survivors = reachable_from(survivor_graph, root);
        std::set<ElemId> removed;
        for (ElemId e : cur.elements)
            if (!survivors.count(e))
                removed.insert(e);
        for (const auto &[individual, elem] : cur.individual_of)
            if (removed.count(elem))
                throw Error("blow_up: named individual inside a blown region");

        // fresh copies per (cycle position, lap)
        auto copy_key = [m](int i, int j) { return j * m + i; };
        std::vector<std::map<ElemId, ElemId>> copy_of(
            static_cast<size_t>(m) * copies);  // member i, lap j: v_i and pendant(v_i)
        std::vector<ElemId> cycle_copy_order;
        for (int j = 0; j < copies; ++j)
            for (int i = 0; i < m; ++i) {
                std::map<ElemId, ElemId> &slot = copy_of[copy_key(i, j)];
                slot[members[i]] = next_id++;
                cycle_copy_order.push_back(slot.at(members[i]));
                for (ElemId x : pendant[i])
                    slot[x] = next_id++;
            }

        Interpretation next = induced(cur, survivors);

        // piece-instance bookkeeping for copies
        std::map<std::tuple<int, int, int>, int> instance_copy;  // (orig, i, j) -> new
        auto instance_for = [&](ElemId original, int i, int j) {
            int orig_inst = instance_of.at(original);
            if (orig_inst == cycle.instance)
                return cycle.instance;
            auto key = std::make_tuple(orig_inst, i, j);
            auto it = instance_copy.find(key);
            if (it != instance_copy.end())
                return it->second;
            int id = static_cast<int>(instances.size());
            instances.push_back(instances[orig_inst]);
            instance_copy[key] = id;
            return id;
        };

        for (int j = 0; j < copies; ++j) {
            for (int i = 0; i < m; ++i) {
                const std::map<ElemId, ElemId> &slot = copy_of[copy_key(i, j)];
                for (const auto &[original, id] : slot) {
                    next.add_element(id);
                    provenance[id] = provenance.at(original);
                    instance_of[id] = instance_for(original, i, j);
                    for (const auto &[concept_id, extension] : cur.concepts)
                        if (extension.count(original))
                            next.add_concept(concept_id, id);
                }
                // edges within the copied region ({v_i} + pendant)
                for (const auto &[role, edges] : cur.roles)
                    for (const Edge &e : edges) {
                        if (!slot.count(e.first) || !slot.count(e.second))
                            continue;
                        if (e.second == members[i])
                            continue;  // no pendant edge re-enters the member
                        next.add_edge(role, slot.at(e.first), slot.at(e.second));
                    }
                // carry over blown-cycle membership of copied earlier cycles
                for (const auto &[original, id] : slot)
                    if (blown_cycle_of.count(original))
                        throw Error("blow_up: copied an already blown cycle (not top-down)");
            }
        }
        // the long cycle
        for (int j = 0; j < copies; ++j)
            for (int i = 0; i < m; ++i) {
                ElemId from = copy_of[copy_key(i, j)].at(members[i]);
                ElemId to = i + 1 < m ? copy_of[copy_key(i + 1, j)].at(members[i + 1])
                                      : copy_of[copy_key(0, (j + 1) % copies)].at(members[0]);
                next.add_edge(cycle.role, from, to);
            }
        // incoming edges from survivors go to the first copy of the entry
        for (const auto &[role, edges] : cur.roles)
            for (const Edge &e : edges) {
                if (!survivors.count(e.first) || !member_set.count(e.second))
                    continue;
                if (e.second != members[0])
                    throw Error("blow_up: external edge into a non-entry element");
                next.add_edge(role, e.first, copy_of[copy_key(0, 0)].at(members[0]));
            }

        // remap parent pointers and roots of copied piece instances
        for (const auto &[key, inst_id] : instance_copy) {
            PieceInstance &inst = instances[inst_id];
            auto [orig, i, j] = key;
            const std::map<ElemId, ElemId> &slot = copy_of[copy_key(i, j)];
            if (slot.count(inst.parent_element))
                inst.parent_element = slot.at(inst.parent_element);
            if (slot.count(inst.root))
                inst.root = slot.at(inst.root);
            if (inst.parent >= 0 && inst.parent != cycle.instance) {
                auto pkey = std::make_tuple(inst.parent, i, j);
                auto it = instance_copy.find(pkey);
                if (it != instance_copy.end())
                    inst.parent = it->second;
            }
        }
        if (instances[cycle.instance].root != kNoId &&
            removed.count(instances[cycle.instance].root)) {
            // the piece root was on or below the cycle: its new root is the entry copy
            instances[cycle.instance].root = copy_of[copy_key(0, 0)].at(members[0]);
        }

        int cycle_id = static_cast<int>(blown_cycles.size());
        blown_cycles.push_back(cycle_copy_order);
        blown_cycle_role.push_back(cycle.role);
        for (ElemId e : cycle_copy_order)
            blown_cycle_of[e] = cycle_id;
        cur = std::move(next);
    }

    void partial_closure() {
        for (RoleId t : sig.transitive_roles()) {
            // directed reachability, then add shortcuts except inside one blown cycle
            std::map<ElemId, std::set<ElemId>> reach;
            for (ElemId e : cur.elements) {
                std::set<ElemId> seen;
                std::deque<ElemId> queue;
                for (ElemId v : cur.successors(t, e))
                    if (seen.insert(v).second)
                        queue.push_back(v);
                while (!queue.empty()) {
                    ElemId u = queue.front();
                    queue.pop_front();
                    for (ElemId v : cur.successors(t, u))
                        if (seen.insert(v).second)
                            queue.push_back(v);
                }
                reach[e] = std::move(seen);
            }
            for (const auto &[e, targets] : reach)
                for (ElemId v : targets) {
                    auto i1 = blown_cycle_of.find(e);
                    auto i2 = blown_cycle_of.find(v);
                    if (i1 != blown_cycle_of.end() && i2 != blown_cycle_of.end() &&
                        i1->second == i2->second)
                        continue;
                    cur.add_edge(t, e, v);
                }
        }
    }

    void close_first_n() {
        for (size_t c = 0; c < blown_cycles.size(); ++c) {
            const std::vector<ElemId> &order = blown_cycles[c];
            int m = static_cast<int>(order.size()) / (2 * n + 1);
            int limit = n * m;
            for (int i = 0; i < limit; ++i)
                for (int j = i + 1; j < limit; ++j)
                    cur.add_edge(blown_cycle_role[c], order[i], order[j]);
        }
    }
};

} // namespace

BlownInterpretation blow_up(const PiecewiseElementary &g, int n, const Signature &sig,
                            ConceptId finite_concept) {
    if (n < 1)
        throw Error("blow_up: n must be positive");
    PiecewiseCheck check = validate_piecewise(g, sig, finite_concept);
    if (!check.ok)
        throw Error("blow_up: input is not piecewise elementary: " + check.violation);

    BlowUpState state{sig, finite_concept, n, g.flatten(), g.root(), {}, {}, {}, {}, {}, {}, 0};
    for (size_t idx = 0; idx < g.pieces.size(); ++idx) {
        const Piece &p = g.pieces[idx];
        PieceInstance inst;
        inst.role = p.role;
        inst.parent = p.parent;
        inst.parent_element = p.parent_element;
        inst.cross_role = p.cross_role;
        inst.root = p.shape.root;
        state.instances.push_back(inst);
        for (ElemId e : p.shape.interp.elements)
            state.instance_of[e] = static_cast<int>(idx);
    }
    for (ElemId e : state.cur.elements)
        state.provenance[e] = e;
    state.next_id = state.cur.max_element() + 1;

    int guard = 0;
    while (auto cycle = state.find_cycle()) {
        state.blow(*cycle);
        if (++guard > 100000)
            throw Error("blow_up: too many cycles (internal)");
    }
    state.partial_closure();
    state.close_first_n();

    BlownInterpretation result;
    result.flat = state.cur;
    result.provenance = state.provenance;
    result.blown_cycles = state.blown_cycles;

    // reassemble the piece decomposition (instances that still own elements)
    std::map<int, std::set<ElemId>> members;
    for (const auto &[e, inst] : state.instance_of)
        if (state.cur.has_element(e))
            members[inst].insert(e);
    std::map<int, int> new_index;
    std::vector<int> order;
    std::function<void(int)> add_subtree = [&](int inst) {
        order.push_back(inst);
        for (int other = 0; other < static_cast<int>(state.instances.size()); ++other)
            if (members.count(other) && state.instances[other].parent == inst &&
                other != inst)
                add_subtree(other);
    };
    int root_inst = state.instance_of.at(state.root);
    add_subtree(root_inst);
    for (int inst : order) {
        new_index[inst] = static_cast<int>(result.structure.pieces.size());
        Piece p;
        p.role = state.instances[inst].role;
        p.shape.interp = induced(state.cur, members.at(inst));
        p.shape.root = state.instances[inst].root;
        if (inst != root_inst) {
            p.parent = new_index.at(state.instances[inst].parent);
            p.parent_element = state.instances[inst].parent_element;
            p.cross_role = state.instances[inst].cross_role;
        }
        result.structure.pieces.push_back(std::move(p));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Piecewise unravelling
// ---------------------------------------------------------------------------

Unravelling piecewise_unravel(const PiecewiseElementary &g, const Signature &sig,
                              ConceptId finite_concept, int path_depth) {
    Unravelling result;
    Interpretation flat = g.flatten();
    result.target = transitive_closure(flat, sig);

    ElemId next_id = 0;
    struct InstanceCopy {
        int piece;
        Unravelling unravelling;             // ids already offset
        std::map<ElemId, ElemId> renamed;    // piece unravelling id -> global id
    };
    std::vector<InstanceCopy> copies;

    std::function<int(int, ElemId, RoleId)> instantiate = [&](int piece_idx,
                                                              ElemId attach_elem,
                                                              RoleId cross_role) -> int {
        const Piece &piece = g.pieces[piece_idx];
        Unravelling u;
        if (!piece.role) {
            // singleton piece: a verbatim copy
            u.interp = piece.shape.interp;
            u.root = piece.shape.root;
            for (ElemId e : u.interp.elements) {
                u.projection.mapping[e] = e;
                u.depth[e] = 0;
                UnravelNode node;
                node.kind = UnravelNode::Kind::Kept;
                node.original = e;
                u.nodes[e] = node;
            }
        } else {
            Generator gen{piece.shape, Generator::Mode::Quasi};
            u = quasi_unravel(gen, *piece.role, finite_concept, path_depth);
        }
        InstanceCopy copy;
        copy.piece = piece_idx;
        std::map<ElemId, ElemId> renamed;
        for (ElemId e : u.interp.elements)
            renamed[e] = next_id++;
        Interpretation fresh;
        for (ElemId e : u.interp.elements)
            fresh.add_element(renamed.at(e));
        for (const auto &[c, ext] : u.interp.concepts)
            for (ElemId e : ext)
                fresh.add_concept(c, renamed.at(e));
        for (const auto &[r, edges] : u.interp.roles)
            for (const Edge &e : edges)
                fresh.add_edge(r, renamed.at(e.first), renamed.at(e.second));
        for (const auto &[individual, elem] : u.interp.individual_of)
            fresh.set_individual(individual, renamed.at(elem));

        result.interp = interp_union(result.interp, fresh);
        for (ElemId e : u.interp.elements) {
            result.projection.mapping[renamed.at(e)] = u.projection.mapping.at(e);
            result.depth[renamed.at(e)] = u.depth.count(e) ? u.depth.at(e) : 0;
        }
        ElemId root_copy = renamed.at(u.root);
        if (attach_elem != kNoId)
            result.interp.add_edge(cross_role, attach_elem, root_copy);
        if (piece_idx == 0)
            result.root = root_copy;

        copy.renamed = renamed;
        copy.unravelling = std::move(u);
        copies.push_back(std::move(copy));
        int copy_idx = static_cast<int>(copies.size()) - 1;

        // children: one fresh instance per copy of the attachment element
        for (size_t child = 0; child < g.pieces.size(); ++child) {
            const Piece &cp = g.pieces[child];
            if (cp.parent != piece_idx)
                continue;
            const InstanceCopy &me = copies[copy_idx];
            std::vector<std::pair<ElemId, ElemId>> attach_points;  // (local, global)
            for (const auto &[local, global] : me.renamed)
                if (me.unravelling.projection.mapping.at(local) == cp.parent_element)
                    attach_points.push_back({local, global});
            for (const auto &[local, global] : attach_points)
                instantiate(static_cast<int>(child), global, cp.cross_role);
        }
        return copy_idx;
    };

    instantiate(0, kNoId, kNoId);
    result.interp = transitive_closure(result.interp, sig);
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string generator_to_json(const Generator &g, const Signature &sig) {
    nlohmann::ordered_json j;
    j["mode"] = g.mode == Generator::Mode::Quasi ? "quasi" : "classical";
    j["root"] = g.base.root;
    nlohmann::ordered_json roles = nlohmann::ordered_json::object();
    for (RoleId r = 0; r < sig.num_roles(); ++r)
        roles[sig.role_name(r)] = sig.role_transitive(r) ? "trans" : "role";
    j["roles"] = roles;
    j["interpretation"] = nlohmann::ordered_json::parse(interp_to_json(g.base.interp, sig));
    return j.dump(2) + "\n";
}

Generator generator_from_json(const std::string &text, Signature &sig) {
    nlohmann::json j = nlohmann::json::parse(text);
    Generator g;
    if (j.contains("roles"))
        for (const auto &[name, kind] : j.at("roles").items())
            sig.intern_role(name, kind.get<std::string>() == "trans");
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "quasi")
        g.mode = Generator::Mode::Quasi;
    else if (mode == "classical")
        g.mode = Generator::Mode::Classical;
    else
        throw Error("generator mode must be 'quasi' or 'classical'");
    g.base.root = j.at("root").get<ElemId>();
    g.base.interp = interp_from_json(j.at("interpretation").dump(), sig);
    return g;
}

std::string piecewise_to_json(const PiecewiseElementary &g, const Signature &sig) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json roles = nlohmann::ordered_json::object();
    for (RoleId r = 0; r < sig.num_roles(); ++r)
        roles[sig.role_name(r)] = sig.role_transitive(r) ? "trans" : "role";
    j["roles"] = roles;
    nlohmann::ordered_json pieces = nlohmann::ordered_json::array();
    for (const Piece &p : g.pieces) {
        nlohmann::ordered_json pj;
        pj["root"] = p.shape.root;
        pj["role"] = p.role ? nlohmann::ordered_json(sig.role_name(*p.role))
                            : nlohmann::ordered_json(nullptr);
        pj["interpretation"] =
            nlohmann::ordered_json::parse(interp_to_json(p.shape.interp, sig));
        if (p.parent >= 0) {
            pj["parent"] = p.parent;
            pj["parent_element"] = p.parent_element;
            pj["cross_role"] = sig.role_name(p.cross_role);
        }
        pieces.push_back(pj);
    }
    j["pieces"] = pieces;
    return j.dump(2) + "\n";
}

PiecewiseElementary piecewise_from_json(const std::string &text, Signature &sig) {
    nlohmann::json j = nlohmann::json::parse(text);
    PiecewiseElementary g;
    if (j.contains("roles"))
        for (const auto &[name, kind] : j.at("roles").items())
            sig.intern_role(name, kind.get<std::string>() == "trans");
    for (const auto &pj : j.at("pieces")) {
        Piece p;
        p.shape.root = pj.at("root").get<ElemId>();
        if (!pj.at("role").is_null()) {
            RoleId role = sig.role_id(pj.at("role").get<std::string>());
            if (role == kNoId)
                throw Error("piecewise piece uses undeclared role");
            p.role = role;
        }
        p.shape.interp = interp_from_json(pj.at("interpretation").dump(), sig);
        if (pj.contains("parent")) {
            p.parent = pj.at("parent").get<int>();
            p.parent_element = pj.at("parent_element").get<ElemId>();
            RoleId cross = sig.role_id(pj.at("cross_role").get<std::string>());
            if (cross == kNoId)
                throw Error("piecewise cross edge uses undeclared role");
            p.cross_role = cross;
        }
        g.pieces.push_back(std::move(p));
    }
    return g;
}

} // namespace pfent
