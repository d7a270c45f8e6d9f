#include "pfent/entail.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include <json.hpp>

namespace pfent {

namespace {

// A block's shape after the blow-up, with port instances per element copy.
struct BlownBlock {
    Interpretation flat;
    ElemId root = kNoId;
    std::vector<std::pair<int, ElemId>> port_instances;  // (port index, element)
};

BlownBlock blow_block(const Block &b, const KnowledgeBase &kb, int n) {
    BlownBlock result;
    std::map<ElemId, ElemId> provenance;
    if (!b.role) {
        result.flat = b.shape.interp;
        result.root = b.shape.root;
        for (ElemId e : result.flat.elements)
            provenance[e] = e;
    } else {
        // wrap into a piecewise object with an artificial singleton root
        PiecewiseElementary wrapper;
        Piece root_piece;
        ElemId wrapper_root = b.shape.interp.max_element() + 1;
        root_piece.shape.interp.add_element(wrapper_root);
        root_piece.shape.root = wrapper_root;
        wrapper.pieces.push_back(root_piece);
        Piece body;
        body.shape = b.shape;
        body.role = b.role;
        body.parent = 0;
        body.parent_element = wrapper_root;
        body.cross_role = *b.role;
        wrapper.pieces.push_back(body);
        BlownInterpretation blown = blow_up(wrapper, n, kb.signature, kb.finite_concept);
        std::set<ElemId> keep = blown.flat.elements;
        keep.erase(wrapper_root);
        result.flat = induced(blown.flat, keep);
        for (const Piece &p : blown.structure.pieces)
            if (p.parent == 0)
                result.root = p.shape.root;
        for (ElemId e : keep)
            provenance[e] = blown.provenance.at(e);
    }
    for (const auto &[e, orig] : provenance)
        for (size_t p = 0; p < b.ports.size(); ++p)
            if (b.ports[p].element == orig)
                result.port_instances.push_back({static_cast<int>(p), e});
    return result;
}

bool block_axioms_ok(const Block &b, const KnowledgeBase &kb) {
    Interpretation closed =
        b.role ? transitive_closure_role(b.shape.interp, *b.role) : b.shape.interp;
    auto port_with = [&b](ElemId e, RoleId r, ConceptId required) {
        for (const Port &p : b.ports)
            if (p.element == e && p.role == r && p.required_root.count(required))
                return true;
        return false;
    };
    for (ElemId e : closed.elements) {
        UnaryType type = element_type(closed, e);
        for (const Axiom &ax : kb.tbox) {
            switch (ax.kind) {
            case Axiom::Kind::ConjDisj: {
                bool lhs = true;
                for (ConceptId c : ax.lhs)
                    if (!type.count(c)) {
                        lhs = false;
                        break;
                    }
                if (!lhs)
                    break;
                bool rhs = false;
                for (ConceptId c : ax.rhs)
                    if (type.count(c)) {
                        rhs = true;
                        break;
                    }
                if (!rhs)
                    return false;
                break;
            }
            case Axiom::Kind::SomeValues: {
                if (!type.count(ax.a))
                    break;
                if (b.role && ax.role == *b.role) {
                    bool witnessed = false;
                    for (ElemId v : closed.successors(*b.role, e))
                        if (closed.in_concept(ax.b, v)) {
                            witnessed = true;
                            break;
                        }
                    if (!witnessed)
                        return false;
                } else if (!port_with(e, ax.role, ax.b)) {
                    return false;
                }
                break;
            }
            case Axiom::Kind::AllValues: {
                if (!type.count(ax.a))
                    break;
                if (b.role && ax.role == *b.role) {
                    for (ElemId v : closed.successors(*b.role, e))
                        if (!closed.in_concept(ax.b, v))
                            return false;
                }
                for (const Port &p : b.ports) {
                    if (p.element != e || p.role != ax.role)
                        continue;
                    if (!p.required_root.count(ax.b))
                        return false;
                    if (kb.signature.role_transitive(ax.role) &&
                        !p.required_everywhere.count(ax.b))
                        return false;
                }
                break;
            }
            }
        }
    }
    return true;
}

// One way a potential match of `s` could split across this block: the residual
// subqueries delegated to port instances. A profile with no residuals means the
// subquery matches the blown shape outright.
using Profile = std::vector<std::pair<int, Subquery>>;

struct ProfileEnumerator {
    const Block &block;
    const BlownBlock &blown;
    const Subquery &s;

    std::vector<ElemId> flat_elems;
    int num_flat;
    int num_instances;
    std::vector<int> assignment;  // per variable: target code
    std::set<Profile> profiles;

    // target codes: [0, num_flat) flat elements;
    // num_flat + 2*i: (instance i, root); +1: (instance i, below)
    ProfileEnumerator(const Block &b, const BlownBlock &bl, const Subquery &s)
        : block(b), blown(bl), s(s),
          flat_elems(bl.flat.elements.begin(), bl.flat.elements.end()),
          num_flat(static_cast<int>(flat_elems.size())),
          num_instances(static_cast<int>(bl.port_instances.size())) {}

    bool is_flat(int code) const { return code < num_flat; }
    int instance_of(int code) const { return (code - num_flat) / 2; }
    bool is_root(int code) const { return (code - num_flat) % 2 == 0; }

    bool atom_ok(const ConjunctiveQuery::Atom &atom) const {
        int cx = assignment[atom.x];
        if (atom.unary) {
            if (cx < 0)
                return true;
            if (is_flat(cx))
                return blown.flat.in_concept(atom.predicate, flat_elems[cx]);
            return true;  // delegated
        }
        int cy = assignment[atom.y];
        if (cx < 0 || cy < 0)
            return true;
        if (is_flat(cx) && is_flat(cy))
            return blown.flat.has_edge(atom.predicate, flat_elems[cx], flat_elems[cy]);
        if (is_flat(cx)) {
            // bridge: only the cross edge from the port element to the child root
            int inst = instance_of(cy);
            if (!is_root(cy))
                return false;
            const auto &[port_idx, port_elem] = blown.port_instances[inst];
            return block.ports[port_idx].role == atom.predicate &&
                   flat_elems[cx] == port_elem;
        }
        if (is_flat(cy))
            return false;  // no edges climb back out of a subtree
        return instance_of(cx) == instance_of(cy);  // same subtree: residual atom
    }

    void run() {
        assignment.assign(s.query.num_variables(), -1);
        recurse(0);
    }

    void recurse(int var) {
        if (var == s.query.num_variables()) {
            emit();
            return;
        }
        int limit = num_flat + 2 * num_instances;
        for (int code = 0; code < limit; ++code) {
            if (s.root_var && *s.root_var == var) {
                // pinned to the blown root
                if (!is_flat(code) || flat_elems[code] != blown.root)
                    continue;
            }
            assignment[var] = code;
            bool ok = true;
            for (const auto &atom : s.query.atoms)
                if (!atom_ok(atom)) {
                    ok = false;
                    break;
                }
            if (ok)
                recurse(var + 1);
            assignment[var] = -1;
        }
    }

    void emit() {
        std::map<int, std::vector<VarId>> by_instance;
        for (VarId v = 0; v < s.query.num_variables(); ++v)
            if (!is_flat(assignment[v]))
                by_instance[instance_of(assignment[v])].push_back(v);
        Profile profile;
        for (const auto &[inst, vars] : by_instance) {
            // residual: atoms entirely inside this subtree, root-pinned vars merged
            ConjunctiveQuery residual;
            std::map<VarId, int> var_class;
            bool has_root = false;
            for (VarId v : vars)
                if (is_root(assignment[v]))
                    has_root = true;
            int next_class = has_root ? 1 : 0;
            if (has_root)
                residual.variables.push_back("x0");
            for (VarId v : vars) {
                if (is_root(assignment[v])) {
                    var_class[v] = 0;
                } else {
                    var_class[v] = next_class++;
                    residual.variables.push_back("x" + std::to_string(var_class[v]));
                }
            }
            for (const auto &atom : s.query.atoms) {
                bool x_in = var_class.count(atom.x) > 0;
                bool y_in = !atom.unary && var_class.count(atom.y) > 0;
                if (atom.unary) {
                    if (!x_in)
                        continue;
                    ConjunctiveQuery::Atom mapped = atom;
                    mapped.x = var_class[atom.x];
                    residual.add_atom(mapped);
                } else {
                    if (!x_in || !y_in)
                        continue;  // bridge atoms are realized by the cross edge
                    ConjunctiveQuery::Atom mapped = atom;
                    mapped.x = var_class[atom.x];
                    mapped.y = var_class[atom.y];
                    residual.add_atom(mapped);
                }
            }
            Subquery canonical = canonical_subquery(
                residual, has_root ? std::optional<VarId>(0) : std::nullopt);
            profile.push_back({blown.port_instances[inst].first, std::move(canonical)});
        }
        std::sort(profile.begin(), profile.end());
        profile.erase(std::unique(profile.begin(), profile.end()), profile.end());
        profiles.insert(std::move(profile));
    }
};

bool subquery_refuted(const std::set<Profile> &profiles,
                      const std::vector<std::set<Subquery>> &port_annotations) {
    for (const Profile &profile : profiles) {
        bool blocked = false;
        for (const auto &[port_idx, residual] : profile) {
            if (port_idx < static_cast<int>(port_annotations.size()) &&
                port_annotations[port_idx].count(residual)) {
                blocked = true;
                break;
            }
        }
        if (!blocked)
            return false;  // a decomposition nothing guards against
    }
    return true;
}

} // namespace

bool validate_block(const Block &b, const KnowledgeBase &kb, const Ucq &q, int n) {
    (void)q;
    if (!block_axioms_ok(b, kb))
        return false;
    if (b.root_annotation.empty())
        return true;
    BlownBlock blown = blow_block(b, kb, std::max(n, 1));
    for (const Subquery &s : b.root_annotation) {
        ProfileEnumerator enumerator(b, blown, s);
        enumerator.run();
        if (!subquery_refuted(enumerator.profiles, b.port_annotations))
            return false;
    }
    return true;
}

bool port_fulfilled_by(const Port &p, const std::set<Subquery> &port_annotation,
                       const Block &candidate, const KnowledgeBase &kb) {
    UnaryType root_type = element_type(candidate.shape.interp, candidate.shape.root);
    for (ConceptId c : p.required_root)
        if (!root_type.count(c))
            return false;
    for (ConceptId c : p.required_everywhere) {
        for (ElemId e : candidate.shape.interp.elements)
            if (!candidate.shape.interp.in_concept(c, e))
                return false;
    }
    if (kb.signature.role_transitive(p.role)) {
        // the child receives an incoming t-edge: no t-edge may escape it
        for (const Port &cp : candidate.ports)
            if (cp.role == p.role)
                return false;
    }
    for (const Subquery &s : port_annotation)
        if (!candidate.root_annotation.count(s))
            return false;
    return true;
}

BlockSet eliminate_blocks(const BlockSet &b0, const KnowledgeBase &kb) {
    BlockSet current = b0;
    while (true) {
        std::vector<char> keep(current.blocks.size(), 1);
        bool changed = false;
        for (size_t i = 0; i < current.blocks.size(); ++i) {
            const Block &b = current.blocks[i];
            for (size_t p = 0; p < b.ports.size(); ++p) {
                const std::set<Subquery> empty;
                const std::set<Subquery> &ann =
                    p < b.port_annotations.size() ? b.port_annotations[p] : empty;
                bool fulfilled = false;
                for (size_t j = 0; j < current.blocks.size() && !fulfilled; ++j)
                    if (keep[j] &&
                        port_fulfilled_by(b.ports[p], ann, current.blocks[j], kb))
                        fulfilled = true;
                if (!fulfilled) {
                    keep[i] = 0;
                    changed = true;
                    break;
                }
            }
        }
        if (!changed)
            return current;
        BlockSet next;
        next.generation = current.generation + 1;
        for (size_t i = 0; i < current.blocks.size(); ++i)
            if (keep[i])
                next.blocks.push_back(current.blocks[i]);
        current = std::move(next);
    }
}

// ---------------------------------------------------------------------------
// The decision procedure (maximal-annotation fixpoint over block skeletons)
// ---------------------------------------------------------------------------

namespace {

struct Skeleton {
    RootedInterpretation shape;
    std::optional<RoleId> role;
    std::vector<Port> ports;
    BlownBlock blown;
    Block as_block() const {
        Block b;
        b.shape = shape;
        b.role = role;
        b.ports = ports;
        b.port_annotations.resize(ports.size());
        return b;
    }
};

using Mask = uint64_t;

std::vector<Mask> maximal_masks(std::vector<Mask> masks) {
    std::sort(masks.begin(), masks.end());
    masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
    std::vector<Mask> result;
    for (Mask a : masks) {
        bool dominated = false;
        for (Mask b : masks)
            if (a != b && (a & b) == a)
                dominated = true;
        if (!dominated)
            result.push_back(a);
    }
    return result;
}

struct Engine {
    const KnowledgeBase &kb;
    const Ucq &q;
    const DecideCaps &caps;
    int n;

    std::vector<Subquery> subqueries;
    std::map<Subquery, int> subquery_index;
    std::vector<Skeleton> skeletons;
    std::vector<std::vector<std::vector<int>>> compatible;  // [k][port] -> skeleton ids
    // profile cache: per (skeleton, subquery): list of profiles as
    // (port idx, subquery idx) pairs
    std::map<std::pair<int, int>, std::vector<std::vector<std::pair<int, int>>>> profile_cache;
    std::vector<std::vector<Mask>> achievable;

    Engine(const KnowledgeBase &kb, const Ucq &q, const DecideCaps &caps, int n)
        : kb(kb), q(q), caps(caps), n(n) {}

    void build_subqueries() {
        std::set<Subquery> set = subqueries_of(q);
        subqueries.assign(set.begin(), set.end());
        if (subqueries.size() > 62)
            throw Error("decide: subquery lattice exceeds 62 entries");
        for (size_t i = 0; i < subqueries.size(); ++i)
            subquery_index[subqueries[i]] = static_cast<int>(i);
    }

    void build_skeletons() {
        int num_concepts = kb.signature.num_concepts();
        if (num_concepts > 16)
            throw Error("decide: too many concept names");
        std::vector<Skeleton> raw;
        for (uint32_t mask = 0; mask < (uint32_t(1) << num_concepts); ++mask) {
            Skeleton k;
            k.shape.interp.add_element(0);
            k.shape.root = 0;
            for (int c = 0; c < num_concepts; ++c)
                if (mask & (uint32_t(1) << c))
                    k.shape.interp.add_concept(c, 0);
            k.ports = derive_block_ports(k.shape, std::nullopt);
            raw.push_back(std::move(k));
        }
        std::set<RoleId> tbox_transitive;
        for (const Axiom &ax : kb.tbox)
            if (ax.role != kNoId && kb.signature.role_transitive(ax.role))
                tbox_transitive.insert(ax.role);
        for (RoleId t : tbox_transitive) {
            std::vector<LabelledShape> shapes =
                enumerate_elementary(num_concepts, kb.finite_concept, t, caps.max_block_size,
                                     {}, caps.safety_limit);
            for (LabelledShape &shape : shapes) {
                if (shape.rooted.interp.size() == 1 && shape.rooted.interp.edges(t).empty())
                    continue;
                Skeleton k;
                k.shape = shape.rooted;
                k.role = t;
                k.ports = derive_block_ports(k.shape, t);
                raw.push_back(std::move(k));
            }
        }
        // parallel local validation (axioms), results collected positionally
        std::vector<char> ok(raw.size(), 0);
        int jobs = std::max(1, caps.jobs);
        auto worker = [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                Block b = raw[i].as_block();
                ok[i] = block_axioms_ok(b, kb) ? 1 : 0;
            }
        };
        if (jobs == 1 || raw.size() < 8) {
            worker(0, raw.size());
        } else {
            std::vector<std::future<void>> futures;
            size_t chunk = (raw.size() + jobs - 1) / jobs;
            for (size_t begin = 0; begin < raw.size(); begin += chunk)
                futures.push_back(std::async(std::launch::async, worker, begin,
                                             std::min(begin + chunk, raw.size())));
            for (auto &f : futures)
                f.get();
        }
        for (size_t i = 0; i < raw.size(); ++i) {
            if (!ok[i])
                continue;
            raw[i].blown = blow_block(raw[i].as_block(), kb, n);
            skeletons.push_back(std::move(raw[i]));
        }
    }

    std::vector<Port> derive_block_ports(const RootedInterpretation &shape,
                                         std::optional<RoleId> piece_role) {
        std::vector<Port> ports;
        for (ElemId e : shape.interp.elements) {
            UnaryType type = element_type(shape.interp, e);
            std::set<std::pair<RoleId, ConceptId>> seen;
            for (const Axiom &ax : kb.tbox) {
                if (ax.kind != Axiom::Kind::SomeValues || !type.count(ax.a))
                    continue;
                if (piece_role && ax.role == *piece_role)
                    continue;
                if (!seen.insert({ax.role, ax.b}).second)
                    continue;
                Port p;
                p.element = e;
                p.role = ax.role;
                for (const Axiom &av : kb.tbox)
                    if (av.kind == Axiom::Kind::AllValues && av.role == ax.role &&
                        type.count(av.a)) {
                        p.required_root.insert(av.b);
                        if (kb.signature.role_transitive(ax.role))
                            p.required_everywhere.insert(av.b);
                    }
                p.required_root.insert(ax.b);
                ports.push_back(std::move(p));
            }
        }
        std::sort(ports.begin(), ports.end());
        ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
        return ports;
    }

    void build_compatibility() {
        compatible.resize(skeletons.size());
        for (size_t k = 0; k < skeletons.size(); ++k) {
            compatible[k].resize(skeletons[k].ports.size());
            for (size_t p = 0; p < skeletons[k].ports.size(); ++p)
                for (size_t j = 0; j < skeletons.size(); ++j)
                    if (port_fulfilled_by(skeletons[k].ports[p], {},
                                          skeletons[j].as_block(), kb))
                        compatible[k][p].push_back(static_cast<int>(j));
        }
    }

    const std::vector<std::vector<std::pair<int, int>>> &profiles(int k, int s) {
        auto key = std::make_pair(k, s);
        auto it = profile_cache.find(key);
        if (it != profile_cache.end())
            return it->second;
        Block b = skeletons[k].as_block();
        ProfileEnumerator enumerator(b, skeletons[k].blown, subqueries[s]);
        enumerator.run();
        std::vector<std::vector<std::pair<int, int>>> compiled;
        for (const Profile &profile : enumerator.profiles) {
            std::vector<std::pair<int, int>> row;
            for (const auto &[port_idx, residual] : profile) {
                auto found = subquery_index.find(residual);
                // a residual outside the closure cannot be guarded against
                row.push_back({port_idx, found == subquery_index.end() ? -1 : found->second});
            }
            compiled.push_back(std::move(row));
        }
        return profile_cache.emplace(key, std::move(compiled)).first->second;
    }

    Mask refut(int k, const std::vector<Mask> &port_anns) {
        Mask result = 0;
        for (size_t s = 0; s < subqueries.size(); ++s) {
            bool refuted = true;
            for (const auto &profile : profiles(k, static_cast<int>(s))) {
                bool blocked = false;
                for (const auto &[port_idx, residual_idx] : profile) {
                    if (residual_idx >= 0 && port_idx < static_cast<int>(port_anns.size()) &&
                        (port_anns[port_idx] >> residual_idx) & 1) {
                        blocked = true;
                        break;
                    }
                }
                if (!blocked) {
                    refuted = false;
                    break;
                }
            }
            if (refuted)
                result |= Mask(1) << s;
        }
        return result;
    }

    void fixpoint() {
        Mask full = subqueries.empty() ? 0 : (Mask(~uint64_t(0)) >> (64 - subqueries.size()));
        achievable.assign(skeletons.size(), {});
        for (size_t k = 0; k < skeletons.size(); ++k) {
            std::vector<Mask> anns(skeletons[k].ports.size(), full);
            achievable[k] = {refut(static_cast<int>(k), anns)};
        }
        for (int round = 0; round < 100000; ++round) {
            bool changed = false;
            std::vector<std::vector<Mask>> next(skeletons.size());
            for (size_t k = 0; k < skeletons.size(); ++k) {
                size_t num_ports = skeletons[k].ports.size();
                // per-port choice sets: maximal achievable annotations of
                // compatible children
                std::vector<std::vector<Mask>> choices(num_ports);
                bool dead = false;
                for (size_t p = 0; p < num_ports; ++p) {
                    std::vector<Mask> pool;
                    for (int j : compatible[k][p])
                        for (Mask a : achievable[j])
                            pool.push_back(a);
                    choices[p] = maximal_masks(std::move(pool));
                    if (choices[p].empty())
                        dead = true;
                }
                if (dead) {
                    next[k] = {};
                    if (!achievable[k].empty())
                        changed = true;
                    continue;
                }
                long combos = 1;
                for (const auto &c : choices) {
                    combos *= static_cast<long>(c.size());
                    if (combos > 4096)
                        throw Error("decide: annotation antichains too large");
                }
                std::vector<Mask> results;
                std::vector<size_t> idx(num_ports, 0);
                while (true) {
                    std::vector<Mask> anns(num_ports);
                    for (size_t p = 0; p < num_ports; ++p)
                        anns[p] = choices[p][idx[p]];
                    results.push_back(refut(static_cast<int>(k), anns));
                    size_t pos = 0;
                    while (pos < num_ports && ++idx[pos] == choices[pos].size()) {
                        idx[pos] = 0;
                        ++pos;
                    }
                    if (pos == num_ports)
                        break;
                    if (num_ports == 0)
                        break;
                }
                next[k] = maximal_masks(std::move(results));
                if (next[k] != achievable[k])
                    changed = true;
            }
            achievable = std::move(next);
            if (!changed)
                return;
        }
        throw Error("decide: fixpoint did not stabilize (internal)");
    }
};

double theoretical_piece_bound(const KnowledgeBase &kb) {
    bool tbox_has_transitive = false;
    for (const Axiom &ax : kb.tbox)
        if (ax.role != kNoId && kb.signature.role_transitive(ax.role))
            tbox_has_transitive = true;
    if (!tbox_has_transitive)
        return 1.0;
    double l = kb.signature.num_concepts();
    return std::pow(l + 1.0, (l + 1.0) * (l + 1.0));
}

} // namespace

Verdict decide(const KnowledgeBase &kb, const Ucq &q, const DecideCaps &caps) {
    Verdict verdict;
    verdict.cap_block_size = caps.max_block_size;
    verdict.oracle_bound = caps.oracle_bound;
    verdict.theoretical_piece_bound = theoretical_piece_bound(kb);

    for (const ConjunctiveQuery &cq : q.disjuncts)
        if (cq.atoms.empty()) {
            verdict.status = Verdict::Status::Entailed;
            verdict.mode = Verdict::Mode::Exact;
            verdict.exact = true;
            return verdict;
        }
    if (q.disjuncts.empty())
        throw Error("decide: empty UCQ");

    // the exact path supports exactly one concept assertion and nothing else
    bool abox_supported = kb.abox.size() == 1 && !kb.abox.begin()->is_role();
    if (!abox_supported) {
        if (caps.oracle_bound <= 0)
            throw Error("decide: ABox is not a single concept assertion; "
                        "enable the oracle fallback");
        OracleOptions opts;
        opts.max_size = caps.oracle_bound;
        verdict.mode = Verdict::Mode::Oracle;
        if (auto counter = bounded_countermodel_search(kb, q, opts)) {
            verdict.status = Verdict::Status::NotEntailed;
            verdict.countermodel = *counter;
        } else {
            verdict.status = Verdict::Status::Entailed;
            verdict.exact = false;
        }
        return verdict;
    }

    if (caps.exact && verdict.theoretical_piece_bound > caps.max_block_size)
        throw Error("decide: --exact refused, theoretical piece bound " +
                    std::to_string(verdict.theoretical_piece_bound) +
                    " exceeds the block size cap");

    int n = 1;
    for (const ConjunctiveQuery &cq : q.disjuncts)
        n = std::max(n, cq.num_variables());
    verdict.blowup_n = n;

    Engine engine(kb, q, caps, n);
    engine.build_subqueries();
    engine.build_skeletons();
    engine.build_compatibility();
    engine.fixpoint();

    // root compatibility: a singleton block for the ABox individual whose type
    // realizes the asserted concept and whose annotation contains every disjunct
    ConceptId asserted = kb.abox.begin()->concept_;
    Mask needed = 0;
    for (const ConjunctiveQuery &cq : q.disjuncts) {
        Subquery canonical = canonical_subquery(cq, std::nullopt);
        auto it = engine.subquery_index.find(canonical);
        if (it == engine.subquery_index.end())
            throw Error("decide: disjunct missing from its own closure (internal)");
        needed |= Mask(1) << it->second;
    }
    int root_skeleton = -1;
    Mask root_mask = 0;
    for (size_t k = 0; k < engine.skeletons.size(); ++k) {
        const Skeleton &skel = engine.skeletons[k];
        if (skel.role)
            continue;
        if (!skel.shape.interp.in_concept(asserted, skel.shape.root))
            continue;
        for (Mask a : engine.achievable[k])
            if ((a & needed) == needed) {
                root_skeleton = static_cast<int>(k);
                root_mask = a;
                break;
            }
        if (root_skeleton >= 0)
            break;
    }

    if (root_skeleton >= 0) {
        verdict.status = Verdict::Status::NotEntailed;
        verdict.mode = caps.exact ? Verdict::Mode::Exact : Verdict::Mode::Capped;
        // greedy generator: a node is (skeleton, achieved annotation); per port,
        // the first choice (in canonical order) that lets the node keep its mask
        WitnessGenerator generator;
        std::map<std::pair<int, Mask>, int> block_of;
        std::function<int(int, Mask)> instantiate = [&](int k, Mask mask) -> int {
            auto key = std::make_pair(k, mask);
            auto it = block_of.find(key);
            if (it != block_of.end())
                return it->second;
            int index = static_cast<int>(generator.blocks.size());
            block_of[key] = index;
            Block b = engine.skeletons[k].as_block();
            for (size_t s = 0; s < engine.subqueries.size(); ++s)
                if ((mask >> s) & 1)
                    b.root_annotation.insert(engine.subqueries[s]);
            generator.blocks.push_back(std::move(b));
            size_t num_ports = engine.skeletons[k].ports.size();
            if (num_ports == 0)
                return index;
            std::vector<std::vector<Mask>> choices(num_ports);
            for (size_t p = 0; p < num_ports; ++p) {
                std::vector<Mask> pool;
                for (int j : engine.compatible[k][p])
                    for (Mask a : engine.achievable[j])
                        pool.push_back(a);
                choices[p] = maximal_masks(std::move(pool));
            }
            std::vector<size_t> idx(num_ports, 0);
            while (true) {
                std::vector<Mask> anns(num_ports);
                for (size_t p = 0; p < num_ports; ++p)
                    anns[p] = choices[p][idx[p]];
                if ((engine.refut(k, anns) & mask) == mask) {
                    for (size_t p = 0; p < num_ports; ++p) {
                        int child_skeleton = -1;
                        for (int j : engine.compatible[k][p])
                            if (std::find(engine.achievable[j].begin(),
                                          engine.achievable[j].end(),
                                          anns[p]) != engine.achievable[j].end()) {
                                child_skeleton = j;
                                break;
                            }
                        if (child_skeleton < 0)
                            throw Error("decide: chosen annotation lost its block (internal)");
                        int child = instantiate(child_skeleton, anns[p]);
                        for (size_t s = 0; s < engine.subqueries.size(); ++s)
                            if ((anns[p] >> s) & 1)
                                generator.blocks[index].port_annotations[p].insert(
                                    engine.subqueries[s]);
                        generator.port_child[{index, static_cast<int>(p)}] = child;
                    }
                    return index;
                }
                size_t pos = 0;
                while (pos < num_ports && ++idx[pos] == choices[pos].size()) {
                    idx[pos] = 0;
                    ++pos;
                }
                if (pos == num_ports)
                    throw Error("decide: achievable annotation not realizable (internal)");
            }
        };
        generator.root_block = instantiate(root_skeleton, root_mask);
        verdict.witness = generator;
        verdict.frontier_obligations = verify_witness(generator, kb, q, caps.witness_depth);
        return verdict;
    }

    if (verdict.theoretical_piece_bound <= caps.max_block_size) {
        verdict.status = Verdict::Status::Entailed;
        verdict.mode = Verdict::Mode::Exact;
        verdict.exact = true;
    } else {
        verdict.status = Verdict::Status::Inconclusive;
        verdict.mode = Verdict::Mode::Capped;
    }
    return verdict;
}

WitnessGenerator build_witness(const BlockSet &surviving, int root_block,
                               const KnowledgeBase &kb) {
    if (surviving.blocks.empty())
        throw Error("build_witness: empty block set");
    if (root_block < 0 || root_block >= static_cast<int>(surviving.blocks.size()))
        throw Error("build_witness: root block out of range");
    WitnessGenerator generator;
    generator.blocks = surviving.blocks;
    generator.root_block = root_block;
    for (size_t i = 0; i < surviving.blocks.size(); ++i) {
        const Block &b = surviving.blocks[i];
        for (size_t p = 0; p < b.ports.size(); ++p) {
            const std::set<Subquery> empty;
            const std::set<Subquery> &ann =
                p < b.port_annotations.size() ? b.port_annotations[p] : empty;
            bool found = false;
            for (size_t j = 0; j < surviving.blocks.size() && !found; ++j) {
                if (port_fulfilled_by(b.ports[p], ann, surviving.blocks[j], kb)) {
                    generator.port_child[{static_cast<int>(i), static_cast<int>(p)}] =
                        static_cast<int>(j);
                    found = true;
                }
            }
            if (!found)
                throw Error("build_witness: unfulfilled port in the surviving set");
        }
    }
    return generator;
}

PiecewiseElementary WitnessGenerator::expand(int depth) const {
    PiecewiseElementary result;
    ElemId next_id = 0;
    struct Frame {
        int block;
        int parent_piece;
        ElemId parent_element;
        RoleId cross_role;
        int level;
    };
    std::vector<Frame> stack{{root_block, -1, kNoId, kNoId, 1}};
    while (!stack.empty()) {
        Frame frame = stack.back();
        stack.pop_back();
        const Block &b = blocks.at(frame.block);
        std::map<ElemId, ElemId> rename;
        Piece piece;
        for (ElemId e : b.shape.interp.elements) {
            rename[e] = next_id++;
            piece.shape.interp.add_element(rename[e]);
        }
        for (const auto &[c, ext] : b.shape.interp.concepts)
            for (ElemId e : ext)
                piece.shape.interp.add_concept(c, rename[e]);
        for (const auto &[r, edges] : b.shape.interp.roles)
            for (const Edge &e : edges)
                piece.shape.interp.add_edge(r, rename[e.first], rename[e.second]);
        piece.shape.root = rename.at(b.shape.root);
        piece.role = b.role;
        piece.parent = frame.parent_piece;
        piece.parent_element = frame.parent_element;
        piece.cross_role = frame.cross_role;
        int piece_index = static_cast<int>(result.pieces.size());
        result.pieces.push_back(std::move(piece));
        if (frame.level >= depth)
            continue;
        for (size_t p = 0; p < b.ports.size(); ++p) {
            auto it = port_child.find({frame.block, static_cast<int>(p)});
            if (it == port_child.end())
                continue;
            stack.push_back({it->second, piece_index, rename.at(b.ports[p].element),
                             b.ports[p].role, frame.level + 1});
        }
    }
    return result;
}

std::vector<std::string> verify_witness(const WitnessGenerator &w, const KnowledgeBase &kb,
                                        const Ucq &q, int depth) {
    PiecewiseElementary prefix = w.expand(depth);
    // the witness models the ABox: pin the individual to the root
    if (!kb.abox.empty() && !kb.abox.begin()->is_role())
        prefix.pieces[0].shape.interp.set_individual(kb.abox.begin()->first,
                                                     prefix.pieces[0].shape.root);
    PiecewiseCheck check = validate_piecewise(prefix, kb.signature, kb.finite_concept);
    if (!check.ok)
        throw Error("witness expansion is not piecewise: " + check.violation);

    int path_depth = 3;
    for (const Piece &p : prefix.pieces)
        path_depth = std::max(path_depth, static_cast<int>(p.shape.interp.size()));
    Unravelling u = piecewise_unravel(prefix, kb.signature, kb.finite_concept, path_depth);

    // frontier: copies of leaf-piece elements (their ports were cut off) and
    // path nodes at the materialization depth
    std::set<ElemId> frontier;
    for (const auto &[e, d] : u.depth)
        if (d >= path_depth)
            frontier.insert(e);
    {
        std::vector<char> has_child(prefix.pieces.size(), 0);
        for (const Piece &p : prefix.pieces)
            if (p.parent >= 0)
                has_child[p.parent] = 1;
        std::set<ElemId> open_flat;
        for (size_t idx = 0; idx < prefix.pieces.size(); ++idx) {
            if (has_child[idx])
                continue;
            for (ElemId e : prefix.pieces[idx].shape.interp.elements)
                open_flat.insert(e);
        }
        for (const auto &[e, orig] : u.projection.mapping)
            if (open_flat.count(orig))
                frontier.insert(e);
    }

    std::vector<std::string> obligations;
    const Interpretation &model = u.interp;
    for (const Axiom &ax : kb.tbox) {
        switch (ax.kind) {
        case Axiom::Kind::ConjDisj: {
            for (ElemId e : model.elements) {
                bool lhs = true;
                for (ConceptId c : ax.lhs)
                    if (!model.in_concept(c, e)) {
                        lhs = false;
                        break;
                    }
                if (!lhs)
                    continue;
                bool rhs = false;
                for (ConceptId c : ax.rhs)
                    if (model.in_concept(c, e)) {
                        rhs = true;
                        break;
                    }
                if (!rhs)
                    throw Error("witness violates " + axiom_to_string(ax, kb.signature));
            }
            break;
        }
        case Axiom::Kind::AllValues: {
            for (const Edge &edge : model.edges(ax.role))
                if (model.in_concept(ax.a, edge.first) &&
                    !model.in_concept(ax.b, edge.second))
                    throw Error("witness violates " + axiom_to_string(ax, kb.signature));
            break;
        }
        case Axiom::Kind::SomeValues: {
            auto ext = model.concepts.find(ax.a);
            if (ext == model.concepts.end())
                break;
            for (ElemId e : ext->second) {
                bool witnessed = false;
                for (ElemId v : model.successors(ax.role, e))
                    if (model.in_concept(ax.b, v)) {
                        witnessed = true;
                        break;
                    }
                if (!witnessed) {
                    if (frontier.count(e))
                        obligations.push_back("open " + axiom_to_string(ax, kb.signature) +
                                              " at frontier element " + std::to_string(e));
                    else
                        throw Error("witness violates " + axiom_to_string(ax, kb.signature) +
                                    " at a non-frontier element");
                }
            }
            break;
        }
        }
    }
    UcqResult match = evaluate_ucq(q, model);
    if (match.satisfied)
        throw Error("witness expansion matches disjunct " + match.disjunct);
    return obligations;
}

std::string verdict_to_json(const Verdict &v, const KnowledgeBase &kb) {
    nlohmann::ordered_json j;
    switch (v.status) {
    case Verdict::Status::NotEntailed: j["status"] = "not-entailed"; break;
    case Verdict::Status::Entailed: j["status"] = "entailed"; break;
    case Verdict::Status::Inconclusive: j["status"] = "inconclusive"; break;
    }
    switch (v.mode) {
    case Verdict::Mode::Exact: j["mode"] = "exact"; break;
    case Verdict::Mode::Capped: j["mode"] = "capped"; break;
    case Verdict::Mode::Oracle: j["mode"] = "oracle"; break;
    }
    j["exact"] = v.exact;
    j["caps"] = {{"block_size", v.cap_block_size},
                 {"blowup_n", v.blowup_n},
                 {"oracle_bound", v.oracle_bound},
                 {"theoretical_piece_bound", v.theoretical_piece_bound}};
    if (v.witness) {
        nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
        for (const Block &b : v.witness->blocks)
            blocks.push_back(nlohmann::ordered_json::parse(block_to_json(b, kb.signature)));
        nlohmann::ordered_json children = nlohmann::ordered_json::array();
        for (const auto &[key, child] : v.witness->port_child)
            children.push_back({{"block", key.first}, {"port", key.second}, {"child", child}});
        j["witness"] = {{"root_block", v.witness->root_block},
                        {"blocks", blocks},
                        {"port_children", children}};
    }
    if (v.countermodel)
        j["countermodel"] =
            nlohmann::ordered_json::parse(interp_to_json(*v.countermodel, kb.signature));
    if (!v.frontier_obligations.empty())
        j["frontier_obligations"] = v.frontier_obligations;
    return j.dump(2) + "\n";
}

} // namespace pfent
