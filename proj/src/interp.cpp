#include "pfent/interp.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace pfent {

void Interpretation::add_concept(ConceptId c, ElemId e) {
    if (!has_element(e))
        throw Error("add_concept: element " + std::to_string(e) + " not in domain");
    concepts[c].insert(e);
}

void Interpretation::add_edge(RoleId r, ElemId u, ElemId v) {
    if (!has_element(u) || !has_element(v))
        throw Error("add_edge: endpoint not in domain");
    roles[r].insert({u, v});
}

void Interpretation::set_individual(IndividualId a, ElemId e) {
    if (!has_element(e))
        throw Error("set_individual: element not in domain");
    for (const auto &[other, elem] : individual_of)
        if (elem == e && other != a)
            throw Error("set_individual: element already names a distinct individual");
    individual_of[a] = e;
}

bool Interpretation::in_concept(ConceptId c, ElemId e) const {
    auto it = concepts.find(c);
    return it != concepts.end() && it->second.count(e) > 0;
}

bool Interpretation::has_edge(RoleId r, ElemId u, ElemId v) const {
    auto it = roles.find(r);
    return it != roles.end() && it->second.count({u, v}) > 0;
}

const std::set<Edge> &Interpretation::edges(RoleId r) const {
    static const std::set<Edge> empty;
    auto it = roles.find(r);
    return it == roles.end() ? empty : it->second;
}

std::vector<ElemId> Interpretation::successors(RoleId r, ElemId u) const {
    std::vector<ElemId> result;
    for (const Edge &e : edges(r))
        if (e.first == u)
            result.push_back(e.second);
    return result;
}

std::vector<ElemId> Interpretation::predecessors(RoleId r, ElemId v) const {
    std::vector<ElemId> result;
    for (const Edge &e : edges(r))
        if (e.second == v)
            result.push_back(e.first);
    return result;
}

ElemId Interpretation::max_element() const {
    return elements.empty() ? -1 : *elements.rbegin();
}

Interpretation transitive_closure_role(const Interpretation &i, RoleId role) {
    Interpretation result = i;
    auto it = result.roles.find(role);
    if (it == result.roles.end())
        return result;
    std::set<Edge> &edges = it->second;
    // saturate: small inputs, simple fixpoint
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<Edge> fresh;
        for (const Edge &ab : edges)
            for (const Edge &bc : edges)
                if (ab.second == bc.first && !edges.count({ab.first, bc.second}))
                    fresh.push_back({ab.first, bc.second});
        for (const Edge &e : fresh) {
            edges.insert(e);
            changed = true;
        }
    }
    return result;
}

Interpretation transitive_closure(const Interpretation &i, const Signature &sig) {
    Interpretation result = i;
    for (RoleId t : sig.transitive_roles())
        result = transitive_closure_role(result, t);
    return result;
}

bool is_transitively_closed(const Interpretation &i, RoleId role) {
    const std::set<Edge> &edges = i.edges(role);
    for (const Edge &ab : edges)
        for (const Edge &bc : edges)
            if (ab.second == bc.first && !edges.count({ab.first, bc.second}))
                return false;
    return true;
}

namespace {

// Tarjan over the single-role subgraph.
struct SccState {
    const Interpretation &interp;
    RoleId role;
    std::map<ElemId, int> index;
    std::map<ElemId, int> lowlink;
    std::set<ElemId> on_stack;
    std::vector<ElemId> stack;
    int counter = 0;
    std::vector<std::set<ElemId>> sccs;

    void visit(ElemId v) {
        index[v] = lowlink[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (ElemId w : interp.successors(role, v)) {
            if (!index.count(w)) {
                visit(w);
                lowlink[v] = std::min(lowlink[v], lowlink[w]);
            } else if (on_stack.count(w)) {
                lowlink[v] = std::min(lowlink[v], index[w]);
            }
        }
        if (lowlink[v] == index[v]) {
            std::set<ElemId> component;
            while (true) {
                ElemId w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                component.insert(w);
                if (w == v)
                    break;
            }
            sccs.push_back(std::move(component));
        }
    }
};

} // namespace

std::vector<Cluster> clusters(const Interpretation &i, RoleId role, ConceptId finite_concept) {
    SccState state{i, role};
    for (ElemId e : i.elements)
        if (!state.index.count(e))
            state.visit(e);
    std::vector<Cluster> result;
    for (auto &component : state.sccs) {
        Cluster c;
        c.members = std::move(component);
        c.critical = false;
        if (finite_concept != kNoId)
            for (ElemId e : c.members)
                if (i.in_concept(finite_concept, e)) {
                    c.critical = true;
                    break;
                }
        result.push_back(std::move(c));
    }
    std::sort(result.begin(), result.end(), [](const Cluster &a, const Cluster &b) {
        return *a.members.begin() < *b.members.begin();
    });
    return result;
}

namespace {

std::set<ElemId> reachable_in_role(const Interpretation &i, ElemId u, RoleId role) {
    // nodes reachable from u in >= 1 step
    std::set<ElemId> seen;
    std::deque<ElemId> queue;
    for (ElemId v : i.successors(role, u)) {
        if (seen.insert(v).second)
            queue.push_back(v);
    }
    while (!queue.empty()) {
        ElemId v = queue.front();
        queue.pop_front();
        for (ElemId w : i.successors(role, v))
            if (seen.insert(w).second)
                queue.push_back(w);
    }
    return seen;
}

} // namespace

std::set<ConceptId> reach_t(const Interpretation &i, ElemId u, RoleId t) {
    if (!i.has_element(u))
        throw Error("reach_t: element not in domain");
    std::set<ElemId> reachable = reachable_in_role(i, u, t);
    std::set<ConceptId> result;
    for (const auto &[concept_id, extension] : i.concepts) {
        for (ElemId v : reachable) {
            if (v != u && extension.count(v)) {
                result.insert(concept_id);
                break;
            }
        }
    }
    return result;
}

ModelCheckResult check_model(const Interpretation &i, const KnowledgeBase &kb) {
    ModelCheckResult result;
    auto fail = [&result](std::string description, std::optional<ElemId> witness) {
        result.ok = false;
        result.violation = Violation{std::move(description), witness};
        return result;
    };
    const Signature &sig = kb.signature;

    for (RoleId t : sig.transitive_roles()) {
        const std::set<Edge> &edges = i.edges(t);
        for (const Edge &ab : edges)
            for (const Edge &bc : edges)
                if (ab.second == bc.first && !edges.count({ab.first, bc.second}))
                    return fail("transitivity violated for role " + sig.role_name(t), ab.first);
    }

    for (const Axiom &ax : kb.tbox) {
        switch (ax.kind) {
        case Axiom::Kind::ConjDisj: {
            for (ElemId e : i.elements) {
                bool in_lhs = true;
                for (ConceptId c : ax.lhs)
                    if (!i.in_concept(c, e)) {
                        in_lhs = false;
                        break;
                    }
                if (!in_lhs)
                    continue;
                bool in_rhs = false;
                for (ConceptId c : ax.rhs)
                    if (i.in_concept(c, e)) {
                        in_rhs = true;
                        break;
                    }
                if (!in_rhs)
                    return fail("violated " + axiom_to_string(ax, sig), e);
            }
            break;
        }
        case Axiom::Kind::AllValues: {
            for (const Edge &edge : i.edges(ax.role))
                if (i.in_concept(ax.a, edge.first) && !i.in_concept(ax.b, edge.second))
                    return fail("violated " + axiom_to_string(ax, sig), edge.first);
            break;
        }
        case Axiom::Kind::SomeValues: {
            auto ext = i.concepts.find(ax.a);
            if (ext == i.concepts.end())
                break;
            for (ElemId e : ext->second) {
                bool witnessed = false;
                for (ElemId v : i.successors(ax.role, e))
                    if (i.in_concept(ax.b, v)) {
                        witnessed = true;
                        break;
                    }
                if (!witnessed)
                    return fail("violated " + axiom_to_string(ax, sig), e);
            }
            break;
        }
        }
    }

    for (const Assertion &as : kb.abox) {
        auto elem_of = [&](IndividualId a) -> std::optional<ElemId> {
            auto it = i.individual_of.find(a);
            if (it == i.individual_of.end())
                return std::nullopt;
            if (!i.has_element(it->second))
                throw Error("individual '" + sig.individual_name(a) +
                            "' mapped to an element outside the domain");
            return it->second;
        };
        if (as.is_role()) {
            auto u = elem_of(as.first);
            auto v = elem_of(as.second);
            if (!u || !v || !i.has_edge(as.role, *u, *v))
                return fail("violated assertion " + sig.role_name(as.role) + "(" +
                                sig.individual_name(as.first) + ", " +
                                sig.individual_name(as.second) + ")",
                            u ? u : v);
        } else {
            auto u = elem_of(as.first);
            if (!u || !i.in_concept(as.concept_, *u))
                return fail("violated assertion " + sig.concept_name(as.concept_) + "(" +
                                sig.individual_name(as.first) + ")",
                            u);
        }
    }
    return result;
}

Interpretation induced(const Interpretation &i, const std::set<ElemId> &domain) {
    for (ElemId e : domain)
        if (!i.has_element(e))
            throw Error("induced: element not in domain");
    Interpretation result;
    result.elements = domain;
    for (const auto &[concept_id, extension] : i.concepts) {
        std::set<ElemId> restricted;
        for (ElemId e : extension)
            if (domain.count(e))
                restricted.insert(e);
        if (!restricted.empty())
            result.concepts[concept_id] = std::move(restricted);
    }
    for (const auto &[role, edges] : i.roles) {
        std::set<Edge> restricted;
        for (const Edge &e : edges)
            if (domain.count(e.first) && domain.count(e.second))
                restricted.insert(e);
        if (!restricted.empty())
            result.roles[role] = std::move(restricted);
    }
    for (const auto &[individual, elem] : i.individual_of)
        if (domain.count(elem))
            result.individual_of[individual] = elem;
    return result;
}

Interpretation interp_union(const Interpretation &i1, const Interpretation &i2) {
    Interpretation result = i1;
    result.elements.insert(i2.elements.begin(), i2.elements.end());
    for (const auto &[concept_id, extension] : i2.concepts)
        result.concepts[concept_id].insert(extension.begin(), extension.end());
    for (const auto &[role, edges] : i2.roles)
        result.roles[role].insert(edges.begin(), edges.end());
    for (const auto &[individual, elem] : i2.individual_of) {
        auto it = result.individual_of.find(individual);
        if (it != result.individual_of.end() && it->second != elem)
            throw Error("interp_union: conflicting individual assignment");
        result.individual_of[individual] = elem;
    }
    // re-validate injectivity across the merge
    std::map<ElemId, IndividualId> seen;
    for (const auto &[individual, elem] : result.individual_of) {
        auto [it, inserted] = seen.emplace(elem, individual);
        if (!inserted)
            throw Error("interp_union: two individuals share an element");
    }
    return result;
}

UnaryType element_type(const Interpretation &i, ElemId e) {
    if (!i.has_element(e))
        throw Error("element_type: element not in domain");
    UnaryType type;
    for (const auto &[concept_id, extension] : i.concepts)
        if (extension.count(e))
            type.insert(concept_id);
    return type;
}

std::set<ElemId> critical_elements(const Interpretation &i, ConceptId finite_concept) {
    if (finite_concept == kNoId)
        return {};
    auto it = i.concepts.find(finite_concept);
    return it == i.concepts.end() ? std::set<ElemId>{} : it->second;
}

int undirected_distance(const Interpretation &i, ElemId x, ElemId y) {
    if (x == y)
        return 0;
    std::map<ElemId, std::set<ElemId>> adjacency;
    for (const auto &[role, edges] : i.roles)
        for (const Edge &e : edges) {
            adjacency[e.first].insert(e.second);
            adjacency[e.second].insert(e.first);
        }
    std::map<ElemId, int> dist;
    dist[x] = 0;
    std::deque<ElemId> queue{x};
    while (!queue.empty()) {
        ElemId v = queue.front();
        queue.pop_front();
        for (ElemId w : adjacency[v]) {
            if (!dist.count(w)) {
                dist[w] = dist[v] + 1;
                if (w == y)
                    return dist[w];
                queue.push_back(w);
            }
        }
    }
    return -1;
}

std::string interp_to_json(const Interpretation &i, const Signature &sig) {
    nlohmann::ordered_json j;
    j["elements"] = i.elements;
    nlohmann::ordered_json concepts = nlohmann::ordered_json::object();
    for (const auto &[concept_id, extension] : i.concepts)
        if (!extension.empty())
            concepts[sig.concept_name(concept_id)] = extension;
    j["concepts"] = concepts;
    nlohmann::ordered_json roles = nlohmann::ordered_json::object();
    for (const auto &[role, edges] : i.roles) {
        if (edges.empty())
            continue;
        nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
        for (const Edge &e : edges)
            pairs.push_back({e.first, e.second});
        roles[sig.role_name(role)] = pairs;
    }
    j["roles"] = roles;
    nlohmann::ordered_json individuals = nlohmann::ordered_json::object();
    for (const auto &[individual, elem] : i.individual_of)
        individuals[sig.individual_name(individual)] = elem;
    j["individuals"] = individuals;
    return j.dump(2) + "\n";
}

Interpretation interp_from_json(const std::string &json_text, Signature &sig) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    Interpretation i;
    for (const auto &e : j.at("elements"))
        i.add_element(e.get<ElemId>());
    if (j.contains("concepts"))
        for (const auto &[name, ids] : j.at("concepts").items()) {
            ConceptId c = sig.intern_concept(name);
            for (const auto &e : ids)
                i.add_concept(c, e.get<ElemId>());
        }
    if (j.contains("roles"))
        for (const auto &[name, pairs] : j.at("roles").items()) {
            RoleId r = sig.role_id(name);
            if (r == kNoId)
                throw Error("interpretation references undeclared role '" + name + "'");
            for (const auto &pair : pairs)
                i.add_edge(r, pair.at(0).get<ElemId>(), pair.at(1).get<ElemId>());
        }
    if (j.contains("individuals"))
        for (const auto &[name, elem] : j.at("individuals").items())
            i.set_individual(sig.intern_individual(name), elem.get<ElemId>());
    return i;
}

std::string interp_to_dot(const Interpretation &i, const Signature &sig) {
    std::ostringstream out;
    out << "digraph interpretation {\n";
    for (ElemId e : i.elements) {
        UnaryType type = element_type(i, e);
        std::string label = std::to_string(e);
        if (!type.empty()) {
            label += ": ";
            bool first = true;
            for (ConceptId c : type) {
                if (!first)
                    label += ",";
                label += sig.concept_name(c);
                first = false;
            }
        }
        out << "  n" << e << " [label=\"" << label << "\"];\n";
    }
    for (const auto &[role, edges] : i.roles)
        for (const Edge &e : edges)
            out << "  n" << e.first << " -> n" << e.second << " [label=\""
                << sig.role_name(role) << "\"];\n";
    out << "}\n";
    return out.str();
}

} // namespace pfent
