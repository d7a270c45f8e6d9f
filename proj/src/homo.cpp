#include "pfent/homo.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include <json.hpp>

namespace pfent {

namespace {

struct HomSearch {
    const Interpretation &source;
    const Interpretation &target;
    const HomSpec &spec;
    std::vector<ElemId> source_order;
    std::vector<ElemId> target_elems;
    std::map<ElemId, ElemId> mapping;
    std::map<ElemId, int> image_count;  // for surjectivity pruning
    std::map<ElemId, UnaryType> source_types, target_types;
    std::map<ElemId, std::set<ConceptId>> source_reach, target_reach;

    HomSearch(const Interpretation &s, const Interpretation &t, const HomSpec &spec)
        : source(s), target(t), spec(spec),
          target_elems(t.elements.begin(), t.elements.end()) {
        source_order.assign(s.elements.begin(), s.elements.end());
        if (spec.rooted) {
            // assign the root first
            auto it = std::find(source_order.begin(), source_order.end(), spec.rooted->first);
            if (it != source_order.end())
                std::rotate(source_order.begin(), it, it + 1);
        }
        for (ElemId e : s.elements)
            source_types[e] = element_type(s, e);
        for (ElemId e : t.elements)
            target_types[e] = element_type(t, e);
        if (spec.t_strong) {
            for (ElemId e : s.elements)
                source_reach[e] = reach_t(s, e, *spec.t_strong);
            for (ElemId e : t.elements)
                target_reach[e] = reach_t(t, e, *spec.t_strong);
        }
    }

    bool candidate_ok(ElemId e, ElemId f) const {
        if (spec.rooted && e == spec.rooted->first && f != spec.rooted->second)
            return false;
        if (spec.fixes.count(e) && f != e)
            return false;
        // concept preservation
        const UnaryType &se = source_types.at(e);
        const UnaryType &te = target_types.at(f);
        if (spec.t_strong) {
            if (se != te || source_reach.at(e) != target_reach.at(f))
                return false;
        } else if (!std::includes(te.begin(), te.end(), se.begin(), se.end())) {
            return false;
        }
        // individuals: h(a) = a
        for (const auto &[individual, elem] : source.individual_of) {
            if (elem != e)
                continue;
            auto it = target.individual_of.find(individual);
            if (it == target.individual_of.end() || it->second != f)
                return false;
        }
        if (spec.labelled) {
            auto sit = spec.source_labels->find(e);
            auto tit = spec.target_labels->find(f);
            if (sit == spec.source_labels->end() || tit == spec.target_labels->end() ||
                sit->second != tit->second)
                return false;
        }
        if (spec.colour_preserving) {
            bool sc = spec.source_colouring->coloured(e);
            bool tc = spec.target_colouring->coloured(f);
            if (sc != tc)
                return false;
            if (sc && *spec.source_colouring->colour(e) != *spec.target_colouring->colour(f))
                return false;
        }
        // edges between e and already-assigned elements
        for (const auto &[role, edges] : source.roles) {
            for (const Edge &edge : edges) {
                if (edge.first == e && edge.second == e) {
                    if (!target.has_edge(role, f, f))
                        return false;
                } else if (edge.first == e) {
                    auto it = mapping.find(edge.second);
                    if (it != mapping.end() && !target.has_edge(role, f, it->second))
                        return false;
                } else if (edge.second == e) {
                    auto it = mapping.find(edge.first);
                    if (it != mapping.end() && !target.has_edge(role, it->second, f))
                        return false;
                }
            }
        }
        return true;
    }

    bool search(size_t idx) {
        if (idx == source_order.size()) {
            if (spec.surjective)
                for (ElemId f : target_elems)
                    if (!image_count.count(f) || image_count.at(f) == 0)
                        return false;
            return true;
        }
        if (spec.surjective) {
            size_t remaining = source_order.size() - idx;
            size_t uncovered = 0;
            for (ElemId f : target_elems) {
                auto it = image_count.find(f);
                if (it == image_count.end() || it->second == 0)
                    ++uncovered;
            }
            if (uncovered > remaining)
                return false;
        }
        ElemId e = source_order[idx];
        for (ElemId f : target_elems) {
            if (!candidate_ok(e, f))
                continue;
            mapping[e] = f;
            ++image_count[f];
            if (search(idx + 1))
                return true;
            --image_count[f];
            mapping.erase(e);
        }
        return false;
    }
};

void validate_spec(const HomSpec &spec) {
    if (spec.labelled && (spec.source_labels == nullptr || spec.target_labels == nullptr))
        throw Error("HomSpec: labelled flag requires label attachments");
    if (spec.colour_preserving &&
        (spec.source_colouring == nullptr || spec.target_colouring == nullptr))
        throw Error("HomSpec: colour_preserving flag requires colouring attachments");
}

} // namespace

std::optional<Homomorphism> find_homomorphism(const Interpretation &source,
                                              const Interpretation &target,
                                              const HomSpec &spec) {
    validate_spec(spec);
    if (spec.rooted && !source.has_element(spec.rooted->first))
        throw Error("HomSpec: root not in source");
    if (spec.rooted && !target.has_element(spec.rooted->second))
        throw Error("HomSpec: root image not in target");
    if (source.elements.empty())
        return spec.surjective && !target.elements.empty() ? std::nullopt
                                                           : std::optional<Homomorphism>({});
    if (target.elements.empty())
        return std::nullopt;
    HomSearch search(source, target, spec);
    if (search.search(0))
        return Homomorphism{search.mapping};
    return std::nullopt;
}

bool verify_homomorphism(const Homomorphism &h, const Interpretation &source,
                         const Interpretation &target, const HomSpec &spec) {
    validate_spec(spec);
    for (ElemId e : source.elements) {
        auto it = h.mapping.find(e);
        if (it == h.mapping.end() || !target.has_element(it->second))
            return false;
    }
    for (const auto &[concept_id, extension] : source.concepts)
        for (ElemId e : extension)
            if (!target.in_concept(concept_id, h(e)))
                return false;
    for (const auto &[role, edges] : source.roles)
        for (const Edge &e : edges)
            if (!target.has_edge(role, h(e.first), h(e.second)))
                return false;
    for (const auto &[individual, elem] : source.individual_of) {
        auto it = target.individual_of.find(individual);
        if (it == target.individual_of.end() || h(elem) != it->second)
            return false;
    }
    if (spec.rooted && h(spec.rooted->first) != spec.rooted->second)
        return false;
    for (ElemId e : spec.fixes)
        if (source.has_element(e) && h(e) != e)
            return false;
    if (spec.labelled)
        for (ElemId e : source.elements)
            if (spec.source_labels->at(e) != spec.target_labels->at(h(e)))
                return false;
    if (spec.colour_preserving)
        for (ElemId e : source.elements) {
            bool sc = spec.source_colouring->coloured(e);
            bool tc = spec.target_colouring->coloured(h(e));
            if (sc != tc)
                return false;
            if (sc && *spec.source_colouring->colour(e) != *spec.target_colouring->colour(h(e)))
                return false;
        }
    if (spec.surjective) {
        std::set<ElemId> image;
        for (const auto &[e, f] : h.mapping)
            image.insert(f);
        if (image.size() != target.elements.size())
            return false;
    }
    if (spec.t_strong && !verify_t_strong(h, source, target, *spec.t_strong))
        return false;
    return true;
}

bool verify_t_strong(const Homomorphism &h, const Interpretation &source,
                     const Interpretation &target, RoleId t) {
    for (ElemId e : source.elements) {
        auto it = h.mapping.find(e);
        if (it == h.mapping.end())
            return false;
        if (element_type(source, e) != element_type(target, it->second))
            return false;
        if (reach_t(source, e, t) != reach_t(target, it->second, t))
            return false;
    }
    return true;
}

std::set<ElemId> k_neighbourhood(const Interpretation &i, ElemId x, int k) {
    std::map<ElemId, std::set<ElemId>> adjacency;
    for (const auto &[role, edges] : i.roles)
        for (const Edge &e : edges) {
            adjacency[e.first].insert(e.second);
            adjacency[e.second].insert(e.first);
        }
    std::set<ElemId> result{x};
    std::deque<std::pair<ElemId, int>> queue{{x, 0}};
    while (!queue.empty()) {
        auto [v, d] = queue.front();
        queue.pop_front();
        if (d == k)
            continue;
        for (ElemId w : adjacency[v])
            if (result.insert(w).second)
                queue.push_back({w, d + 1});
    }
    return result;
}

namespace {

Colouring restrict_colouring(const Colouring &col, const std::set<ElemId> &domain) {
    Colouring result;
    for (const auto &[e, c] : col.colours)
        if (domain.count(e))
            result.colours[e] = c;
    return result;
}

} // namespace

bool neighbourhood_equivalent(const Interpretation &i, const Colouring &col, ElemId x,
                              ElemId y, int k) {
    if (x == y)
        return true;
    if (!col.coloured(x) || !col.coloured(y))
        return false;  // ~_k merges only coloured elements
    if (*col.colour(x) != *col.colour(y))
        return false;
    std::set<ElemId> nx = k_neighbourhood(i, x, k);
    std::set<ElemId> ny = k_neighbourhood(i, y, k);
    Interpretation ix = induced(i, nx);
    Interpretation iy = induced(i, ny);
    Colouring cx = restrict_colouring(col, nx);
    Colouring cy = restrict_colouring(col, ny);

    HomSpec forward;
    forward.rooted = {{x, y}};
    forward.colour_preserving = true;
    forward.source_colouring = &cx;
    forward.target_colouring = &cy;
    if (!find_homomorphism(ix, iy, forward))
        return false;
    HomSpec backward;
    backward.rooted = {{y, x}};
    backward.colour_preserving = true;
    backward.source_colouring = &cy;
    backward.target_colouring = &cx;
    return find_homomorphism(iy, ix, backward).has_value();
}

QuotientResult quotient(const Interpretation &i, const std::map<ElemId, ElemId> &eq_class) {
    // validate: total, and an equivalence in representative form
    for (ElemId e : i.elements) {
        auto it = eq_class.find(e);
        if (it == eq_class.end())
            throw Error("quotient: relation not total on the domain");
        if (!i.has_element(it->second))
            throw Error("quotient: class representative outside the domain");
        if (eq_class.at(it->second) != it->second)
            throw Error("quotient: representative map is not idempotent");
    }
    // reject merging distinct individuals (SNA)
    std::map<ElemId, IndividualId> individual_class;
    for (const auto &[individual, elem] : i.individual_of) {
        ElemId rep = eq_class.at(elem);
        auto [it, inserted] = individual_class.emplace(rep, individual);
        if (!inserted && it->second != individual)
            throw Error("quotient: relation identifies two distinct named individuals");
    }
    // name each class by its minimum member id
    std::map<ElemId, ElemId> class_name;
    for (ElemId e : i.elements) {
        ElemId rep = eq_class.at(e);
        auto it = class_name.find(rep);
        if (it == class_name.end() || e < it->second)
            class_name[rep] = e;
    }
    QuotientResult result;
    for (ElemId e : i.elements) {
        ElemId name = class_name.at(eq_class.at(e));
        result.interp.add_element(name);
        result.projection.mapping[e] = name;
    }
    for (const auto &[concept_id, extension] : i.concepts)
        for (ElemId e : extension)
            result.interp.add_concept(concept_id, result.projection(e));
    for (const auto &[role, edges] : i.roles)
        for (const Edge &e : edges)
            result.interp.add_edge(role, result.projection(e.first),
                                   result.projection(e.second));
    for (const auto &[individual, elem] : i.individual_of)
        result.interp.set_individual(individual, result.projection(elem));
    return result;
}

bool check_sparse(const Interpretation &i, const Colouring &col, int k) {
    for (ElemId x : i.elements) {
        std::set<ElemId> neighbourhood = k_neighbourhood(i, x, k);
        std::map<Colour, ElemId> seen;
        for (ElemId y : neighbourhood) {
            auto colour = col.colour(y);
            if (!colour)
                continue;
            auto [it, inserted] = seen.emplace(*colour, y);
            if (!inserted && it->second != y)
                return false;
        }
    }
    return true;
}

Colouring greedy_sparse_colouring(const Interpretation &i, const std::set<ElemId> &targets,
                                  int l) {
    Colouring result;
    for (ElemId e : targets) {
        if (!i.has_element(e))
            throw Error("greedy_sparse_colouring: target not in domain");
        std::set<Colour> taken;
        for (ElemId v : k_neighbourhood(i, e, 2 * l))
            if (auto c = result.colour(v))
                taken.insert(*c);
        Colour colour = 0;
        while (taken.count(colour))
            ++colour;
        result.colours[e] = colour;
    }
    return result;
}

std::map<ElemId, ElemId> neighbourhood_classes(const Interpretation &i, const Colouring &col,
                                               int k) {
    // union-find over verified ~_k pairs; only equally coloured elements can merge
    std::map<ElemId, ElemId> parent;
    for (ElemId e : i.elements)
        parent[e] = e;
    std::function<ElemId(ElemId)> find = [&](ElemId e) {
        while (parent[e] != e) {
            parent[e] = parent[parent[e]];
            e = parent[e];
        }
        return e;
    };
    std::map<Colour, std::vector<ElemId>> by_colour;
    for (ElemId e : i.elements)
        if (auto c = col.colour(e))
            by_colour[*c].push_back(e);
    for (const auto &[colour, members] : by_colour) {
        for (size_t a = 0; a < members.size(); ++a) {
            for (size_t b = a + 1; b < members.size(); ++b) {
                ElemId x = members[a], y = members[b];
                if (find(x) == find(y))
                    continue;  // ~_k is transitive, skip verified merges
                if (neighbourhood_equivalent(i, col, x, y, k)) {
                    ElemId rx = find(x), ry = find(y);
                    parent[std::max(rx, ry)] = std::min(rx, ry);
                }
            }
        }
    }
    std::map<ElemId, ElemId> result;
    for (ElemId e : i.elements)
        result[e] = find(e);
    return result;
}

QuotientResult blocking_quotient(const Interpretation &i, const Colouring &col, int K) {
    if (!check_sparse(i, col, K))
        throw Error("blocking_quotient: colouring is not K-sparse");
    return quotient(i, neighbourhood_classes(i, col, K));
}

std::string colouring_to_json(const Colouring &col) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto &[e, c] : col.colours)
        j[std::to_string(e)] = c;
    return j.dump(2) + "\n";
}

Colouring colouring_from_json(const std::string &text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Colouring col;
    for (const auto &[key, value] : j.items())
        col.colours[std::stoi(key)] = value.get<Colour>();
    return col;
}

} // namespace pfent
