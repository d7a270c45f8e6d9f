#include "pfent/closedpred.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace pfent {

namespace {

// restricted-growth strings enumerate set partitions in a stable order
std::vector<std::vector<int>> variable_partitions(int n) {
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

std::vector<QueryImage> enumerate_query_images(const ConjunctiveQuery &q) {
    std::vector<QueryImage> result;
    std::set<std::vector<ConjunctiveQuery::Atom>> seen;
    int n = q.num_variables();
    for (const std::vector<int> &rgs : variable_partitions(n)) {
        QueryImage image;
        image.quotient = rgs;
        int classes = n == 0 ? 0 : *std::max_element(rgs.begin(), rgs.end()) + 1;
        for (int c = 0; c < classes; ++c)
            image.image.variables.push_back("x" + std::to_string(c));
        image.image.name = q.name;
        for (const auto &atom : q.atoms) {
            ConjunctiveQuery::Atom mapped = atom;
            mapped.x = rgs[atom.x];
            if (!atom.unary)
                mapped.y = rgs[atom.y];
            image.image.add_atom(mapped);
        }
        // canonical dedup: identical merged atom sets denote the same image
        Subquery canonical = canonical_subquery(image.image, std::nullopt);
        if (seen.insert(canonical.query.atoms).second)
            result.push_back(std::move(image));
    }
    return result;
}

KnowledgeBase build_abox(const QueryImage &image, const ContainmentInstance &inst) {
    KnowledgeBase kb;
    kb.signature = inst.signature;
    std::vector<IndividualId> individual_of_var;
    for (const std::string &var : image.image.variables) {
        std::string name = "a" + var;
        while (kb.signature.individual_id(name) != kNoId)
            name += "'";
        individual_of_var.push_back(kb.signature.intern_individual(name));
    }
    for (const auto &atom : image.image.atoms) {
        if (atom.unary)
            kb.abox.insert(
                Assertion::concept_assertion(atom.predicate, individual_of_var[atom.x]));
        else
            kb.abox.insert(Assertion::role_assertion(atom.predicate,
                                                     individual_of_var[atom.x],
                                                     individual_of_var[atom.y]));
    }
    return kb;
}

Verdict decide_containment(const ContainmentInstance &inst,
                           const EntailmentBackend &backend) {
    if (inst.closed.empty())
        throw Error("decide_containment: no closed concepts");

    std::vector<QueryImage> images = enumerate_query_images(inst.q1);
    Verdict aggregate;
    aggregate.status = Verdict::Status::Entailed;  // contained until refuted
    aggregate.exact = true;
    bool inconclusive = false;

    for (const QueryImage &image : images) {
        KnowledgeBase kb = build_abox(image, inst);
        kb.raw_tbox = inst.tbox;
        // F = F1 | ... | Fn realized as a fresh name with both inclusions, so
        // the extensions coincide and finiteness carries over exactly
        std::string star = "_F";
        while (kb.signature.concept_id(star) != kNoId)
            star += "'";
        ConceptId f_star = kb.signature.intern_concept(star);
        ConceptExpr union_expr;
        for (ConceptId f : inst.closed) {
            kb.raw_tbox.push_back({concept_name(f), concept_name(f_star)});
            union_expr = union_expr ? concept_or(union_expr, concept_name(f))
                                    : concept_name(f);
        }
        kb.raw_tbox.push_back({concept_name(f_star), union_expr});
        kb.finite_concept = f_star;
        kb.tbox = normalize_tbox(kb.raw_tbox, kb.signature);

        Ucq query;
        query.disjuncts.push_back(inst.q2);
        Verdict v = backend(kb, query);
        aggregate.mode = v.mode;
        aggregate.exact = aggregate.exact && v.exact;
        switch (v.status) {
        case Verdict::Status::NotEntailed:
            // a countermodel for this image witnesses non-containment
            aggregate.status = Verdict::Status::NotEntailed;
            aggregate.witness = v.witness;
            aggregate.countermodel = v.countermodel;
            aggregate.exact = true;
            return aggregate;
        case Verdict::Status::Inconclusive:
            inconclusive = true;
            break;
        case Verdict::Status::Entailed:
            break;
        }
    }
    if (inconclusive) {
        aggregate.status = Verdict::Status::Inconclusive;
        aggregate.exact = false;
    }
    return aggregate;
}

ContainmentInstance parse_containment(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::string kb_text;
    std::vector<std::string> query_lines;
    std::string closed_line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = line;
        size_t start = trimmed.find_first_not_of(" \t");
        trimmed = start == std::string::npos ? "" : trimmed.substr(start);
        if (trimmed.rfind("cq", 0) == 0 &&
            (trimmed.size() == 2 || std::isspace(static_cast<unsigned char>(trimmed[2])))) {
            query_lines.push_back(line);
            kb_text += "\n";
        } else if (trimmed.rfind("closed", 0) == 0) {
            if (!closed_line.empty())
                throw ParseError("duplicate 'closed' line", line_no, 1);
            closed_line = trimmed;
            kb_text += "\n";
        } else {
            kb_text += line + "\n";
        }
    }
    if (query_lines.size() != 2)
        throw Error("containment instance needs exactly two cq lines (q1 then q2)");
    if (closed_line.empty())
        throw Error("containment instance needs a 'closed' line");

    KnowledgeBase kb = parse_kb(kb_text);
    ContainmentInstance inst;
    inst.tbox = kb.raw_tbox;

    Ucq queries = parse_queries(query_lines[0] + "\n" + query_lines[1], kb.signature);
    inst.q1 = queries.disjuncts.at(0);
    inst.q2 = queries.disjuncts.at(1);

    std::istringstream closed_in(closed_line.substr(6));
    std::string token;
    while (std::getline(closed_in, token, ',')) {
        size_t begin = token.find_first_not_of(" \t");
        size_t end = token.find_last_not_of(" \t");
        if (begin == std::string::npos)
            continue;
        std::string name = token.substr(begin, end - begin + 1);
        inst.closed.insert(kb.signature.intern_concept(name));
    }
    if (inst.closed.empty())
        throw Error("containment instance: empty closed set");
    inst.signature = kb.signature;
    return inst;
}

} // namespace pfent
