#include "pfent/query.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

namespace pfent {

VarId ConjunctiveQuery::variable_id(const std::string &var) const {
    for (size_t i = 0; i < variables.size(); ++i)
        if (variables[i] == var)
            return static_cast<VarId>(i);
    return kNoId;
}

VarId ConjunctiveQuery::intern_variable(const std::string &var) {
    VarId id = variable_id(var);
    if (id != kNoId)
        return id;
    variables.push_back(var);
    return static_cast<VarId>(variables.size() - 1);
}

void ConjunctiveQuery::add_atom(Atom atom) {
    auto pos = std::lower_bound(atoms.begin(), atoms.end(), atom);
    if (pos == atoms.end() || *pos != atom)
        atoms.insert(pos, atom);
}

namespace {

struct QueryToken {
    std::string text;
    int column;
};

std::vector<QueryToken> tokenize(const std::string &line, int line_no) {
    std::vector<QueryToken> tokens;
    size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (c == '#')
            break;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        int col = static_cast<int>(i) + 1;
        if (c == '(' || c == ')' || c == ',' || c == ':') {
            tokens.push_back({std::string(1, c), col});
            ++i;
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'') {
            size_t j = i;
            while (j < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_' ||
                    line[j] == '\''))
                ++j;
            tokens.push_back({line.substr(i, j - i), col});
            i = j;
        } else {
            throw ParseError("unexpected character '" + std::string(1, c) + "'", line_no, col);
        }
    }
    return tokens;
}

Ucq parse_queries_impl(const std::string &text, Signature *sig) {
    Ucq result;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<QueryToken> tokens = tokenize(line, line_no);
        if (tokens.empty())
            continue;
        size_t pos = 0;
        auto next = [&]() -> const QueryToken & {
            if (pos >= tokens.size())
                throw ParseError("unexpected end of line", line_no,
                                 tokens.back().column + 1);
            return tokens[pos++];
        };
        auto expect = [&](const std::string &t) {
            const QueryToken &tok = next();
            if (tok.text != t)
                throw ParseError("expected '" + t + "', got '" + tok.text + "'", line_no,
                                 tok.column);
        };

        const QueryToken &head = next();
        if (head.text != "cq")
            throw ParseError("expected 'cq'", line_no, head.column);
        ConjunctiveQuery q;
        q.name = next().text;
        expect(":");
        while (pos < tokens.size()) {
            const QueryToken &pred = next();
            expect("(");
            const QueryToken &first = next();
            const QueryToken &sep = next();
            if (sep.text == ",") {
                const QueryToken &second = next();
                expect(")");
                int role = kNoId;
                if (sig != nullptr) {
                    role = sig->role_id(pred.text);
                    if (role == kNoId)
                        throw ParseError("undeclared role '" + pred.text + "'", line_no,
                                         pred.column);
                }
                ConjunctiveQuery::Atom atom;
                atom.unary = false;
                atom.predicate = role;
                atom.x = q.intern_variable(first.text);
                atom.y = q.intern_variable(second.text);
                q.add_atom(atom);
            } else if (sep.text == ")") {
                ConjunctiveQuery::Atom atom;
                atom.unary = true;
                atom.predicate = sig != nullptr ? sig->intern_concept(pred.text) : kNoId;
                atom.x = q.intern_variable(first.text);
                q.add_atom(atom);
            } else {
                throw ParseError("expected ',' or ')'", line_no, sep.column);
            }
            if (pos < tokens.size())
                expect(",");
        }
        result.disjuncts.push_back(std::move(q));
    }
    return result;
}

} // namespace

Ucq parse_queries(const std::string &text, Signature &sig) {
    return parse_queries_impl(text, &sig);
}

Ucq parse_queries(const std::string &text) {
    return parse_queries_impl(text, nullptr);
}

std::string cq_to_string(const ConjunctiveQuery &q, const Signature &sig) {
    std::ostringstream out;
    out << "cq " << (q.name.empty() ? "q" : q.name) << ":";
    bool first = true;
    for (const auto &atom : q.atoms) {
        out << (first ? " " : ", ");
        first = false;
        if (atom.unary)
            out << sig.concept_name(atom.predicate) << "(" << q.variables[atom.x] << ")";
        else
            out << sig.role_name(atom.predicate) << "(" << q.variables[atom.x] << ", "
                << q.variables[atom.y] << ")";
    }
    return out.str();
}

std::string ucq_to_string(const Ucq &q, const Signature &sig) {
    std::string out;
    for (const auto &disjunct : q.disjuncts)
        out += cq_to_string(disjunct, sig) + "\n";
    return out;
}

namespace {

struct MatchSearch {
    const ConjunctiveQuery &q;
    const Interpretation &interp;
    std::vector<ElemId> domain;
    Match assignment;

    explicit MatchSearch(const ConjunctiveQuery &q, const Interpretation &i)
        : q(q), interp(i), domain(i.elements.begin(), i.elements.end()) {}

    bool atom_consistent(const ConjunctiveQuery::Atom &atom) const {
        if (atom.unary) {
            auto it = assignment.find(atom.x);
            if (it == assignment.end())
                return true;
            return interp.in_concept(atom.predicate, it->second);
        }
        auto ix = assignment.find(atom.x);
        auto iy = assignment.find(atom.y);
        if (ix == assignment.end() || iy == assignment.end())
            return true;
        return interp.has_edge(atom.predicate, ix->second, iy->second);
    }

    // candidate count used by the most-constrained-first heuristic
    int count_candidates(VarId v) const {
        int count = 0;
        for (ElemId e : domain) {
            if (candidate_ok(v, e))
                ++count;
        }
        return count;
    }

    bool candidate_ok(VarId v, ElemId e) const {
        for (const auto &atom : q.atoms) {
            if (atom.unary) {
                if (atom.x == v && !interp.in_concept(atom.predicate, e))
                    return false;
                continue;
            }
            if (atom.x == v) {
                auto iy = assignment.find(atom.y);
                if (atom.y == v) {
                    if (!interp.has_edge(atom.predicate, e, e))
                        return false;
                } else if (iy != assignment.end() &&
                           !interp.has_edge(atom.predicate, e, iy->second)) {
                    return false;
                }
            } else if (atom.y == v) {
                auto ix = assignment.find(atom.x);
                if (ix != assignment.end() &&
                    !interp.has_edge(atom.predicate, ix->second, e))
                    return false;
            }
        }
        return true;
    }

    bool search() {
        if (static_cast<int>(assignment.size()) == q.num_variables())
            return true;
        VarId best = kNoId;
        int best_count = -1;
        for (VarId v = 0; v < q.num_variables(); ++v) {
            if (assignment.count(v))
                continue;
            int count = count_candidates(v);
            if (best == kNoId || count < best_count) {
                best = v;
                best_count = count;
            }
        }
        for (ElemId e : domain) {
            if (!candidate_ok(best, e))
                continue;
            assignment[best] = e;
            if (search())
                return true;
            assignment.erase(best);
        }
        return false;
    }
};

} // namespace

std::optional<Match> find_match(const ConjunctiveQuery &q, const Interpretation &i) {
    if (q.num_variables() == 0)
        return Match{};  // empty-atom CQ: trivially satisfied
    if (i.elements.empty())
        return std::nullopt;
    MatchSearch search(q, i);
    if (search.search())
        return search.assignment;
    return std::nullopt;
}

bool verify_match(const ConjunctiveQuery &q, const Interpretation &i, const Match &m) {
    for (VarId v = 0; v < q.num_variables(); ++v) {
        auto it = m.find(v);
        if (it == m.end() || !i.has_element(it->second))
            return false;
    }
    for (const auto &atom : q.atoms) {
        if (atom.unary) {
            if (!i.in_concept(atom.predicate, m.at(atom.x)))
                return false;
        } else {
            if (!i.has_edge(atom.predicate, m.at(atom.x), m.at(atom.y)))
                return false;
        }
    }
    return true;
}

UcqResult evaluate_ucq(const Ucq &q, const Interpretation &i) {
    UcqResult result;
    for (const auto &disjunct : q.disjuncts) {
        if (auto match = find_match(disjunct, i)) {
            result.satisfied = true;
            result.disjunct = disjunct.name;
            result.match = *match;
            return result;
        }
    }
    return result;
}

std::string match_to_json(const UcqResult &r, const ConjunctiveQuery &q) {
    nlohmann::ordered_json j;
    j["disjunct"] = r.disjunct;
    nlohmann::ordered_json assignment = nlohmann::ordered_json::object();
    for (const auto &[var, elem] : r.match)
        assignment[q.variables[var]] = elem;
    j["assignment"] = assignment;
    return j.dump(2) + "\n";
}

} // namespace pfent
