#include "pfent/kb.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

namespace pfent {

bool safety_override_enabled() {
    const char *v = std::getenv("PFENT_SAFETY_OVERRIDE");
    return v != nullptr && std::string(v) == "1";
}

Axiom Axiom::conj_disj(std::set<ConceptId> lhs, std::set<ConceptId> rhs) {
    Axiom ax;
    ax.kind = Kind::ConjDisj;
    ax.lhs = std::move(lhs);
    ax.rhs = std::move(rhs);
    return ax;
}

Axiom Axiom::all_values(ConceptId a, RoleId r, ConceptId b) {
    Axiom ax;
    ax.kind = Kind::AllValues;
    ax.a = a;
    ax.role = r;
    ax.b = b;
    return ax;
}

Axiom Axiom::some_values(ConceptId a, RoleId r, ConceptId b) {
    Axiom ax;
    ax.kind = Kind::SomeValues;
    ax.a = a;
    ax.role = r;
    ax.b = b;
    return ax;
}

Assertion Assertion::concept_assertion(ConceptId c, IndividualId a) {
    Assertion as;
    as.concept_ = c;
    as.first = a;
    return as;
}

Assertion Assertion::role_assertion(RoleId r, IndividualId a, IndividualId b) {
    Assertion as;
    as.role = r;
    as.first = a;
    as.second = b;
    return as;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct Token {
    std::string text;
    int column;
};

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

std::vector<Token> tokenize_line(const std::string &line, int line_no) {
    std::vector<Token> tokens;
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
        if (c == '<' && i + 1 < line.size() && line[i + 1] == '=') {
            tokens.push_back({"<=", col});
            i += 2;
        } else if (std::string("()!&|.,:").find(c) != std::string::npos) {
            tokens.push_back({std::string(1, c), col});
            ++i;
        } else if (is_ident_char(c)) {
            size_t j = i;
            while (j < line.size() && is_ident_char(line[j]))
                ++j;
            tokens.push_back({line.substr(i, j - i), col});
            i = j;
        } else {
            throw ParseError("unexpected character '" + std::string(1, c) + "'", line_no, col);
        }
    }
    return tokens;
}

class LineParser {
public:
    LineParser(const std::vector<Token> &tokens, int line_no)
        : tokens_(tokens), line_(line_no) {}

    bool done() const { return pos_ >= tokens_.size(); }

    const Token &peek() const {
        if (done())
            throw ParseError("unexpected end of line", line_, last_column());
        return tokens_[pos_];
    }

    Token next() {
        const Token &t = peek();
        ++pos_;
        return t;
    }

    Token expect(const std::string &text) {
        const Token &t = peek();
        if (t.text != text)
            throw ParseError("expected '" + text + "', got '" + t.text + "'", line_, t.column);
        ++pos_;
        return t;
    }

    void expect_end() const {
        if (!done())
            throw ParseError("trailing input '" + tokens_[pos_].text + "'", line_, tokens_[pos_].column);
    }

    int line() const { return line_; }
    int last_column() const { return tokens_.empty() ? 1 : tokens_.back().column + 1; }

private:
    const std::vector<Token> &tokens_;
    int line_;
    size_t pos_ = 0;
};

bool is_reserved(const std::string &word) {
    static const std::set<std::string> reserved = {
        "top", "bot", "some", "only", "trans", "role", "finite", "tbox", "abox", "cq", "closed"};
    return reserved.count(word) > 0;
}

ConceptExpr parse_concept_expr(LineParser &p, Signature &sig) {
    const Token &t = p.peek();
    if (t.text == "top") {
        p.next();
        return concept_top();
    }
    if (t.text == "bot") {
        p.next();
        return concept_bot();
    }
    if (t.text == "!") {
        p.next();
        return concept_not(parse_concept_expr(p, sig));
    }
    if (t.text == "(") {
        p.next();
        ConceptExpr left = parse_concept_expr(p, sig);
        const Token &op = p.next();
        if (op.text != "&" && op.text != "|")
            throw ParseError("expected '&' or '|', got '" + op.text + "'", p.line(), op.column);
        ConceptExpr right = parse_concept_expr(p, sig);
        p.expect(")");
        return op.text == "&" ? concept_and(left, right) : concept_or(left, right);
    }
    if (t.text == "some" || t.text == "only") {
        bool existential = t.text == "some";
        p.next();
        Token role_tok = p.next();
        RoleId role = sig.role_id(role_tok.text);
        if (role == kNoId)
            throw ParseError("undeclared role '" + role_tok.text + "'", p.line(), role_tok.column);
        p.expect(".");
        ConceptExpr filler = parse_concept_expr(p, sig);
        return existential ? concept_exists(role, filler) : concept_forall(role, filler);
    }
    if (is_reserved(t.text) || !is_ident_char(t.text[0]))
        throw ParseError("expected a concept, got '" + t.text + "'", p.line(), t.column);
    Token name = p.next();
    return concept_name(sig.intern_concept(name.text));
}

} // namespace

KnowledgeBase parse_kb(const std::string &text) {
    KnowledgeBase kb;
    enum class Section { Preamble, Tbox, Abox };
    Section section = Section::Preamble;
    bool seen_tbox = false;
    bool seen_abox = false;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<Token> tokens = tokenize_line(line, line_no);
        if (tokens.empty())
            continue;
        LineParser p(tokens, line_no);
        const std::string &head = tokens[0].text;

        if (head == "tbox" || head == "abox") {
            p.next();
            p.expect(":");
            p.expect_end();
            if (head == "tbox") {
                if (seen_tbox)
                    throw ParseError("duplicate tbox section", line_no, tokens[0].column);
                if (seen_abox)
                    throw ParseError("tbox section must precede abox section", line_no, tokens[0].column);
                seen_tbox = true;
                section = Section::Tbox;
            } else {
                if (seen_abox)
                    throw ParseError("duplicate abox section", line_no, tokens[0].column);
                seen_abox = true;
                section = Section::Abox;
            }
            continue;
        }

        switch (section) {
        case Section::Preamble: {
            if (head == "trans" || head == "role") {
                p.next();
                Token name = p.next();
                p.expect_end();
                try {
                    kb.signature.intern_role(name.text, head == "trans");
                } catch (const Error &e) {
                    throw ParseError(e.what(), line_no, name.column);
                }
            } else if (head == "finite") {
                p.next();
                Token name = p.next();
                if (is_reserved(name.text) || !p.done())
                    throw ParseError("'finite' takes a single concept name", line_no, name.column);
                if (kb.has_finite_concept())
                    throw ParseError("duplicate 'finite' declaration", line_no, tokens[0].column);
                kb.finite_concept = kb.signature.intern_concept(name.text);
            } else {
                throw ParseError("expected a declaration, 'tbox:' or 'abox:'", line_no, tokens[0].column);
            }
            break;
        }
        case Section::Tbox: {
            ConceptExpr lhs = parse_concept_expr(p, kb.signature);
            p.expect("<=");
            ConceptExpr rhs = parse_concept_expr(p, kb.signature);
            p.expect_end();
            kb.raw_tbox.emplace_back(lhs, rhs);
            break;
        }
        case Section::Abox: {
            Token pred = p.next();
            if (is_reserved(pred.text))
                throw ParseError("expected an assertion", line_no, pred.column);
            p.expect("(");
            Token first = p.next();
            if (!p.done() && p.peek().text == ",") {
                p.next();
                Token second = p.next();
                p.expect(")");
                p.expect_end();
                RoleId role = kb.signature.role_id(pred.text);
                if (role == kNoId)
                    throw ParseError("undeclared role '" + pred.text + "'", line_no, pred.column);
                kb.abox.insert(Assertion::role_assertion(
                    role, kb.signature.intern_individual(first.text),
                    kb.signature.intern_individual(second.text)));
            } else {
                p.expect(")");
                p.expect_end();
                kb.abox.insert(Assertion::concept_assertion(
                    kb.signature.intern_concept(pred.text),
                    kb.signature.intern_individual(first.text)));
            }
            break;
        }
        }
    }
    return kb;
}

KnowledgeBase parse_and_normalize_kb(const std::string &text) {
    KnowledgeBase kb = parse_kb(text);
    kb.tbox = normalize_tbox(kb.raw_tbox, kb.signature);
    return kb;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string axiom_to_string(const Axiom &ax, const Signature &sig) {
    std::ostringstream out;
    auto join = [&sig](const std::set<ConceptId> &ids, const char *op, const char *empty) {
        if (ids.empty())
            return std::string(empty);
        std::vector<std::string> names;
        for (ConceptId id : ids)
            names.push_back(sig.concept_name(id));
        std::sort(names.begin(), names.end());
        std::string result = names[0];
        for (size_t i = 1; i < names.size(); ++i)
            result = "(" + result + " " + op + " " + names[i] + ")";
        return result;
    };
    switch (ax.kind) {
    case Axiom::Kind::ConjDisj:
        out << join(ax.lhs, "&", "top") << " <= " << join(ax.rhs, "|", "bot");
        break;
    case Axiom::Kind::AllValues:
        out << sig.concept_name(ax.a) << " <= only " << sig.role_name(ax.role) << " . "
            << sig.concept_name(ax.b);
        break;
    case Axiom::Kind::SomeValues:
        out << sig.concept_name(ax.a) << " <= some " << sig.role_name(ax.role) << " . "
            << sig.concept_name(ax.b);
        break;
    }
    return out.str();
}

std::string serialize_kb(const KnowledgeBase &kb) {
    const Signature &sig = kb.signature;
    std::ostringstream out;

    std::vector<std::string> role_lines;
    for (RoleId r = 0; r < sig.num_roles(); ++r)
        role_lines.push_back(std::string(sig.role_transitive(r) ? "trans " : "role ") +
                             sig.role_name(r));
    std::sort(role_lines.begin(), role_lines.end(),
              [](const std::string &a, const std::string &b) {
                  return a.substr(a.find(' ') + 1) < b.substr(b.find(' ') + 1);
              });
    for (const auto &l : role_lines)
        out << l << "\n";
    if (kb.has_finite_concept())
        out << "finite " << sig.concept_name(kb.finite_concept) << "\n";

    out << "tbox:\n";
    std::vector<std::string> axiom_lines;
    if (!kb.tbox.empty()) {
        for (const Axiom &ax : kb.tbox)
            axiom_lines.push_back(axiom_to_string(ax, sig));
    } else {
        for (const RawAxiom &raw : kb.raw_tbox)
            axiom_lines.push_back(concept_to_string(raw.first, sig) + " <= " +
                                  concept_to_string(raw.second, sig));
    }
    std::sort(axiom_lines.begin(), axiom_lines.end());
    axiom_lines.erase(std::unique(axiom_lines.begin(), axiom_lines.end()), axiom_lines.end());
    for (const auto &l : axiom_lines)
        out << l << "\n";

    out << "abox:\n";
    std::vector<std::string> assertion_lines;
    for (const Assertion &as : kb.abox) {
        if (as.is_role())
            assertion_lines.push_back(sig.role_name(as.role) + "(" +
                                      sig.individual_name(as.first) + ", " +
                                      sig.individual_name(as.second) + ")");
        else
            assertion_lines.push_back(sig.concept_name(as.concept_) + "(" +
                                      sig.individual_name(as.first) + ")");
    }
    std::sort(assertion_lines.begin(), assertion_lines.end());
    for (const auto &l : assertion_lines)
        out << l << "\n";

    return out.str();
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

// Clause over concept-name literals plus positively occurring role restrictions.
struct Restriction {
    bool existential;
    RoleId role;
    ConceptExpr filler;
};

struct Clause {
    std::set<ConceptId> pos;
    std::set<ConceptId> neg;
    std::vector<Restriction> restrictions;
};

ConceptExpr to_nnf(const ConceptExpr &c, bool negated) {
    switch (c->kind) {
    case ConceptNode::Kind::Bot:
        return negated ? concept_top() : concept_bot();
    case ConceptNode::Kind::Top:
        return negated ? concept_bot() : concept_top();
    case ConceptNode::Kind::Name:
        return negated ? concept_not(concept_name(c->name)) : concept_name(c->name);
    case ConceptNode::Kind::Not:
        return to_nnf(c->left, !negated);
    case ConceptNode::Kind::And: {
        ConceptExpr l = to_nnf(c->left, negated);
        ConceptExpr r = to_nnf(c->right, negated);
        return negated ? concept_or(l, r) : concept_and(l, r);
    }
    case ConceptNode::Kind::Or: {
        ConceptExpr l = to_nnf(c->left, negated);
        ConceptExpr r = to_nnf(c->right, negated);
        return negated ? concept_and(l, r) : concept_or(l, r);
    }
    case ConceptNode::Kind::Exists: {
        ConceptExpr filler = to_nnf(c->left, negated);
        // some r . bot is bot; only r . top is top
        if (!negated && filler->kind == ConceptNode::Kind::Bot)
            return concept_bot();
        if (negated && filler->kind == ConceptNode::Kind::Top)
            return concept_top();
        return negated ? concept_forall(c->role, filler) : concept_exists(c->role, filler);
    }
    case ConceptNode::Kind::Forall: {
        ConceptExpr filler = to_nnf(c->left, negated);
        if (!negated && filler->kind == ConceptNode::Kind::Top)
            return concept_top();
        if (negated && filler->kind == ConceptNode::Kind::Bot)
            return concept_bot();
        return negated ? concept_exists(c->role, filler) : concept_forall(c->role, filler);
    }
    }
    throw Error("unreachable concept kind");
}

// NNF formula -> clause set by distribution. Top yields no clause, Bot an empty one.
std::vector<Clause> clausify(const ConceptExpr &c) {
    switch (c->kind) {
    case ConceptNode::Kind::Top:
        return {};
    case ConceptNode::Kind::Bot:
        return {Clause{}};
    case ConceptNode::Kind::Name: {
        Clause cl;
        cl.pos.insert(c->name);
        return {cl};
    }
    case ConceptNode::Kind::Not: {
        Clause cl;
        cl.neg.insert(c->left->name);
        return {cl};
    }
    case ConceptNode::Kind::Exists:
    case ConceptNode::Kind::Forall: {
        Clause cl;
        cl.restrictions.push_back({c->kind == ConceptNode::Kind::Exists, c->role, c->left});
        return {cl};
    }
    case ConceptNode::Kind::And: {
        std::vector<Clause> left = clausify(c->left);
        std::vector<Clause> right = clausify(c->right);
        left.insert(left.end(), right.begin(), right.end());
        return left;
    }
    case ConceptNode::Kind::Or: {
        std::vector<Clause> left = clausify(c->left);
        std::vector<Clause> right = clausify(c->right);
        if (left.empty() || right.empty())
            return {};  // one side is top
        std::vector<Clause> product;
        for (const Clause &a : left) {
            for (const Clause &b : right) {
                Clause cl = a;
                cl.pos.insert(b.pos.begin(), b.pos.end());
                cl.neg.insert(b.neg.begin(), b.neg.end());
                cl.restrictions.insert(cl.restrictions.end(), b.restrictions.begin(),
                                       b.restrictions.end());
                product.push_back(std::move(cl));
            }
        }
        return product;
    }
    }
    throw Error("unreachable concept kind");
}

class Normalizer {
public:
    Normalizer(Signature &sig) : sig_(sig) {}

    void add_inclusion(const ConceptExpr &lhs, const ConceptExpr &rhs) {
        ConceptExpr formula = to_nnf(concept_or(concept_not(lhs), rhs), false);
        for (Clause &cl : clausify(formula))
            emit_clause(cl);
    }

    std::set<Axiom> take() { return std::move(axioms_); }

private:
    void emit_clause(const Clause &cl) {
        for (ConceptId a : cl.pos)
            if (cl.neg.count(a))
                return;  // tautology
        if (cl.restrictions.empty()) {
            axioms_.insert(Axiom::conj_disj(cl.neg, cl.pos));
            return;
        }
        if (cl.restrictions.size() == 1 && cl.pos.empty() && cl.neg.size() == 1) {
            const Restriction &r = cl.restrictions[0];
            ConceptId filler = name_for(r.filler);
            ConceptId a = *cl.neg.begin();
            axioms_.insert(r.existential ? Axiom::some_values(a, r.role, filler)
                                         : Axiom::all_values(a, r.role, filler));
            return;
        }
        std::set<ConceptId> rhs = cl.pos;
        for (const Restriction &r : cl.restrictions) {
            ConceptId fresh = fresh_name();
            ConceptId filler = name_for(r.filler);
            axioms_.insert(r.existential ? Axiom::some_values(fresh, r.role, filler)
                                         : Axiom::all_values(fresh, r.role, filler));
            rhs.insert(fresh);
        }
        axioms_.insert(Axiom::conj_disj(cl.neg, rhs));
    }

    // A concept name whose extension may be taken to be exactly the filler's.
    ConceptId name_for(const ConceptExpr &filler) {
        if (filler->kind == ConceptNode::Kind::Name)
            return filler->name;
        std::string key = concept_to_string(filler, sig_);
        auto it = filler_names_.find(key);
        if (it != filler_names_.end())
            return it->second;
        ConceptId fresh = fresh_name();
        filler_names_[key] = fresh;
        if (filler->kind != ConceptNode::Kind::Top)
            add_inclusion(concept_name(fresh), filler);
        return fresh;
    }

    ConceptId fresh_name() {
        while (true) {
            std::string candidate = "_n" + std::to_string(counter_++);
            if (sig_.concept_id(candidate) == kNoId)
                return sig_.intern_concept(candidate);
        }
    }

    Signature &sig_;
    std::set<Axiom> axioms_;
    std::map<std::string, ConceptId> filler_names_;
    int counter_ = 0;
};

} // namespace

std::set<Axiom> normalize_tbox(const std::vector<RawAxiom> &raw, Signature &sig) {
    Normalizer normalizer(sig);
    for (const RawAxiom &ax : raw)
        normalizer.add_inclusion(ax.first, ax.second);
    return normalizer.take();
}

RawAxiom axiom_to_raw(const Axiom &ax) {
    switch (ax.kind) {
    case Axiom::Kind::ConjDisj: {
        ConceptExpr lhs = concept_top();
        bool first = true;
        for (ConceptId id : ax.lhs) {
            lhs = first ? concept_name(id) : concept_and(lhs, concept_name(id));
            first = false;
        }
        ConceptExpr rhs = concept_bot();
        first = true;
        for (ConceptId id : ax.rhs) {
            rhs = first ? concept_name(id) : concept_or(rhs, concept_name(id));
            first = false;
        }
        return {lhs, rhs};
    }
    case Axiom::Kind::AllValues:
        return {concept_name(ax.a), concept_forall(ax.role, concept_name(ax.b))};
    case Axiom::Kind::SomeValues:
        return {concept_name(ax.a), concept_exists(ax.role, concept_name(ax.b))};
    }
    throw Error("unreachable axiom kind");
}

SignatureReport kb_signature(const KnowledgeBase &kb) {
    SignatureReport report;
    auto touch_concept = [&report](ConceptId id) {
        if (id != kNoId)
            report.occurring_concepts.insert(id);
    };
    auto touch_role = [&report](RoleId id) {
        if (id != kNoId)
            report.occurring_roles.insert(id);
    };

    std::function<void(const ConceptExpr &)> walk = [&](const ConceptExpr &c) {
        if (c->kind == ConceptNode::Kind::Name)
            touch_concept(c->name);
        if (c->role != kNoId)
            touch_role(c->role);
        if (c->left)
            walk(c->left);
        if (c->right)
            walk(c->right);
    };
    for (const RawAxiom &raw : kb.raw_tbox) {
        walk(raw.first);
        walk(raw.second);
    }
    for (const Axiom &ax : kb.tbox) {
        for (ConceptId id : ax.lhs)
            touch_concept(id);
        for (ConceptId id : ax.rhs)
            touch_concept(id);
        touch_concept(ax.a);
        touch_concept(ax.b);
        touch_role(ax.role);
    }
    for (const Assertion &as : kb.abox) {
        touch_concept(as.concept_);
        touch_role(as.role);
        report.occurring_individuals.insert(as.first);
        if (as.second != kNoId)
            report.occurring_individuals.insert(as.second);
    }
    touch_concept(kb.finite_concept);

    for (ConceptId id = 0; id < kb.signature.num_concepts(); ++id)
        if (!report.occurring_concepts.count(id))
            report.unused_concepts.insert(id);
    for (RoleId id = 0; id < kb.signature.num_roles(); ++id)
        if (!report.occurring_roles.count(id))
            report.unused_roles.insert(id);
    for (IndividualId id = 0; id < kb.signature.num_individuals(); ++id)
        if (!report.occurring_individuals.count(id))
            report.unused_individuals.insert(id);
    report.effective_l = kb.signature.num_concepts();
    return report;
}

} // namespace pfent
