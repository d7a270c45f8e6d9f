#include "pfent/concepts.hpp"

namespace pfent {

namespace {

ConceptExpr make(ConceptNode::Kind kind, ConceptId name = kNoId, RoleId role = kNoId,
                 ConceptExpr left = nullptr, ConceptExpr right = nullptr) {
    ConceptNode n;
    n.kind = kind;
    n.name = name;
    n.role = role;
    n.left = std::move(left);
    n.right = std::move(right);
    return std::make_shared<const ConceptNode>(std::move(n));
}

} // namespace

ConceptExpr concept_bot() { return make(ConceptNode::Kind::Bot); }
ConceptExpr concept_top() { return make(ConceptNode::Kind::Top); }

ConceptExpr concept_name(ConceptId id) {
    return make(ConceptNode::Kind::Name, id);
}

ConceptExpr concept_not(ConceptExpr c) {
    return make(ConceptNode::Kind::Not, kNoId, kNoId, std::move(c));
}

ConceptExpr concept_and(ConceptExpr a, ConceptExpr b) {
    return make(ConceptNode::Kind::And, kNoId, kNoId, std::move(a), std::move(b));
}

ConceptExpr concept_or(ConceptExpr a, ConceptExpr b) {
    return make(ConceptNode::Kind::Or, kNoId, kNoId, std::move(a), std::move(b));
}

ConceptExpr concept_exists(RoleId r, ConceptExpr filler) {
    return make(ConceptNode::Kind::Exists, kNoId, r, std::move(filler));
}

ConceptExpr concept_forall(RoleId r, ConceptExpr filler) {
    return make(ConceptNode::Kind::Forall, kNoId, r, std::move(filler));
}

std::string concept_to_string(const ConceptExpr &c, const Signature &sig) {
    switch (c->kind) {
    case ConceptNode::Kind::Bot: return "bot";
    case ConceptNode::Kind::Top: return "top";
    case ConceptNode::Kind::Name: return sig.concept_name(c->name);
    case ConceptNode::Kind::Not: return "!" + concept_to_string(c->left, sig);
    case ConceptNode::Kind::And:
        return "(" + concept_to_string(c->left, sig) + " & " + concept_to_string(c->right, sig) + ")";
    case ConceptNode::Kind::Or:
        return "(" + concept_to_string(c->left, sig) + " | " + concept_to_string(c->right, sig) + ")";
    case ConceptNode::Kind::Exists:
        return "some " + sig.role_name(c->role) + " . " + concept_to_string(c->left, sig);
    case ConceptNode::Kind::Forall:
        return "only " + sig.role_name(c->role) + " . " + concept_to_string(c->left, sig);
    }
    return "?";
}

bool concept_equal(const ConceptExpr &a, const ConceptExpr &b) {
    if (a == b)
        return true;
    if (a->kind != b->kind || a->name != b->name || a->role != b->role)
        return false;
    if ((a->left == nullptr) != (b->left == nullptr))
        return false;
    if ((a->right == nullptr) != (b->right == nullptr))
        return false;
    if (a->left && !concept_equal(a->left, b->left))
        return false;
    if (a->right && !concept_equal(a->right, b->right))
        return false;
    return true;
}

} // namespace pfent
