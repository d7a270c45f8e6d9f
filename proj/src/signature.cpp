#include "pfent/signature.hpp"

namespace pfent {

ConceptId Signature::intern_concept(const std::string &name) {
    auto it = concept_ids_.find(name);
    if (it != concept_ids_.end())
        return it->second;
    ConceptId id = static_cast<ConceptId>(concept_names_.size());
    concept_names_.push_back(name);
    concept_ids_[name] = id;
    return id;
}

RoleId Signature::intern_role(const std::string &name, bool transitive) {
    auto it = role_ids_.find(name);
    if (it != role_ids_.end()) {
        if (role_transitive_[it->second] != transitive)
            throw Error("role '" + name + "' declared both transitive and non-transitive");
        return it->second;
    }
    RoleId id = static_cast<RoleId>(role_names_.size());
    role_names_.push_back(name);
    role_transitive_.push_back(transitive);
    role_ids_[name] = id;
    return id;
}

IndividualId Signature::intern_individual(const std::string &name) {
    auto it = individual_ids_.find(name);
    if (it != individual_ids_.end())
        return it->second;
    IndividualId id = static_cast<IndividualId>(individual_names_.size());
    individual_names_.push_back(name);
    individual_ids_[name] = id;
    return id;
}

ConceptId Signature::concept_id(const std::string &name) const {
    auto it = concept_ids_.find(name);
    return it == concept_ids_.end() ? kNoId : it->second;
}

RoleId Signature::role_id(const std::string &name) const {
    auto it = role_ids_.find(name);
    return it == role_ids_.end() ? kNoId : it->second;
}

IndividualId Signature::individual_id(const std::string &name) const {
    auto it = individual_ids_.find(name);
    return it == individual_ids_.end() ? kNoId : it->second;
}

std::vector<RoleId> Signature::transitive_roles() const {
    std::vector<RoleId> result;
    for (RoleId r = 0; r < num_roles(); ++r)
        if (role_transitive_[r])
            result.push_back(r);
    return result;
}

} // namespace pfent
