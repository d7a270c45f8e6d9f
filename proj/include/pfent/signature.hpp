#ifndef PFENT_SIGNATURE_HPP
#define PFENT_SIGNATURE_HPP

#include <map>
#include <string>
#include <vector>

#include "pfent/base.hpp"

namespace pfent {

/// The vocabulary of a knowledge base: concept names, role names (each tagged
/// transitive or not), and individuals. Identifiers are interned in
/// first-occurrence order; the three id spaces are independent.
class Signature {
public:
    ConceptId intern_concept(const std::string &name);
    RoleId intern_role(const std::string &name, bool transitive);
    IndividualId intern_individual(const std::string &name);

    ConceptId concept_id(const std::string &name) const;  // kNoId if unknown
    RoleId role_id(const std::string &name) const;
    IndividualId individual_id(const std::string &name) const;

    const std::string &concept_name(ConceptId id) const { return concept_names_.at(id); }
    const std::string &role_name(RoleId id) const { return role_names_.at(id); }
    const std::string &individual_name(IndividualId id) const { return individual_names_.at(id); }

    bool role_transitive(RoleId id) const { return role_transitive_.at(id); }

    int num_concepts() const { return static_cast<int>(concept_names_.size()); }
    int num_roles() const { return static_cast<int>(role_names_.size()); }
    int num_individuals() const { return static_cast<int>(individual_names_.size()); }

    std::vector<RoleId> transitive_roles() const;

    bool operator==(const Signature &other) const = default;

private:
    std::vector<std::string> concept_names_;
    std::vector<std::string> role_names_;
    std::vector<bool> role_transitive_;
    std::vector<std::string> individual_names_;
    std::map<std::string, ConceptId> concept_ids_;
    std::map<std::string, RoleId> role_ids_;
    std::map<std::string, IndividualId> individual_ids_;
};

} // namespace pfent

#endif
