#ifndef PFENT_ORACLE_HPP
#define PFENT_ORACLE_HPP

#include <optional>

#include "pfent/interp.hpp"
#include "pfent/query.hpp"

namespace pfent {

struct OracleOptions {
    int max_size = 4;
    int safety_limit = 8;  // raise only with PFENT_SAFETY_OVERRIDE=1
};

/// Exhaustive search for a finite countermodel of at most max_size elements:
/// a transitive interpretation with check_model true and evaluate_ucq false.
/// A finite model has a finite F-extension, so any hit is a partially finite
/// countermodel. Individuals are pinned to the lowest ids; every other element
/// is directedly reachable from them (unreachable parts can always be dropped).
/// Returns the countermodel, or nothing if none exists up to the bound.
std::optional<Interpretation> bounded_countermodel_search(const KnowledgeBase &kb,
                                                          const Ucq &q,
                                                          const OracleOptions &opts);

/// check_model(i, kb) and not evaluate_ucq(q, i).
bool verify_countermodel(const Interpretation &i, const KnowledgeBase &kb, const Ucq &q);

/// Number of countermodels with exactly `size` elements, one per canonical
/// class (individuals pinned, non-individuals quotiented by permutation).
long count_countermodels(const KnowledgeBase &kb, const Ucq &q, int size);

} // namespace pfent

#endif
