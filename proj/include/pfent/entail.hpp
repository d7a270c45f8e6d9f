#ifndef PFENT_ENTAIL_HPP
#define PFENT_ENTAIL_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfent/construct.hpp"
#include "pfent/elementary.hpp"
#include "pfent/interp.hpp"
#include "pfent/oracle.hpp"
#include "pfent/query.hpp"

namespace pfent {

struct DecideCaps {
    int max_block_size = 3;
    int safety_limit = 12;
    bool exact = false;       // refuse to run unless the theoretical bound fits the caps
    int oracle_bound = 0;     // > 0 enables the oracle fallback for unsupported ABoxes
    int witness_depth = 3;
    int jobs = 1;
};

/// Finite description of a regular witness tree: blocks plus a port-to-block
/// choice map ("greedy fashion", first fulfilling block in canonical order).
struct WitnessGenerator {
    std::vector<Block> blocks;
    int root_block = -1;
    std::map<std::pair<int, int>, int> port_child;  // (block index, port index) -> block

    /// Materializes the piece tree down to `depth` levels of blocks.
    /// Ports of the deepest level stay open (frontier obligations).
    PiecewiseElementary expand(int depth) const;
};

struct Verdict {
    enum class Status { NotEntailed, Entailed, Inconclusive };
    enum class Mode { Exact, Capped, Oracle };

    Status status = Status::Inconclusive;
    Mode mode = Mode::Capped;
    bool exact = false;  // Entailed only: caps covered the Theorem-level bounds

    std::optional<WitnessGenerator> witness;
    std::optional<Interpretation> countermodel;  // finite witness when one was found
    std::vector<std::string> frontier_obligations;

    int cap_block_size = 0;
    int blowup_n = 0;
    int oracle_bound = 0;
    double theoretical_piece_bound = 0;
};

struct BlockSet {
    std::vector<Block> blocks;
    int generation = 0;
};

/// Local validity: the shape (with ports discharging missing existentials)
/// satisfies the axioms, and every root-annotated subquery is refuted by every
/// decomposition against the blown-up shape with n = max variable count.
bool validate_block(const Block &b, const KnowledgeBase &kb, const Ucq &q, int n);

/// Greatest fixpoint: a block survives iff each of its ports is fulfilled by a
/// surviving block (type, escape, and annotation containment).
BlockSet eliminate_blocks(const BlockSet &b0, const KnowledgeBase &kb);

bool port_fulfilled_by(const Port &p, const std::set<Subquery> &port_annotation,
                       const Block &candidate, const KnowledgeBase &kb);

Verdict decide(const KnowledgeBase &kb, const Ucq &q, const DecideCaps &caps);

/// Greedy witness from a surviving block set: every port maps to the first
/// fulfilling block in canonical order.
WitnessGenerator build_witness(const BlockSet &surviving, int root_block,
                               const KnowledgeBase &kb);

/// Bounded re-verification of an emitted witness: the expansion validates as
/// piecewise, model-checks modulo frontier SomeValues obligations, and admits
/// no match of any disjunct. Returns the obligations; throws on hard failure.
std::vector<std::string> verify_witness(const WitnessGenerator &w, const KnowledgeBase &kb,
                                        const Ucq &q, int depth);

std::string verdict_to_json(const Verdict &v, const KnowledgeBase &kb);

} // namespace pfent

#endif
