// Command-line front end: every pipeline stage as a subcommand.
// Exit codes: 0 decided/succeeded, 2 inconclusive, 1 error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pfent/closedpred.hpp"
#include "pfent/construct.hpp"
#include "pfent/entail.hpp"
#include "pfent/homo.hpp"
#include "pfent/interp.hpp"
#include "pfent/kb.hpp"
#include "pfent/oracle.hpp"
#include "pfent/query.hpp"

namespace {

using namespace pfent;

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// model files may mention roles the signature has not seen; default them to
// non-transitive so standalone inspection commands work
Interpretation load_model(const std::string &path, Signature &sig) {
    std::string text = slurp(path);
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.contains("roles"))
        for (const auto &[name, pairs] : j.at("roles").items())
            if (sig.role_id(name) == kNoId)
                sig.intern_role(name, false);
    return interp_from_json(text, sig);
}

Ucq load_queries(const std::string &path, Signature &sig) {
    std::string text = slurp(path);
    // roles referenced by binary atoms must exist; intern missing ones as
    // non-transitive so pure query evaluation does not require declarations
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream tokens(line);
        std::string word;
        while (tokens >> word) {
            size_t open = word.find('(');
            if (open == std::string::npos || open == 0)
                continue;
            std::string head = word.substr(0, open);
            if (word.find(',') != std::string::npos && sig.role_id(head) == kNoId &&
                head != "cq")
                sig.intern_role(head, false);
        }
    }
    return parse_queries(text, sig);
}

int run(int argc, char **argv) {
    CLI::App app{"partially finite conjunctive-query entailment toolkit"};
    app.require_subcommand(1);

    // check-model
    auto *check = app.add_subcommand("check-model", "check an interpretation against a KB");
    std::string check_kb, check_model_path;
    check->add_option("--kb", check_kb)->required();
    check->add_option("--model", check_model_path)->required();

    // match
    auto *match_cmd = app.add_subcommand("match", "evaluate a UCQ on an interpretation");
    std::string match_query, match_model;
    bool match_json = false;
    match_cmd->add_option("--query", match_query)->required();
    match_cmd->add_option("--model", match_model)->required();
    match_cmd->add_flag("--json", match_json);

    // unravel
    auto *unravel_cmd = app.add_subcommand("unravel", "depth-bounded (quasi-)unravelling");
    std::string unravel_model, unravel_mode = "quasi", unravel_finite;
    int unravel_root = 0, unravel_depth = 3;
    unravel_cmd->add_option("--model", unravel_model)->required();
    unravel_cmd->add_option("--root", unravel_root)->required();
    unravel_cmd->add_option("--mode", unravel_mode)->check(CLI::IsMember({"quasi", "classical"}));
    unravel_cmd->add_option("--depth", unravel_depth);
    unravel_cmd->add_option("--finite", unravel_finite);

    // quotient
    auto *quotient_cmd = app.add_subcommand("quotient", "coloured blocking quotient");
    std::string quotient_model, quotient_colours;
    int quotient_k = 0;
    quotient_cmd->add_option("--model", quotient_model)->required();
    quotient_cmd->add_option("--colours", quotient_colours)->required();
    quotient_cmd->add_option("--k", quotient_k)->required();

    // blowup
    auto *blowup_cmd = app.add_subcommand("blowup", "blow-up G_n of a piecewise generator");
    std::string blowup_generator, blowup_finite;
    int blowup_n = 1;
    blowup_cmd->add_option("--generator", blowup_generator)->required();
    blowup_cmd->add_option("--n", blowup_n)->required();
    blowup_cmd->add_option("--finite", blowup_finite);

    // entail
    auto *entail_cmd = app.add_subcommand("entail", "partially finite entailment");
    std::string entail_kb, entail_query;
    bool entail_exact = false, entail_json = false;
    int entail_block_size = 3, entail_oracle = 0, entail_jobs = 1;
    entail_cmd->add_option("--kb", entail_kb)->required();
    entail_cmd->add_option("--query", entail_query)->required();
    entail_cmd->add_flag("--exact", entail_exact);
    entail_cmd->add_option("--max-block-size", entail_block_size);
    entail_cmd->add_option("--oracle-bound", entail_oracle);
    entail_cmd->add_option("--jobs", entail_jobs);
    entail_cmd->add_flag("--json", entail_json);

    // contain
    auto *contain_cmd = app.add_subcommand("contain", "containment with closed predicates");
    std::string contain_instance, contain_backend = "oracle";
    int contain_bound = 5;
    bool contain_json = false;
    contain_cmd->add_option("--instance", contain_instance)->required();
    contain_cmd->add_option("--backend", contain_backend)
        ->check(CLI::IsMember({"exact", "oracle"}));
    contain_cmd->add_option("--oracle-bound", contain_bound);
    contain_cmd->add_flag("--json", contain_json);

    // oracle
    auto *oracle_cmd = app.add_subcommand("oracle", "bounded countermodel search");
    std::string oracle_kb, oracle_query, oracle_certificate;
    int oracle_max = 4;
    bool oracle_json = false;
    oracle_cmd->add_option("--kb", oracle_kb)->required();
    oracle_cmd->add_option("--query", oracle_query)->required();
    oracle_cmd->add_option("--max-size", oracle_max);
    oracle_cmd->add_option("--certificate", oracle_certificate);
    oracle_cmd->add_flag("--json", oracle_json);

    CLI11_PARSE(app, argc, argv);

    if (check->parsed()) {
        KnowledgeBase kb = parse_and_normalize_kb(slurp(check_kb));
        Interpretation model = load_model(check_model_path, kb.signature);
        ModelCheckResult result = check_model(model, kb);
        if (result.ok) {
            std::cout << "model: yes\n";
        } else {
            std::cout << "model: no\n" << result.violation->description;
            if (result.violation->witness)
                std::cout << " (element " << *result.violation->witness << ")";
            std::cout << "\n";
        }
        return 0;
    }

    if (match_cmd->parsed()) {
        Signature sig;
        Interpretation model = load_model(match_model, sig);
        Ucq queries = load_queries(match_query, sig);
        UcqResult result = evaluate_ucq(queries, model);
        if (!result.satisfied) {
            std::cout << "match: none\n";
            return 0;
        }
        const ConjunctiveQuery *matched = nullptr;
        for (const auto &cq : queries.disjuncts)
            if (cq.name == result.disjunct)
                matched = &cq;
        if (match_json && matched) {
            std::cout << match_to_json(result, *matched);
        } else {
            std::cout << "match: " << result.disjunct;
            if (matched)
                for (const auto &[var, elem] : result.match)
                    std::cout << " " << matched->variables[var] << "=" << elem;
            std::cout << "\n";
        }
        return 0;
    }

    if (unravel_cmd->parsed()) {
        Signature sig;
        Interpretation model = load_model(unravel_model, sig);
        Generator g;
        g.base.interp = model;
        g.base.root = unravel_root;
        ConceptId finite = unravel_finite.empty() ? kNoId : sig.intern_concept(unravel_finite);
        Unravelling u;
        if (unravel_mode == "quasi") {
            g.mode = Generator::Mode::Quasi;
            std::optional<RoleId> role;
            for (const auto &[r, edges] : model.roles)
                if (!edges.empty()) {
                    if (role)
                        throw Error("quasi unravelling needs a single-role model");
                    role = r;
                }
            if (!role)
                role = sig.num_roles() > 0 ? 0 : sig.intern_role("t", true);
            u = quasi_unravel(g, *role, finite, unravel_depth);
        } else {
            g.mode = Generator::Mode::Classical;
            u = classical_unravel(g, unravel_depth);
        }
        nlohmann::ordered_json j;
        j["root"] = u.root;
        j["interpretation"] = nlohmann::ordered_json::parse(interp_to_json(u.interp, sig));
        nlohmann::ordered_json projection = nlohmann::ordered_json::object();
        for (const auto &[e, target] : u.projection.mapping)
            projection[std::to_string(e)] = target;
        j["projection"] = projection;
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (quotient_cmd->parsed()) {
        Signature sig;
        Interpretation model = load_model(quotient_model, sig);
        Colouring colours = colouring_from_json(slurp(quotient_colours));
        QuotientResult q = blocking_quotient(model, colours, quotient_k);
        nlohmann::ordered_json j;
        j["interpretation"] = nlohmann::ordered_json::parse(interp_to_json(q.interp, sig));
        nlohmann::ordered_json classes = nlohmann::ordered_json::object();
        for (const auto &[e, cls] : q.projection.mapping)
            classes[std::to_string(e)] = cls;
        j["classes"] = classes;
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (blowup_cmd->parsed()) {
        Signature sig;
        PiecewiseElementary g = piecewise_from_json(slurp(blowup_generator), sig);
        ConceptId finite = blowup_finite.empty() ? kNoId : sig.intern_concept(blowup_finite);
        BlownInterpretation blown = blow_up(g, blowup_n, sig, finite);
        std::cout << interp_to_json(blown.flat, sig);
        return 0;
    }

    if (entail_cmd->parsed()) {
        KnowledgeBase kb = parse_and_normalize_kb(slurp(entail_kb));
        Ucq queries = parse_queries(slurp(entail_query), kb.signature);
        DecideCaps caps;
        caps.max_block_size = entail_block_size;
        caps.exact = entail_exact;
        caps.oracle_bound = entail_oracle;
        caps.jobs = entail_jobs;
        Verdict v = decide(kb, queries, caps);
        if (entail_json)
            std::cout << verdict_to_json(v, kb);
        else {
            switch (v.status) {
            case Verdict::Status::NotEntailed: std::cout << "not entailed\n"; break;
            case Verdict::Status::Entailed:
                std::cout << (v.exact ? "entailed (exact)\n" : "entailed (bounded)\n");
                break;
            case Verdict::Status::Inconclusive: std::cout << "inconclusive\n"; break;
            }
        }
        return v.status == Verdict::Status::Inconclusive ? 2 : 0;
    }

    if (contain_cmd->parsed()) {
        ContainmentInstance inst = parse_containment(slurp(contain_instance));
        EntailmentBackend backend;
        if (contain_backend == "oracle") {
            backend = [contain_bound](const KnowledgeBase &kb, const Ucq &q) {
                DecideCaps caps;
                caps.oracle_bound = contain_bound;
                caps.max_block_size = 0;  // force the fallback path
                Verdict v;
                OracleOptions opts;
                opts.max_size = contain_bound;
                v.mode = Verdict::Mode::Oracle;
                v.oracle_bound = contain_bound;
                if (auto counter = bounded_countermodel_search(kb, q, opts)) {
                    v.status = Verdict::Status::NotEntailed;
                    v.countermodel = *counter;
                } else {
                    v.status = Verdict::Status::Entailed;
                }
                return v;
            };
        } else {
            backend = [](const KnowledgeBase &kb, const Ucq &q) {
                DecideCaps caps;
                return decide(kb, q, caps);
            };
        }
        Verdict v = decide_containment(inst, backend);
        if (contain_json) {
            KnowledgeBase dummy;
            dummy.signature = inst.signature;
            std::cout << verdict_to_json(v, dummy);
        } else {
            switch (v.status) {
            case Verdict::Status::NotEntailed: std::cout << "not contained\n"; break;
            case Verdict::Status::Entailed: std::cout << "contained\n"; break;
            case Verdict::Status::Inconclusive: std::cout << "inconclusive\n"; break;
            }
        }
        return v.status == Verdict::Status::Inconclusive ? 2 : 0;
    }

    if (oracle_cmd->parsed()) {
        KnowledgeBase kb = parse_and_normalize_kb(slurp(oracle_kb));
        Ucq queries = parse_queries(slurp(oracle_query), kb.signature);
        if (!oracle_certificate.empty()) {
            Interpretation candidate = load_model(oracle_certificate, kb.signature);
            bool ok = verify_countermodel(candidate, kb, queries);
            std::cout << (ok ? "certificate: valid countermodel\n"
                             : "certificate: rejected\n");
            return 0;
        }
        OracleOptions opts;
        opts.max_size = oracle_max;
        auto counter = bounded_countermodel_search(kb, queries, opts);
        if (counter) {
            if (oracle_json)
                std::cout << interp_to_json(*counter, kb.signature);
            else
                std::cout << "countermodel of size " << counter->size() << " found\n"
                          << interp_to_json(*counter, kb.signature);
        } else {
            std::cout << "no countermodel up to size " << oracle_max << "\n";
        }
        return 0;
    }
    return 1;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
