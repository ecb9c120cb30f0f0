// Command-line front end: parsing, checking, translation, generators, and the
// verification suite, glued together with file/stdin plumbing.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "slr/acceptance_suite.hpp"
#include "slr/decomposition.hpp"
#include "slr/generators.hpp"
#include "slr/mso_type.hpp"
#include "slr/slr2so.hpp"
#include "slr/slr_ast.hpp"
#include "slr/slr_check.hpp"
#include "slr/so_ast.hpp"
#include "slr/so_eval.hpp"
#include "slr/structures.hpp"
#include "slr/unfolding.hpp"

namespace {

using nlohmann::json;

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path);
    if (!in) throw slr::InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Signature files: 'rel <name> <arity>' and 'constsym <name>' lines.
slr::Signature parse_signature(const std::string& text) {
    slr::Signature sig;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        if (kw == "rel") {
            std::string name;
            int ar;
            if (!(ls >> name >> ar))
                throw slr::SyntaxError("line " + std::to_string(lineno) + ": expected 'rel name arity'");
            sig.add_relation(name, ar);
        } else if (kw == "constsym" || kw == "const") {
            std::string name;
            if (!(ls >> name))
                throw slr::SyntaxError("line " + std::to_string(lineno) + ": expected constant name");
            sig.add_constant(name);
        } else {
            throw slr::SyntaxError("line " + std::to_string(lineno) + ": unknown directive '" + kw + "'");
        }
    }
    return sig;
}

int count_nodes(const slr::SoPtr& f) {
    if (!f) return 0;
    int n = 1;
    for (const auto& k : f->kids) n += count_nodes(k);
    return n;
}

void collect_so_vars(const slr::SoPtr& f, std::set<std::string>& fo, std::set<std::string>& so) {
    if (!f) return;
    if (f->kind == slr::SoKind::ExistsFo || f->kind == slr::SoKind::ForallFo) fo.insert(f->name);
    if (f->kind == slr::SoKind::ExistsSo || f->kind == slr::SoKind::ForallSo) so.insert(f->name);
    for (const auto& k : f->kids) collect_so_vars(k, fo, so);
}

struct Report {
    bool enabled = false;
    json j;
    ~Report() {
        if (enabled) std::cout << j.dump(2) << "\n";
    }
    void set(const std::string& k, json v) {
        if (enabled) j[k] = std::move(v);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inductive-definition checking, treewidth, and second-order translation toolkit"};
    app.require_subcommand(1);
    bool emit_json = false;
    app.add_flag("--json", emit_json, "emit a machine-readable JSON report");

    std::string arg_struct, arg_struct2, arg_sid, arg_goal, arg_so, arg_sig, arg_cfg, arg_word;
    int arg_k = 1, arg_rank = 0, arg_pad = -1, arg_max_types = 512, arg_max_tuples = -1;
    bool emit_stats = false;

    auto* c_check = app.add_subcommand("check-slr", "derivability of a goal atom on a structure");
    c_check->add_option("struct", arg_struct)->required();
    c_check->add_option("sid", arg_sid)->required();
    c_check->add_option("goal", arg_goal)->required();

    auto* c_so = app.add_subcommand("check-so", "truth of a second-order sentence on a structure");
    c_so->add_option("struct", arg_struct)->required();
    c_so->add_option("so", arg_so)->required();
    c_so->add_option("--pad", arg_pad, "spare evaluation elements (default 2^rank)");

    auto* c_norm = app.add_subcommand("normalize", "normalize a definition system");
    c_norm->add_option("sid", arg_sid)->required();

    auto* c_tr = app.add_subcommand("translate-so", "translate a goal atom to a second-order sentence");
    c_tr->add_option("sid", arg_sid)->required();
    c_tr->add_option("goal", arg_goal)->required();
    c_tr->add_flag("--emit-stats", emit_stats, "print variable and node counts");

    auto* c_twk = app.add_subcommand("gen-twk", "generate the bounded-treewidth definition system");
    c_twk->add_option("k", arg_k)->required();
    c_twk->add_option("sig", arg_sig)->required();

    auto* c_twm = app.add_subcommand("gen-twk-mso", "generate the type-annotated bounded-treewidth system");
    c_twm->add_option("k", arg_k)->required();
    c_twm->add_option("sig", arg_sig)->required();
    c_twm->add_option("so", arg_so)->required();
    c_twm->add_option("--max-types", arg_max_types, "cap on discovered types");
    c_twm->add_option("--max-tuples", arg_max_tuples, "realization budget (-1 = unbounded)");

    auto* c_cfg = app.add_subcommand("cfg2sid", "encode a context-free grammar as a definition system");
    c_cfg->add_option("cfg", arg_cfg)->required();

    auto* c_word = app.add_subcommand("word2struct", "encode a word as a structure");
    c_word->add_option("word", arg_word)->required();

    auto* c_tw = app.add_subcommand("treewidth", "exact treewidth with a witness decomposition");
    c_tw->add_option("struct", arg_struct)->required();

    auto* c_iso = app.add_subcommand("iso", "isomorphism test with a witness mapping");
    c_iso->add_option("struct", arg_struct)->required();
    c_iso->add_option("struct2", arg_struct2)->required();

    auto* c_type = app.add_subcommand("mso-type", "rank-r back-and-forth type of a structure");
    c_type->add_option("struct", arg_struct)->required();
    c_type->add_option("rank", arg_rank)->required();

    auto* c_orc = app.add_subcommand("oracle-check", "derivability via the unfolding-search oracle");
    c_orc->add_option("struct", arg_struct)->required();
    c_orc->add_option("sid", arg_sid)->required();
    c_orc->add_option("goal", arg_goal)->required();

    auto* c_suite = app.add_subcommand("suite", "run the verification suite");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    Report report;
    report.enabled = emit_json;
    report.j["verb"] = app.get_subcommands().front()->get_name();
    auto t0 = std::chrono::steady_clock::now();

    try {
        int code = 0;
        if (*c_check || *c_orc) {
            slr::Structure s = slr::parse_structure(read_input(arg_struct));
            slr::Sid sid = slr::parse_sid(read_input(arg_sid));
            slr::SlrPtr goal = slr::parse_slr(sid.sig, arg_goal);
            bool v = *c_check ? slr::check_slr(s, {}, goal, sid)
                              : slr::oracle_check(s, {}, goal, sid);
            if (!emit_json) std::cout << (v ? "sat" : "unsat") << "\n";
            report.set("verdict", v);
            code = v ? 0 : 1;
        } else if (*c_so) {
            slr::Structure s = slr::parse_structure(read_input(arg_struct));
            slr::SoPtr f = slr::parse_so(s.sig, read_input(arg_so));
            int padding = arg_pad >= 0 ? arg_pad : 1 << slr::quantifier_rank(f);
            bool v = slr::eval_so(slr::pad(s, padding), {}, f);
            if (!emit_json) std::cout << (v ? "sat" : "unsat") << "\n";
            report.set("verdict", v);
            report.set("padding", padding);
            code = v ? 0 : 1;
        } else if (*c_norm) {
            slr::Sid sid = slr::parse_sid(read_input(arg_sid));
            std::string out = slr::print_sid(slr::normalize_sid(sid));
            if (!emit_json) std::cout << out;
            report.set("sid", out);
        } else if (*c_tr) {
            slr::Sid sid = slr::parse_sid(read_input(arg_sid));
            slr::SlrPtr goal = slr::parse_slr(sid.sig, arg_goal);
            slr::SoPtr f = slr::translate(goal, sid);
            std::string out = slr::print_so(f);
            if (!emit_json) std::cout << out << "\n";
            report.set("so", out);
            if (emit_stats) {
                std::set<std::string> fo, so;
                collect_so_vars(f, fo, so);
                if (!emit_json)
                    std::cout << "# nodes " << count_nodes(f) << " fo-vars " << fo.size()
                              << " so-vars " << so.size() << "\n";
                report.set("nodes", count_nodes(f));
                report.set("fo_vars", (int)fo.size());
                report.set("so_vars", (int)so.size());
            }
        } else if (*c_twk) {
            slr::Signature sig = parse_signature(read_input(arg_sig));
            std::string out = slr::print_sid(slr::gen_twk_sid(arg_k, sig));
            if (!emit_json) std::cout << out;
            report.set("sid", out);
        } else if (*c_twm) {
            slr::Signature sig = parse_signature(read_input(arg_sig));
            slr::SoPtr phi = slr::parse_so(sig, read_input(arg_so));
            slr::TwMsoSid twk = slr::gen_twk_mso_sid(arg_k, sig, phi, arg_max_types, arg_max_tuples);
            std::string out = slr::print_sid(twk.sid);
            if (!emit_json) std::cout << out;
            report.set("sid", out);
            report.set("types", (int)twk.types.size());
            report.set("top", twk.top);
        } else if (*c_cfg) {
            slr::Cfg g = slr::parse_cfg(read_input(arg_cfg));
            std::string out = slr::print_sid(slr::cfg_to_sid(slr::greibach_normalize(g)));
            if (!emit_json) std::cout << out;
            report.set("sid", out);
        } else if (*c_word) {
            std::string out = slr::print_structure(slr::word_to_structure(arg_word));
            if (!emit_json) std::cout << out;
            report.set("struct", out);
        } else if (*c_tw) {
            slr::Structure s = slr::parse_structure(read_input(arg_struct));
            slr::TreewidthResult r = slr::exact_treewidth(s);
            if (!emit_json) std::cout << r.width << "\n" << slr::print_decomposition(r.witness);
            report.set("width", r.width);
            report.set("decomposition", slr::print_decomposition(r.witness));
        } else if (*c_iso) {
            slr::Structure a = slr::parse_structure(read_input(arg_struct));
            slr::Structure b = slr::parse_structure(read_input(arg_struct2));
            auto m = slr::find_isomorphism(a, b);
            if (m) {
                json jm = json::array();
                for (const auto& [x, y] : *m) {
                    if (!emit_json) std::cout << "map " << x << " " << y << "\n";
                    jm.push_back({{"from", x}, {"to", y}});
                }
                report.set("witness", jm);
            }
            report.set("verdict", m.has_value());
            code = m ? 0 : 1;
        } else if (*c_type) {
            slr::Structure s = slr::parse_structure(read_input(arg_struct));
            slr::MsoType t = slr::mso_type(s, arg_rank);
            if (!emit_json) std::cout << t.key << "\n";
            report.set("rank", t.rank);
            report.set("key", t.key);
        } else if (*c_suite) {
            auto results = slr::acceptance::run_all(emit_json ? nullptr : &std::cout);
            json ja = json::array();
            bool all = true;
            for (const auto& r : results) {
                ja.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
                all = all && r.pass;
            }
            report.set("criteria", ja);
            report.set("verdict", all);
            code = all ? 0 : 1;
        }
        report.set("seconds",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        return code;
    } catch (const std::exception& e) {
        report.set("error", e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
