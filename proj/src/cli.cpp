#include "snlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "snlab/category_io.hpp"
#include "snlab/eb_axioms.hpp"
#include "snlab/hamiltonian.hpp"
#include "snlab/quantum_info.hpp"

namespace snlab {

using nlohmann::json;

void RunConfig::validate() const {
    if (!(tol_alg > 0.0) || !(tol_ent > 0.0)) throw ValidationError("tolerances must be positive");
    if (topology != "torus" && topology != "open") throw ValidationError("topology must be torus or open");
    if (format != "json" && format != "csv") throw ValidationError("format must be json or csv");
    if (lx < 1 || ly < 1) throw ValidationError("lattice extents must be positive");
    if (threads < 1) throw ValidationError("threads must be positive");
    if (!(basis_cap > 0.0)) throw ValidationError("basis cap must be positive");
}

json RunConfig::to_json() const {
    return {{"category", category}, {"lx", lx},         {"ly", ly},
            {"topology", topology}, {"tol_alg", tol_alg}, {"tol_ent", tol_ent},
            {"seed", seed},         {"format", format},   {"basis_cap", basis_cap}};
}

namespace {

struct Report {
    json doc;
    std::string csv;
    bool pass = true;
};

// Options that only some commands read.
struct CommandOptions {
    std::string source;
    std::string state;
    std::string state_dir = ".";
    int plaquette = -1;
    int ell = 1;
    int samples = 20;
    int width_c = 1;
    int width_b = 1;
    std::vector<int> sizes{1, 2, 3, 4};
    int anchor = 0;
    std::string region = "disk";
    int thickening = 1;
    int row = 0;
    bool check_convergence = false;
    std::string kind = "markov";
};

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

FusionCategory load_source(const std::string& source, bool force) {
    const auto names = builtin_names();
    if (std::find(names.begin(), names.end(), source) != names.end()) return builtin(source);
    return resolve_category(source, force);
}

HoneycombLattice make_lattice(const RunConfig& cfg) {
    return cfg.topology == "torus" ? build_torus(cfg.lx, cfg.ly) : build_open_patch(cfg.lx, cfg.ly);
}

std::string hex(std::uint64_t x) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

StateVector compute_ground_state(const StringNetModel& model, const RunConfig& cfg) {
    GroundSpaceOptions opt;
    opt.seed = cfg.seed;
    GroundSpace g = ground_space(model, opt);
    if (g.dimension() == 0) throw ConvergenceError("empty ground space");
    return g.vectors.col(0);
}

// From --state, then SNLAB_CACHE_DIR, then a fresh ground-space search
// (first column), which is stored in the cache directory when one is set.
StateVector ground_state(const StringNetModel& model, const RunConfig& cfg, const CommandOptions& o, json& info) {
    if (!o.state.empty()) {
        info = {{"source", "file"}, {"path", o.state}};
        return read_state_file(o.state, model.basis);
    }
    const char* dir = std::getenv("SNLAB_CACHE_DIR");
    if (dir == nullptr || *dir == '\0') {
        info = {{"source", "computed"}};
        return compute_ground_state(model, cfg);
    }
    const std::uint64_t cat_hash = std::hash<std::string>{}(category_to_json(*model.cat).dump());
    const std::string name = "gs_" + model.cat->name + "_" + cfg.topology + "_" + std::to_string(cfg.lx) + "x" +
                             std::to_string(cfg.ly) + "_seed" + std::to_string(cfg.seed) + "_" +
                             hex(model.basis.hash()) + "_" + hex(cat_hash) + ".snstate";
    const std::filesystem::path path = std::filesystem::path(dir) / name;
    if (std::filesystem::exists(path)) {
        info = {{"source", "cache"}};
        return read_state_file(path.string(), model.basis);
    }
    StateVector psi = compute_ground_state(model, cfg);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create cache directory " + std::string(dir));
    write_state_file(path.string(), model.basis, psi);
    info = {{"source", "computed"}};
    return psi;
}

// ---------------------------------------------------------------------------

Report category_validate(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(o.source, true);
    Report r;
    json checks = json::array();
    r.csv = "check,instances,max_residual,ok\n";
    auto add = [&](const std::string& name, const ValidationReport& v) {
        checks.push_back({{"check", name},
                          {"instances", v.instances_checked},
                          {"max_residual", v.max_residual},
                          {"ok", v.ok()},
                          {"violations", v.violations}});
        r.csv += name + "," + std::to_string(v.instances_checked) + "," + fmt(v.max_residual) + "," +
                 (v.ok() ? "true" : "false") + "\n";
        r.pass = r.pass && v.ok();
    };
    const ValidationReport ring = validate_fusion_ring(cat);
    add("fusion_ring", ring);
    if (ring.ok()) {
        add("pentagon", check_pentagon(cat, cfg.tol_alg));
        add("unitarity", check_unitarity(cat, cfg.tol_alg));
        add("vacuum", check_vacuum_triviality(cat, cfg.tol_alg));
        add("frobenius_schur", check_frobenius_schur(cat, cfg.tol_alg));
    }
    r.doc = {{"category", cat.name}, {"rank", cat.rank()}, {"checks", checks}};
    return r;
}

Report category_show(const CommandOptions& o, const RunConfig&) {
    const FusionCategory cat = load_source(o.source, false);
    Report r;
    json fusion = json::array();
    for (int a = 0; a < cat.rank(); ++a)
        for (int b = 0; b < cat.rank(); ++b)
            for (int c = 0; c < cat.rank(); ++c)
                if (cat.N(a, b, c)) fusion.push_back({cat.labels[a], cat.labels[b], cat.labels[c], cat.N(a, b, c)});
    r.doc = {{"category", cat.name}, {"rank", cat.rank()},   {"labels", cat.labels}, {"qdim", cat.qdim},
             {"D", cat.total_dim},   {"kappa", cat.kappa},   {"dual", cat.dual},     {"fusion", fusion},
             {"multiplicity_free", cat.multiplicity_free()}};
    r.csv = "label,qdim,kappa,dual\n";
    for (int a = 0; a < cat.rank(); ++a)
        r.csv += cat.labels[a] + "," + fmt(cat.qdim[a]) + "," + std::to_string(cat.kappa[a]) + "," +
                 cat.labels[cat.dual[a]] + "\n";
    r.csv += "D," + fmt(cat.total_dim) + ",,\n";
    return r;
}

Report category_convert(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(o.source, false);
    if (cfg.out.empty()) throw IoError("convert needs --out");
    Report r;
    r.doc = category_to_json(cat);
    r.csv = r.doc.dump(2) + "\n";
    return r;
}

Report ground_state_command(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    GroundSpaceOptions opt;
    opt.seed = cfg.seed;
    const GroundSpace g = ground_space(model, opt);
    std::error_code ec;
    std::filesystem::create_directories(o.state_dir, ec);
    if (ec) throw IoError("cannot create " + o.state_dir);
    Report r;
    json files = json::array();
    double worst = 0.0;
    r.csv = "index,energy,residual,file\n";
    for (int i = 0; i < g.dimension(); ++i) {
        const std::string name = "gs_" + cat.name + "_" + cfg.topology + "_" + std::to_string(cfg.lx) + "x" +
                                 std::to_string(cfg.ly) + "_" + std::to_string(i) + ".snstate";
        const std::string path = (std::filesystem::path(o.state_dir) / name).string();
        write_state_file(path, model.basis, g.vectors.col(i));
        files.push_back(path);
        worst = std::max(worst, g.residuals[static_cast<std::size_t>(i)]);
        r.csv += std::to_string(i) + "," + fmt(g.energies[static_cast<std::size_t>(i)]) + "," +
                 fmt(g.residuals[static_cast<std::size_t>(i)]) + "," + path + "\n";
    }
    r.pass = worst < cfg.tol_alg;
    r.doc = {{"basis_dimension", model.dim()}, {"degeneracy", g.dimension()}, {"energies", g.energies},
             {"residuals", g.residuals},       {"files", files},              {"plaquettes", lat.num_plaquettes()}};
    return r;
}

Report check_ops(const CommandOptions&, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    Report r;
    json per = json::array();
    r.csv = "plaquette,product,adjoint,projector,hermitian\n";
    for (int p = 0; p < lat.num_plaquettes(); ++p) {
        if (lat.plaquettes[p].degenerate) throw StructuralError("plaquette " + std::to_string(p) + " wraps onto itself");
        const AlgebraReport a = verify_plaquette_algebra(model, p);
        json j = a.to_json();
        j["plaquette"] = p;
        per.push_back(j);
        r.csv += std::to_string(p) + "," + fmt(a.product_residual) + "," + fmt(a.adjoint_residual) + "," +
                 fmt(a.projector_residual) + "," + fmt(a.hermitian_residual) + "\n";
        r.pass = r.pass && a.ok(cfg.tol_alg);
    }
    const double comm = max_commutator(model);
    r.pass = r.pass && comm < cfg.tol_alg;
    r.csv += "commutator," + fmt(comm) + ",,,\n";
    r.doc = {{"plaquettes", per}, {"max_commutator", comm}, {"basis_dimension", model.dim()}};
    return r;
}

Report check_ltqo_command(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    const int p = o.plaquette >= 0 ? o.plaquette : lat.plaquette_at(cfg.lx / 2, cfg.ly / 2);
    if (p < 0 || p >= lat.num_plaquettes()) throw StructuralError("plaquette out of range");
    const LtqoReport rep = check_ltqo(model, region_from_plaquettes(lat, {p}), o.ell, o.samples, cfg.seed);
    Report r;
    r.doc = rep.to_json();
    r.doc["plaquette"] = p;
    r.pass = rep.max_residual < cfg.tol_alg;
    r.csv = "sample,c,residual\n";
    for (std::size_t i = 0; i < rep.residuals.size(); ++i)
        r.csv += std::to_string(i) + "," + fmt(rep.c[i]) + "," + fmt(rep.residuals[i]) + "\n";
    return r;
}

Report check_axioms(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    const AxiomWidths widths{o.width_c, o.width_b};
    std::vector<AxiomKind> kinds;
    for (AxiomKind k : {AxiomKind::A0Bulk, AxiomKind::A1Bulk, AxiomKind::A0Boundary, AxiomKind::A1Boundary})
        if (!all_placements(lat, k, widths).empty()) kinds.push_back(k);
    if (kinds.empty()) throw StructuralError("no axiom placement fits on this lattice");
    json info;
    const StateVector psi = ground_state(model, cfg, o, info);
    const AxiomReport rep = verify_axioms(model, psi, kinds, widths, cfg.tol_ent);
    Report r;
    r.doc = rep.to_json();
    r.doc["state"] = info;
    r.csv = rep.to_csv();
    r.pass = rep.passed();
    return r;
}

Report check_tee(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    json info;
    const StateVector psi = ground_state(model, cfg, o, info);
    const AreaLawFit fit = area_law_fit(model, psi, o.sizes, o.anchor);
    const double expected = 2.0 * std::log(cat.total_dim);
    Report r;
    r.doc = fit.to_json();
    r.doc["expected_gamma"] = expected;
    r.doc["state"] = info;
    r.pass = fit.residual < cfg.tol_ent && std::abs(fit.gamma - expected) < cfg.tol_ent;
    r.csv = "size,boundary,entropy\n";
    for (std::size_t i = 0; i < fit.sizes.size(); ++i)
        r.csv += std::to_string(fit.sizes[i]) + "," + std::to_string(fit.boundary[i]) + "," + fmt(fit.entropies[i]) +
                 "\n";
    r.csv += "alpha," + fmt(fit.alpha) + ",\ngamma," + fmt(fit.gamma) + ",\nresidual," + fmt(fit.residual) + ",\n";
    return r;
}

Region convex_region(const HoneycombLattice& lat, const CommandOptions& o, SectorOptions& opt) {
    if (o.region == "disk") {
        const int p = o.plaquette >= 0 ? o.plaquette : lat.plaquette_at(lat.Lx / 2, lat.Ly / 2);
        if (p < 0 || p >= lat.num_plaquettes()) throw StructuralError("plaquette out of range");
        return region_from_plaquettes(lat, {p});
    }
    if (o.region == "annulus") return make_region(lat, row_cycle(lat, o.row));
    if (o.region == "half-annulus") {
        if (lat.topology != Topology::Open) throw StructuralError("a half-annulus needs an open patch");
        const int hole = o.plaquette >= 0 ? o.plaquette : lat.plaquette_at(lat.Lx / 2, 0);
        if (hole < 0 || hole >= lat.num_plaquettes()) throw StructuralError("plaquette out of range");
        std::vector<int> around;
        for (int v : lat.plaquettes[hole].vertices)
            for (int q : lat.plaquettes_of_vertex(v))
                if (q != hole && std::find(around.begin(), around.end(), q) == around.end()) around.push_back(q);
        std::sort(around.begin(), around.end());
        opt.holes = {hole};
        return region_from_plaquettes(lat, around);
    }
    throw ValidationError("region must be disk, annulus or half-annulus");
}

Report check_convex(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    SectorOptions opt;
    opt.thickening = o.thickening;
    opt.seed = cfg.seed;
    opt.check_convergence = o.check_convergence;
    const Region region = convex_region(lat, o, opt);
    const SectorDecomposition d = information_convex_sectors(model, region, opt);
    Report r;
    r.doc = d.to_json();
    r.doc["region"] = o.region;
    r.doc["vertices"] = region.vertices;
    r.csv = d.to_csv();
    if (d.vacuum >= 0) {
        const std::vector<double> diffs = sector_entropy_differences(d);
        r.doc["entropy_differences"] = diffs;
    }
    r.pass = d.vacuum >= 0 && d.converged && d.orthogonality_residual < cfg.tol_alg;
    return r;
}

Report check_merge(const CommandOptions& o, const RunConfig& cfg) {
    const FusionCategory cat = load_source(cfg.category, false);
    const HoneycombLattice lat = make_lattice(cfg);
    const StringNetModel model(cat, lat, cfg.basis_cap);
    json info;
    const StateVector psi = ground_state(model, cfg, o, info);
    MergeDemo demo;
    if (o.kind == "markov") {
        demo = markov_strip_merge(model, psi, o.anchor, cfg.tol_alg);
    } else if (o.kind == "annulus") {
        SectorOptions opt;
        opt.seed = cfg.seed;
        demo = annulus_closure_merge(model, psi, row_cycle(lat, o.row), opt, cfg.tol_alg);
    } else {
        throw ValidationError("merge kind must be markov or annulus");
    }
    Report r;
    r.doc = demo.to_json();
    r.doc["state"] = info;
    r.pass = demo.pass;
    r.csv = "quantity,value\ndistance," + fmt(demo.distance) + "\ncmi_rho," + fmt(demo.merge.cmi_rho) +
            "\ncmi_lambda," + fmt(demo.merge.cmi_lambda) + "\nmarginal_abc," + fmt(demo.merge.marginal_abc) +
            "\nmarginal_bcd," + fmt(demo.merge.marginal_bcd) + "\n";
    for (std::size_t i = 0; i < demo.weights.size(); ++i) r.csv += "weight" + std::to_string(i) + "," + fmt(demo.weights[i]) + "\n";
    return r;
}

void emit(const RunConfig& cfg, const std::string& command, const Report& rep, std::ostream& out) {
    std::string text;
    if (cfg.format == "csv") {
        text = rep.csv;
    } else {
        json doc = rep.doc;
        doc["command"] = command;
        doc["config"] = cfg.to_json();
        doc["pass"] = rep.pass;
        text = doc.dump(2) + "\n";
    }
    if (cfg.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + cfg.out);
    f << text;
    if (!f) throw IoError("write failed: " + cfg.out);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const CapExceededError*>(&e)) return kExitCap;
    if (dynamic_cast<const std::bad_alloc*>(&e)) return kExitCap;
    return kExitCheckFailed;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CommandOptions o;
    CLI::App app{"Levin-Wen string-net laboratory", "snlab"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--category", cfg.category, "builtin:NAME, a builtin name, or a category file");
    app.add_option("--lx", cfg.lx, "cells along a1");
    app.add_option("--ly", cfg.ly, "cells along a2");
    app.add_option("--topology", cfg.topology, "torus or open")->check(CLI::IsMember({"torus", "open"}));
    app.add_option("--tol-alg", cfg.tol_alg, "algebraic tolerance");
    app.add_option("--tol-ent", cfg.tol_ent, "entropic tolerance");
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--out", cfg.out, "report path (stdout when absent)");
    app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--threads", cfg.threads, "threads handed to Eigen");
    app.add_option("--basis-cap", cfg.basis_cap, "largest basis to enumerate");

    std::string command;
    std::function<Report(const CommandOptions&, const RunConfig&)> action;
    auto bind = [&](CLI::App* sub, std::string name, Report (*fn)(const CommandOptions&, const RunConfig&)) {
        sub->callback([&command, &action, name, fn]() {
            command = name;
            action = fn;
        });
    };

    CLI::App* cat = app.add_subcommand("category", "validate, show or convert a fusion category");
    cat->require_subcommand(1);
    for (auto [name, fn] : std::vector<std::pair<std::string, Report (*)(const CommandOptions&, const RunConfig&)>>{
             {"validate", category_validate}, {"show", category_show}, {"convert", category_convert}}) {
        CLI::App* sub = cat->add_subcommand(name);
        sub->add_option("source", o.source, "builtin:NAME or a category file")->required();
        bind(sub, "category " + name, fn);
    }

    CLI::App* gs = app.add_subcommand("gs", "ground space of the string-net Hamiltonian");
    gs->add_option("--state-dir", o.state_dir, "directory for the ground-state files");
    bind(gs, "gs", ground_state_command);

    CLI::App* check = app.add_subcommand("check", "verification reports");
    check->require_subcommand(1);
    CLI::App* ops = check->add_subcommand("ops", "plaquette algebra and commutation");
    bind(ops, "check ops", check_ops);
    CLI::App* ltqo = check->add_subcommand("ltqo", "local topological order residuals");
    ltqo->add_option("--plaquette", o.plaquette, "observable plaquette (central by default)");
    ltqo->add_option("--ell", o.ell, "buffer layers");
    ltqo->add_option("--samples", o.samples, "random observables");
    bind(ltqo, "check ltqo", check_ltqo_command);
    CLI::App* ax = check->add_subcommand("axioms", "A0 and A1 on every placement");
    ax->add_option("--width-c", o.width_c, "C is the vertex ball of this radius plus one");
    ax->add_option("--width-b", o.width_b, "plaquette layers around C");
    bind(ax, "check axioms", check_axioms);
    CLI::App* tee = check->add_subcommand("tee", "area-law fit and topological entanglement entropy");
    tee->add_option("--sizes", o.sizes, "disk sizes in vertices")->delimiter(',');
    tee->add_option("--anchor", o.anchor, "first vertex of every disk");
    bind(tee, "check tee", check_tee);
    CLI::App* cx = check->add_subcommand("convex", "information convex sectors");
    cx->add_option("--region", o.region, "disk, annulus or half-annulus")
        ->check(CLI::IsMember({"disk", "annulus", "half-annulus"}));
    cx->add_option("--plaquette", o.plaquette, "disk plaquette or half-annulus hole");
    cx->add_option("--row", o.row, "row of the annulus loop");
    cx->add_option("--thickening", o.thickening, "plaquette layers added around the region");
    cx->add_flag("--check-convergence", o.check_convergence, "repeat at thickening + 1");
    bind(cx, "check convex", check_convex);
    CLI::App* mg = check->add_subcommand("merge-demo", "Petz merges of ground-state marginals");
    mg->add_option("--kind", o.kind, "markov or annulus")->check(CLI::IsMember({"markov", "annulus"}));
    mg->add_option("--anchor", o.anchor, "first vertex of the Markov strip");
    mg->add_option("--row", o.row, "row of the annulus loop");
    bind(mg, "check merge-demo", check_merge);
    for (CLI::App* sub : {ax, tee, mg}) sub->add_option("--state", o.state, "ground-state file from gs");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitIo;
    }

    if (command.rfind("category ", 0) == 0) cfg.category = o.source;
    try {
        cfg.validate();
        Eigen::setNbThreads(cfg.threads);
        const Report rep = action(o, cfg);
        emit(cfg, command, rep, out);
        return rep.pass ? kExitPass : kExitCheckFailed;
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        err << command << ": " << e.what() << "\n";
        Report partial;
        partial.pass = false;
        partial.doc = {{"error", e.what()}, {"exit_code", code}};
        partial.csv = "error,exit_code\n\"" + std::string(e.what()) + "\"," + std::to_string(code) + "\n";
        try {
            emit(cfg, command, partial, out);
        } catch (const std::exception&) {
        }
        return code;
    }
}

} // namespace snlab
