#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "CLI11.hpp"
#include "betafit/analysis.hpp"
#include "betafit/errors.hpp"
#include "betafit/parallel.hpp"
#include "betafit/selection.hpp"
#include "betafit/simulate.hpp"
#include "betafit/tuning.hpp"
#include "fit_io.hpp"

namespace betafit::cli {

namespace {

// Not converged within the iteration budget; carries the exit code only.
struct NotConverged : Error {
    using Error::Error;
};

void with_output(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
    if (path == "-") {
        body(out);
        out.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open " + path + " for writing");
    body(file);
    file.close();
    if (!file) throw Error("failed writing " + path);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return in;
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BETAFIT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return hardware_threads();
}

struct InputArgs {
    std::string path;
    bool degree_file = false;
    std::size_t num_nodes = 0;
    std::string relation;

    void attach(CLI::App* app, bool required = true) {
        auto* opt = app->add_option("input", path, "Edge list (\"u v\" per line) or degree file; '-' for stdin");
        if (required) opt->required();
        app->add_flag("--degrees", degree_file, "Input is a degree file (\"degree\" or \"label degree\" per line)");
        app->add_option("--num-nodes", num_nodes, "Declare n, adding trailing isolated nodes to an edge list");
        app->add_option("--relation", relation, "Read \"u relation v\" triples, keeping this relation");
    }

    GraphInput load(std::ostream& err) const {
        InputOptions o;
        o.degree_file = degree_file;
        if (num_nodes > 0) o.num_nodes = num_nodes;
        o.relation = relation;
        return load_graph(path, o, err);
    }
};

struct SolverArgs {
    std::string method = "newton";
    double tol = 1e-8;
    int max_iters = 1000;
    std::vector<double> bounds;

    void attach(CLI::App* app, bool with_bounds = true) {
        app->add_option("--method", method, "newton or gradient")->check(CLI::IsMember({"newton", "gradient"}));
        app->add_option("--tol", tol, "Stopping tolerance on max_k |G_k| / n_k");
        app->add_option("--max-iters", max_iters, "Iteration budget");
        if (with_bounds)
            app->add_option("--bounds", bounds, "Box lo,hi on every class parameter")->delimiter(',')->expected(2);
    }

    FitConfig config() const {
        FitConfig cfg;
        cfg.method = method == "gradient" ? FitMethod::gradient : FitMethod::newton;
        cfg.tol_grad = tol;
        cfg.max_iters = max_iters;
        if (bounds.size() == 2) cfg.bounds = Bounds{bounds[0], bounds[1]};
        cfg.validate();
        return cfg;
    }
};

FitResult fit_checked(const DegreeHistogram& hist, double lambda, const FitConfig& cfg) {
    FitResult r = fit(hist, Penalty(lambda), cfg);
    if (!r.converged)
        throw NotConverged("fit did not converge in " + std::to_string(r.iterations) +
                           " iterations (scaled gradient " + format_double(r.final_grad_inf_norm) + ")");
    return r;
}

void write_edges(std::ostream& out, const EdgeList& g, const std::string& comment) {
    out << "# " << comment << '\n';
    std::string buf;
    for (const auto& e : g.edges) {
        buf += std::to_string(e.u);
        buf += ' ';
        buf += std::to_string(e.v);
        buf += '\n';
        if (buf.size() > (1 << 16)) {
            out << buf;
            buf.clear();
        }
    }
    out << buf;
}

std::vector<double> read_beta_file(const std::string& path) {
    auto in = open_input(path);
    std::vector<double> beta;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str() + b, &end);
        while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
        if (end == line.c_str() + b || (end && *end != '\0')) throw ParseError("not a number", line_no);
        beta.push_back(v);
    }
    return beta;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fits the l2-penalized beta-model to large sparse networks", "betafit"};
    app.set_version_flag("--version", std::string("betafit ") + kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads_flag = 0;
    app.add_option("--threads", threads_flag, "Worker threads (default: $BETAFIT_THREADS, else all cores)");

    std::function<int()> action;

    // fit ------------------------------------------------------------------
    InputArgs fit_in;
    SolverArgs fit_solver;
    double fit_lambda = 0.1;
    std::string fit_out = "-";
    bool classes_only = false, force_nodes = false;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the penalized beta-model");
    fit_in.attach(fit_cmd);
    fit_solver.attach(fit_cmd);
    fit_cmd->add_option("--lambda", fit_lambda, "Penalty strength (>= 0)");
    fit_cmd->add_option("--out", fit_out, "Output JSON path, '-' for stdout");
    auto* co = fit_cmd->add_flag("--classes-only", classes_only, "Omit the per-node block");
    fit_cmd->add_flag("--nodes", force_nodes, "Always write the per-node block")->excludes(co);
    fit_cmd->callback([&] {
        action = [&] {
            const Penalty pen(fit_lambda);
            const FitConfig cfg = fit_solver.config();
            const GraphInput g = fit_in.load(err);
            const DegreeHistogram hist = build_histogram(g.degrees);
            FitResult r = fit(hist, pen, cfg);
            const NodeBlock nodes = classes_only ? NodeBlock::never : force_nodes ? NodeBlock::always : NodeBlock::automatic;
            with_output(fit_out, out, [&](std::ostream& os) { write_fit_json(os, r, hist, g.degrees, nodes); });
            if (!r.converged)
                throw NotConverged("fit did not converge in " + std::to_string(r.iterations) + " iterations");
            return 0;
        };
    });

    // tune -----------------------------------------------------------------
    InputArgs tune_in;
    SolverArgs tune_solver;
    std::vector<double> tune_grid;
    std::string tune_mode = "warm";
    std::string tune_out;
    auto* tune_cmd = app.add_subcommand("tune", "Choose lambda by the AIC-type criterion; prints best lambda");
    tune_in.attach(tune_cmd);
    tune_solver.attach(tune_cmd, false);
    tune_cmd->add_option("--grid", tune_grid, "Comma-separated lambda grid (default: 0 and e^{j/2}-1, j=1..12)")
        ->delimiter(',');
    tune_cmd->add_option("--mode", tune_mode, "warm (sequential, warm starts) or cold (parallel)")
        ->check(CLI::IsMember({"warm", "cold"}));
    tune_cmd->add_option("--out", tune_out, "CSV path for the per-lambda table")->required();
    tune_cmd->callback([&] {
        action = [&] {
            if (tune_out == "-") throw InputError("tune --out needs a file path; stdout carries best lambda");
            TuneGrid grid = tune_grid.empty() ? TuneGrid::default_grid() : TuneGrid{tune_grid};
            grid.validate();
            const FitConfig cfg = tune_solver.config();
            const GraphInput g = tune_in.load(err);
            const DegreeHistogram hist = build_histogram(g.degrees);
            const TuneResult res = tune(hist, grid, cfg, tune_mode == "cold" ? TuneMode::cold : TuneMode::warm,
                                        resolve_threads(threads_flag));
            with_output(tune_out, out, [&](std::ostream& os) { write_tune_csv(os, res); });
            for (const auto& row : res.rows)
                if (!row.converged) err << "warning: lambda " << format_double(row.lambda) << ": " << row.failure << '\n';
            out << format_double(res.best_lambda) << '\n';
            return 0;
        };
    });

    // select ---------------------------------------------------------------
    InputArgs sel_in;
    SolverArgs sel_solver;
    std::string sel_fit;
    double sel_lambda = 0.0;
    SelectionConfig sel_cfg;
    std::string sel_center = "half", sel_form = "theory", sel_qhat = "dmax", sel_out = "-";
    auto* sel_cmd = app.add_subcommand("select", "Estimate the active set by post-fit thresholding");
    sel_in.attach(sel_cmd);
    sel_solver.attach(sel_cmd, false);
    sel_cmd->add_option("--fit", sel_fit, "Fit JSON; when absent the graph is fit at --lambda");
    sel_cmd->add_option("--lambda", sel_lambda, "Penalty for the inline fit");
    sel_cmd->add_option("--zeta0", sel_cfg.zeta0, "Share of nodes in the middle degree band");
    sel_cmd->add_option("--scale", sel_cfg.threshold_scale, "Threshold multiplier C");
    sel_cmd->add_option("--center", sel_center, "half or full logit of the band density")
        ->check(CLI::IsMember({"half", "full"}));
    sel_cmd->add_option("--threshold-form", sel_form, "theory or literal")->check(CLI::IsMember({"theory", "literal"}));
    sel_cmd->add_option("--qhat", sel_qhat, "dmax or exact")->check(CLI::IsMember({"dmax", "exact"}));
    sel_cmd->add_option("--out", sel_out, "Output JSON path, '-' for stdout");
    sel_cmd->callback([&] {
        action = [&] {
            sel_cfg.center_mode = sel_center == "full" ? CenterMode::full_logit : CenterMode::half_logit;
            sel_cfg.threshold_form = sel_form == "literal" ? ThresholdForm::literal : ThresholdForm::theory;
            sel_cfg.qhat_mode = sel_qhat == "exact" ? QhatMode::exact_from_fit : QhatMode::dmax;
            sel_cfg.validate();
            const Penalty pen(sel_lambda);
            const GraphInput g = sel_in.load(err);
            if (!g.edges) throw SelectionError("selection needs the adjacency structure; pass an edge list, not degrees");
            FitResult f;
            if (sel_fit.empty()) {
                f = fit_checked(build_histogram(g.degrees), pen.lambda, sel_solver.config());
            } else {
                auto in = open_input(sel_fit);
                const StoredFit stored = read_fit_json(in);
                f.beta_hat = align_fit(stored, g.degrees);
                f.lambda = stored.lambda;
                f.converged = stored.converged;
            }
            const SelectionResult s = select(f, *g.edges, sel_cfg);
            with_output(sel_out, out, [&](std::ostream& os) {
                JsonWriter w(os);
                w.begin_object();
                w.key("center").value(s.center);
                w.key("threshold").value(s.threshold);
                w.key("a_bar").value(s.a_bar);
                w.key("b_hat").value(s.b_hat);
                w.key("q_hat_inv").value(s.q_hat_inv);
                w.key("selected").begin_array();
                for (auto j : s.active_set) w.value(g.edges->label(j));
                w.end_array();
                w.end_object();
            });
            return 0;
        };
    });

    // simulate -------------------------------------------------------------
    std::string sim_setting, sim_beta_file, sim_out = "-";
    SimScenario sim;
    sim.seed = 1;
    auto* sim_cmd = app.add_subcommand("simulate", "Sample a network from a scenario; writes \"u v\" lines");
    sim_cmd->add_option("--setting", sim_setting, "i..vi, simu2-1, simu2-2, aic-dense, aic-sparse, gof");
    sim_cmd->add_option("--beta-file", sim_beta_file, "Explicit beta, one value per line");
    sim_cmd->add_option("--n", sim.n, "Node count");
    sim_cmd->add_option("--seed", sim.seed, "RNG seed");
    sim_cmd->add_option("--b", sim.b, "Low-block coefficient of the gof setting");
    sim_cmd->add_option("--out", sim_out, "Output path, '-' for stdout");
    sim_cmd->callback([&] {
        action = [&] {
            if (sim_setting.empty() == sim_beta_file.empty())
                throw InputError("give exactly one of --setting and --beta-file");
            if (!sim_beta_file.empty()) {
                sim.setting = Setting::explicit_beta;
                sim.beta = read_beta_file(sim_beta_file);
                sim.n = sim.beta.size();
            } else {
                sim.setting = parse_setting(sim_setting);
                if (sim.setting == Setting::explicit_beta) throw InputError("use --beta-file for explicit beta");
            }
            const EdgeList g = sample_network(sim);
            with_output(sim_out, out, [&](std::ostream& os) {
                write_edges(os, g,
                            "n=" + std::to_string(g.n) + " setting=" + setting_name(sim.setting) +
                                " seed=" + std::to_string(sim.seed));
            });
            return 0;
        };
    });

    // mc -------------------------------------------------------------------
    std::string mc_scenario, mc_setting, mc_csv, mc_out = "-";
    SolverArgs mc_solver;
    ScenarioFile mc_inline;
    mc_inline.scenario.seed = 1;
    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo study: repeated sample-and-fit");
    mc_cmd->add_option("--scenario", mc_scenario, "Scenario file (key=value lines)");
    mc_cmd->add_option("--setting", mc_setting, "Named setting when no scenario file is given");
    mc_cmd->add_option("--n", mc_inline.scenario.n, "Node count");
    mc_cmd->add_option("--seed", mc_inline.scenario.seed, "Base seed; replicate r uses seed xor r");
    mc_cmd->add_option("--b", mc_inline.scenario.b, "Low-block coefficient of the gof setting");
    mc_cmd->add_option("--lambda", mc_inline.lambdas, "Comma-separated penalties")->delimiter(',');
    mc_cmd->add_option("--replicates", mc_inline.replicates, "Replicates per lambda");
    mc_cmd->add_option("--track", mc_inline.track, "Comma-separated coordinates to record")->delimiter(',');
    mc_cmd->add_option("--csv", mc_csv, "Per-replicate CSV path");
    mc_cmd->add_option("--out", mc_out, "Aggregate JSON path, '-' for stdout");
    mc_solver.attach(mc_cmd, false);
    mc_cmd->callback([&] {
        action = [&] {
            ScenarioFile sf;
            if (!mc_scenario.empty()) {
                auto in = open_input(mc_scenario);
                sf = parse_scenario_file(in);
            } else {
                if (mc_setting.empty()) throw InputError("give --scenario or --setting");
                sf = mc_inline;
                sf.scenario.setting = parse_setting(mc_setting);
                if (sf.lambdas.empty()) {
                    auto lam = recommended_lambda(sf.scenario.setting, sf.scenario.n);
                    if (!lam) throw InputError("--lambda is required for this setting");
                    sf.lambdas = {*lam};
                }
            }
            const FitConfig cfg = mc_solver.config();
            McOptions opts;
            opts.track = sf.track;
            opts.threads = resolve_threads(threads_flag);
            if (opts.track.empty() && sf.scenario.n >= 2) opts.track = {0, sf.scenario.n - 2, sf.scenario.n - 1};
            std::vector<McReport> reports;
            for (double lam : sf.lambdas) reports.push_back(run_mc(sf.scenario, Penalty(lam), sf.replicates, cfg, opts));
            if (!mc_csv.empty()) {
                with_output(mc_csv, out, [&](std::ostream& os) {
                    for (std::size_t i = 0; i < reports.size(); ++i) write_mc_csv(os, reports[i], opts.track, i == 0);
                });
            }
            with_output(mc_out, out, [&](std::ostream& os) {
                JsonWriter w(os);
                w.begin_object();
                w.key("generator").value(kGeneratorName);
                w.key("n").value(sf.scenario.n);
                w.key("setting").value(setting_name(sf.scenario.setting));
                w.key("seed").value(static_cast<std::int64_t>(sf.scenario.seed));
                w.key("replicates").value(sf.replicates);
                w.key("runs").begin_array();
                for (const auto& rep : reports) {
                    const auto& a = rep.aggregate;
                    w.begin_object();
                    w.key("lambda").value(rep.lambda);
                    w.key("successes").value(a.successes);
                    w.key("failures").value(a.failures);
                    w.key("mean_l1").value(a.mean_l1);
                    w.key("mean_l2").value(a.mean_l2);
                    w.key("mean_linf").value(a.mean_linf);
                    w.key("mean_rel_l2").value(a.mean_rel_l2);
                    w.key("mean_seconds").value(a.mean_seconds);
                    w.key("mean_iterations").value(a.mean_iterations);
                    w.key("coordinates").begin_array();
                    for (const auto& c : a.coords) {
                        w.begin_object();
                        w.key("index").value(c.index);
                        w.key("truth").value(c.truth);
                        w.key("mean").value(c.mean);
                        w.key("variance").value(c.variance);
                        w.key("skewness").value(c.skewness);
                        w.key("excess_kurtosis").value(c.excess_kurtosis);
                        w.key("coverage95").value(c.coverage95);
                        w.end_object();
                    }
                    w.end_array();
                    w.key("correlation").begin_array();
                    for (const auto& row : a.correlation) {
                        w.begin_array();
                        for (double v : row) w.value(v);
                        w.end_array();
                    }
                    w.end_array();
                    w.key("warnings").begin_array();
                    for (const auto& msg : rep.warnings) w.value(msg);
                    w.end_array();
                    w.end_object();
                }
                w.end_array();
                w.end_object();
            });
            for (const auto& rep : reports)
                for (const auto& msg : rep.warnings) err << "warning: lambda " << format_double(rep.lambda) << ": " << msg << '\n';
            return 0;
        };
    });

    // wabs -----------------------------------------------------------------
    std::string wabs_fit, wabs_topics, wabs_out = "-";
    InputArgs wabs_in;
    auto* wabs_cmd = app.add_subcommand("wabs", "Score topics by exp(beta_hat)-weighted relevance");
    wabs_cmd->add_option("--fit", wabs_fit, "Fit JSON")->required();
    wabs_cmd->add_option("--topics", wabs_topics, "CSV rows topic,node_label,score")->required();
    wabs_in.attach(wabs_cmd, false);
    wabs_cmd->add_option("--out", wabs_out, "Output CSV path, '-' for stdout");
    wabs_cmd->callback([&] {
        action = [&] {
            auto fin = open_input(wabs_fit);
            const StoredFit stored = read_fit_json(fin);
            DegreeSequence d;
            if (!wabs_in.path.empty()) {
                d = wabs_in.load(err).degrees;
            } else {
                if (stored.labels.empty())
                    throw InputError("fit has no node block; pass the graph as input to map labels to classes");
                d.degrees = stored.node_degrees;
                d.labels = stored.labels;
            }
            const auto beta = align_fit(stored, d);
            auto tin = open_input(wabs_topics);
            const auto topics = read_topics(tin);
            const WabsResult res = wabs(topics, beta, label_index(d));
            if (res.unresolved) err << "warning: " << res.unresolved << " topic entries name unknown nodes\n";
            with_output(wabs_out, out, [&](std::ostream& os) { write_wabs_csv(os, res); });
            return 0;
        };
    });

    // gof ------------------------------------------------------------------
    GofMcConfig gof_cfg;
    InputArgs gof_in;
    std::string gof_fit, gof_out = "-";
    SolverArgs gof_solver;
    auto* gof_cmd = app.add_subcommand("gof", "Largest-singular-value residual statistic T = n^{2/3}(sigma1 - 2)");
    gof_in.attach(gof_cmd, false);
    gof_cmd->add_option("--fit", gof_fit, "Fit JSON for a single graph; otherwise fit at --lambda");
    gof_cmd->add_option("--n", gof_cfg.n, "Monte Carlo node count");
    gof_cmd->add_option("--b", gof_cfg.b, "Low-block coefficient");
    gof_cmd->add_option("--lambda", gof_cfg.lambda, "Penalty used in each fit");
    gof_cmd->add_option("--replicates", gof_cfg.replicates, "Monte Carlo replicates");
    gof_cmd->add_option("--seed", gof_cfg.seed, "Base seed");
    gof_cmd->add_option("--out", gof_out, "Output CSV path, '-' for stdout");
    gof_solver.attach(gof_cmd, false);
    gof_cmd->callback([&] {
        action = [&] {
            const Penalty pen(gof_cfg.lambda);
            gof_cfg.fit = gof_solver.config();
            std::vector<GofRecord> records;
            if (!gof_in.path.empty()) {
                const GraphInput g = gof_in.load(err);
                if (!g.edges) throw InputError("gof needs an edge list");
                std::vector<double> beta;
                if (gof_fit.empty()) {
                    beta = fit_checked(build_histogram(g.degrees), pen.lambda, gof_cfg.fit).beta_hat;
                } else {
                    auto in = open_input(gof_fit);
                    beta = align_fit(read_fit_json(in), g.degrees);
                }
                const GofStatistic s = gof_statistic(*g.edges, beta, gof_cfg.power);
                records.push_back({0, true, {}, s.sigma1, s.t_stat});
            } else {
                gof_cfg.threads = resolve_threads(threads_flag);
                records = run_gof_mc(gof_cfg);
                std::size_t failed = 0;
                for (const auto& r : records) failed += r.ok ? 0 : 1;
                if (failed) err << "warning: " << failed << " replicate(s) failed\n";
            }
            with_output(gof_out, out, [&](std::ostream& os) { write_gof_csv(os, records); });
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Exit::ok : Exit::bad_input;
    }

    try {
        return action ? action() : Exit::bad_input;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::bad_input;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::bad_input;
    } catch (const DegenerateGraphError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::degenerate;
    } catch (const DivergedError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::not_converged;
    } catch (const NotConverged& e) {
        err << "error: " << e.what() << '\n';
        return Exit::not_converged;
    } catch (const SelectionError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::selection_failed;
    } catch (const MonteCarloError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::monte_carlo_failed;
    } catch (const NormalizationError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::normalization_failed;
    } catch (const TuneError& e) {
        err << "error: " << e.what() << '\n';
        for (const auto& [lam, why] : e.failures()) err << "  lambda " << format_double(lam) << ": " << why << '\n';
        return Exit::tune_failed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Exit::io_error;
    }
}

}  // namespace betafit::cli
