#include "cfslab/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <omp.h>

#include "cfslab/causal.hpp"
#include "cfslab/clifford.hpp"
#include "cfslab/dirac_sea.hpp"
#include "cfslab/matrix_json.hpp"
#include "cfslab/minimizer.hpp"
#include "cfslab/spectral.hpp"
#include "cfslab/trace_dynamics.hpp"

namespace cfslab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"classify", "action",   "minimize", "spectral",
                                                "tracedyn", "clifford", "sea"};
    return names;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

fs::path resolve_out_dir(const RunOptions& opts) {
    if (opts.out_dir) return *opts.out_dir;
    if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
    return "cfslab-out";
}

namespace {

class Run {
public:
    Run(const RunOptions& opts, std::string config_text, std::uint64_t seed)
        : opts_(opts), hash_(fmt::format("fnv1a:{:016x}", fnv1a(config_text))), seed_(seed),
          out_(resolve_out_dir(opts)) {
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec || !fs::is_directory(out_)) {
            throw ConfigError("output directory '" + out_.string() + "' cannot be created");
        }
    }

    std::uint64_t seed() const { return seed_; }
    const RunOptions& options() const { return opts_; }

    json header() const {
        return {{"command", opts_.command}, {"config_hash", hash_}, {"seed", seed_}, {"version", kVersion}};
    }

    void write_json(const std::string& name, json body) {
        json doc = {{"header", header()}};
        for (auto& [k, v] : body.items()) doc[k] = v;
        write_text(name, doc.dump(2) + "\n");
    }

    // Header comment, column line, then rows.
    void write_csv(const std::string& name, const std::vector<std::string>& columns,
                   const std::vector<std::vector<std::string>>& rows) {
        std::string text = fmt::format("# command={} config_hash={} seed={} version={}\n", opts_.command,
                                       hash_, seed_, kVersion);
        text += fmt::format("{}\n", fmt::join(columns, ","));
        for (const auto& r : rows) text += fmt::format("{}\n", fmt::join(r, ","));
        write_text(name, text);
    }

    void write_manifest(double wall_seconds) {
        json m = {{"command", opts_.command},
                  {"config_path", opts_.config_path.string()},
                  {"output_dir", out_.string()},
                  {"seed", seed_},
                  {"threads", opts_.threads},
                  {"config_hash", hash_},
                  {"version", kVersion},
                  {"outputs", files_},
                  {"wall_time_seconds", wall_seconds}};
        m["tolerance"] = opts_.tol ? json(*opts_.tol) : json(nullptr);
        std::ofstream f(out_ / "manifest.json");
        f << m.dump(2) << "\n";
        if (!f) throw ConfigError("cannot write manifest.json");
    }

private:
    void write_text(const std::string& name, const std::string& text) {
        std::ofstream f(out_ / name, std::ios::binary);
        f << text;
        if (!f) throw ConfigError("cannot write " + (out_ / name).string());
        files_.push_back(name);
    }

    RunOptions opts_;
    std::string hash_;
    std::uint64_t seed_;
    fs::path out_;
    std::vector<std::string> files_;
};

std::string num(double v) { return fmt::format("{}", v); }

std::vector<std::string> class_labels(const std::vector<CausalClass>& row) {
    std::vector<std::string> out;
    for (CausalClass c : row) out.emplace_back(1, short_label(c));
    return out;
}

void cmd_classify(Run& run, const json& cfg) {
    const DiscreteMeasure rho = measure_from_json(cfg);
    const double tol = run.options().tol.value_or(kClassifyTol);
    const ActionReport rep = action_report(rho, tol);
    std::vector<std::string> cols{"point"};
    for (std::size_t j = 0; j < rho.size(); ++j) cols.push_back(std::to_string(j));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        std::vector<std::string> r{std::to_string(i)};
        for (const auto& l : class_labels(rep.classes[i])) r.push_back(l);
        rows.push_back(std::move(r));
    }
    run.write_csv("classes.csv", cols, rows);

    // Lattice heat map when the measure came out of `sea`.
    if (cfg.contains("sites")) {
        const auto& sites = cfg["sites"];
        if (!sites.is_array() || sites.empty()) throw ConfigError("sites must be a non-empty array");
        const std::size_t ref = sites[0].at("point").get<std::size_t>();
        std::vector<std::vector<std::string>> heat;
        for (const auto& s : sites) {
            const std::size_t p = s.at("point").get<std::size_t>();
            if (p >= rho.size()) throw ConfigError("sites: point index out of range");
            heat.push_back({num(s.at("t").get<double>()), num(s.at("x").get<double>()),
                            std::string(to_string(rep.classes[ref][p])),
                            num(lagrangian(rho.points()[ref], rho.points()[p]))});
        }
        run.write_csv("heatmap.csv", {"t", "x", "class", "lagrangian"}, heat);
    }
}

void cmd_action(Run& run, const json& cfg) {
    const DiscreteMeasure rho = measure_from_json(cfg);
    const ActionReport rep = action_report(rho, run.options().tol.value_or(kClassifyTol));
    run.write_csv("action.csv", {"quantity", "value"},
                  {{"action", num(rep.action)},
                   {"volume", num(rep.constraints.volume)},
                   {"trace_integral", num(rep.constraints.trace_integral)},
                   {"boundedness", num(rep.constraints.boundedness)},
                   {"diagonal_action", num(rep.diagonal_action)}});
    json classes = json::array();
    for (const auto& row : rep.classes) classes.push_back(class_labels(row));
    run.write_json("action.json", {{"action", rep.action},
                                   {"volume", rep.constraints.volume},
                                   {"trace_integral", rep.constraints.trace_integral},
                                   {"boundedness", rep.constraints.boundedness},
                                   {"diagonal_action", rep.diagonal_action},
                                   {"classes", classes}});
}

void cmd_minimize(Run& run, const json& cfg) {
    MinimizeProblem problem = problem_from_json(cfg);
    problem.seed = run.seed();
    if (run.options().tol) problem.schedule.tolerance = *run.options().tol;
    const MinimizeResult res = minimize(problem);
    run.write_json("result.json", result_to_json(res));
    std::vector<std::vector<std::string>> rows;
    for (const auto& h : res.history) {
        rows.push_back({std::to_string(h.iteration), num(h.action), num(h.residuals.volume),
                        num(h.residuals.trace), num(h.residuals.boundedness), num(h.trace_spread)});
    }
    run.write_csv("history.csv",
                  {"iteration", "action", "vol_residual", "trace_residual", "bound_residual", "trace_spread"},
                  rows);
}

std::vector<double> spectrum_from(const json& cfg, std::optional<FiniteSpectralTriple>& triple) {
    if (cfg.contains("triple")) {
        triple = triple_from_json(cfg["triple"]);
        const auto ev = eig_selfadjoint(Operator::selfadjoint(triple->dirac()));
        return {ev.values.data(), ev.values.data() + ev.values.size()};
    }
    if (cfg.contains("eigenvalues")) {
        if (!cfg["eigenvalues"].is_array()) throw ConfigError("eigenvalues must be an array");
        return cfg["eigenvalues"].get<std::vector<double>>();
    }
    if (cfg.contains("dirac")) {
        const auto ev = eig_selfadjoint(Operator::selfadjoint(matrix_from_json(cfg["dirac"])));
        return {ev.values.data(), ev.values.data() + ev.values.size()};
    }
    if (cfg.contains("circle")) {
        const auto& c = cfg["circle"];
        return circle_dirac_spectrum(c.at("radius").get<double>(), c.at("j_max").get<int>());
    }
    throw ConfigError("spectral config needs one of \"triple\", \"eigenvalues\", \"dirac\", \"circle\"");
}

void cmd_spectral(Run& run, const json& cfg) {
    std::optional<FiniteSpectralTriple> triple;
    const std::vector<double> eigs = spectrum_from(cfg, triple);
    const json cj = cfg.value("cutoff", json::object());
    const CutoffFunction f =
        CutoffFunction::parse(cj.value("kind", std::string("hard_step")), cj.value("width", 0.0));
    const json sj = cfg.value("sweep", json::object());
    const auto sweep = spectral_sweep(eigs, sj.value("lo", 0.1), sj.value("hi", 10.0), sj.value("samples", 100), f);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : sweep) rows.push_back({num(r.cutoff), num(r.action)});
    run.write_csv("sweep.csv", {"lambda", "action"}, rows);

    if (const int jmax = cfg.value("moments", 0); jmax > 0) {
        std::vector<std::vector<std::string>> mrows;
        for (const auto& m : cutoff_moments(f, jmax)) {
            mrows.push_back({std::to_string(m.j), num(m.value), num(m.error_estimate)});
        }
        run.write_csv("moments.csv", {"j", "value", "error_estimate"}, mrows);
    }
    if (triple) {
        const GradingReport g = verify_grading_lemma(*triple);
        run.write_json("grading.json", {{"label", triple->algebra_label()},
                                        {"spectrum", std::vector<double>(g.spectrum.begin(), g.spectrum.end())},
                                        {"grading_defect", g.grading_defect},
                                        {"anticommutator_defect", g.anticommutator_defect},
                                        {"symmetry_defect", g.symmetry_defect},
                                        {"trace", g.trace},
                                        {"positive", g.signature.positives},
                                        {"negative", g.signature.negatives},
                                        {"invertible", g.invertible},
                                        {"holds", g.holds}});
    }
}

void cmd_tracedyn(Run& run, const json& cfg) {
    const TraceRunConfig rc = trace_config_from_json(cfg);
    const int stride = cfg.value("output_stride", 1);
    if (stride < 1) throw ConfigError("output_stride must be positive");
    const Trajectory tr = integrate(rc.spec, rc.initial, rc.dt, rc.steps, rc.method);
    const ConservedCharges& c0 = tr.charges.front();
    double h_drift = 0.0, am_drift = 0.0;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto& c = tr.charges[i];
        h_drift = std::max(h_drift, std::abs(c.trace_hamiltonian - c0.trace_hamiltonian));
        am_drift = std::max(am_drift, (c.adler_millard - c0.adler_millard).norm());
        if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != tr.states.size()) continue;
        const MatrixPhaseState ps = to_phase(rc.spec, tr.states[i]);
        rows.push_back({num(tr.states[i].tau), num(ps.pairs[0].q.norm()), num(ps.pairs[0].p.norm()),
                        num(ps.pairs[1].q.norm()), num(ps.pairs[1].p.norm()), num(c.trace_hamiltonian),
                        num(c.adler_millard.norm())});
    }
    run.write_csv("trajectory.csv",
                  {"tau", "q1_norm", "p1_norm", "q2_norm", "p2_norm", "trace_hamiltonian", "am_charge_norm"},
                  rows);
    run.write_json("summary.json", {{"kind", std::string(to_string(rc.spec.kind))},
                                    {"method", std::string(to_string(rc.method))},
                                    {"dt", rc.dt},
                                    {"steps", rc.steps},
                                    {"final_tau", tr.states.back().tau},
                                    {"trace_hamiltonian_initial", c0.trace_hamiltonian},
                                    {"trace_hamiltonian_drift", h_drift},
                                    {"am_charge_norm_initial", c0.adler_millard.norm()},
                                    {"am_charge_drift", am_drift}});
}

void cmd_clifford(Run& run, const json& cfg) {
    std::vector<std::pair<int, int>> sigs{{1, 3}, {3, 1}, {3, 3}};
    if (cfg.contains("signatures")) sigs = cfg["signatures"].get<std::vector<std::pair<int, int>>>();
    const int samples = cfg.value("samples", 1000);
    if (samples < 1) throw ConfigError("samples must be positive");
    Rng rng(run.seed());
    json checks = json::array();
    for (auto [p, q] : sigs) {
        const CliffordRep rep = build_rep(p, q);
        json c = to_json(dirac_square_sweep(rep, samples, rng));
        c["anticommutator_defect"] = anticommutator_defect(rep);
        checks.push_back(c);
    }
    const CliffordRep rep6 = build_rep(3, 3);
    const SplitReport split = split_d6(rep6);
    auto subset_json = [](const SubsetReport& s) {
        return json{{"labels", s.labels},         {"positives", s.positives}, {"negatives", s.negatives},
                    {"max_defect", s.defect},     {"valid", s.valid}};
    };
    run.write_json("clifford.json", {{"checks", checks},
                                     {"split", {{"d4", subset_json(split.d4)},
                                                {"d4_prime", subset_json(split.d4_prime)},
                                                {"shared", split.shared}}}});

    std::vector<std::vector<double>> vectors{{1, 0, 0, 0, 0, 0}, {0, 0, 0, 1, 0, 0}, {1, 2, 3, 1, 1, 1}};
    if (cfg.contains("vectors")) vectors = cfg["vectors"].get<std::vector<std::vector<double>>>();
    const CliffordRep flip = flipped(rep6);
    std::vector<std::vector<std::string>> rows;
    for (const auto& v : vectors) {
        std::vector<std::string> r;
        for (double c : v) r.push_back(num(c));
        r.push_back(num(square_modulus(rep6, v)));
        r.push_back(num(square_modulus_closed_form(v)));
        r.push_back(num(square_modulus(flip, v)));
        rows.push_back(std::move(r));
    }
    run.write_csv("square_modulus.csv",
                  {"t1", "t2", "t3", "x1", "x2", "x3", "matrix", "closed_form", "flipped"}, rows);
}

void cmd_sea(Run& run, const json& cfg) {
    const DiracSeaConfig config = sea_config_from_json(cfg);
    const DiracSea sea = build_sea(config);
    const CorrelationMapOutput out = pushforward_measure(config, sea);
    json mj = measure_to_json(out.measure);
    json sites = json::array();
    std::vector<std::vector<std::string>> rows;
    double tmin = out.spectra.front().trace, tmax = tmin;
    for (const auto& s : out.spectra) {
        const std::size_t idx = static_cast<std::size_t>(s.point.s) * static_cast<std::size_t>(config.lattice.nx) +
                                static_cast<std::size_t>(s.point.l);
        sites.push_back({{"t", s.t}, {"x", s.x}, {"point", out.point_index[idx]}});
        rows.push_back({num(s.t), num(s.x), num(s.trace), num(s.eig1), num(s.eig2)});
        tmin = std::min(tmin, s.trace);
        tmax = std::max(tmax, s.trace);
    }
    mj["sites"] = sites;
    run.write_json("measure.json", mj);
    run.write_csv("spectra.csv", {"t", "x", "trace", "eig1", "eig2"}, rows);

    std::vector<std::vector<std::string>> crows;
    for (const auto& r : causal_sanity(config, sea, run.options().tol.value_or(kClassifyTol))) {
        crows.push_back({std::to_string(r.b.s), std::to_string(r.b.l), num(r.delta_t), num(r.delta_x),
                         std::string(to_string(r.causal_class)), num(r.lagrangian)});
    }
    run.write_csv("causal.csv", {"s", "l", "delta_t", "delta_x", "class", "lagrangian"}, crows);
    run.write_json("summary.json", {{"lattice_points", config.num_lattice_points()},
                                    {"support_points", out.measure.size()},
                                    {"hilbert_dim", config.hilbert_dim()},
                                    {"trace_min", tmin},
                                    {"trace_max", tmax}});
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot open config '" + p.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::uint64_t config_seed(const json& cfg) {
    if (cfg.is_object() && cfg.contains("seed")) {
        if (!cfg["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
        return cfg["seed"].get<std::uint64_t>();
    }
    return 1;
}

}  // namespace

int run(const RunOptions& opts, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    try {
        if (opts.threads < 0) throw ConfigError("--threads must be non-negative");
        if (opts.threads > 0) omp_set_num_threads(opts.threads);
        if (opts.tol && !(*opts.tol > 0.0)) throw ConfigError("--tol must be positive");
        const std::string text = read_file(opts.config_path);
        const json cfg = parse_json_text(text, opts.config_path.string());
        Run r(opts, text, opts.seed.value_or(config_seed(cfg)));
        const std::string& c = opts.command;
        if (c == "classify") {
            cmd_classify(r, cfg);
        } else if (c == "action") {
            cmd_action(r, cfg);
        } else if (c == "minimize") {
            cmd_minimize(r, cfg);
        } else if (c == "spectral") {
            cmd_spectral(r, cfg);
        } else if (c == "tracedyn") {
            cmd_tracedyn(r, cfg);
        } else if (c == "clifford") {
            cmd_clifford(r, cfg);
        } else if (c == "sea") {
            cmd_sea(r, cfg);
        } else {
            throw ConfigError("unknown command '" + c + "'");
        }
        r.write_manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        return ok;
    } catch (const InstabilityError& e) {
        err << "error: " << e.what() << " (step " << e.step() << ", tau " << e.tau() << ")\n";
        return numerical_error;
    } catch (const NumericalFailure& e) {
        err << "error: " << e.what() << " (residual " << e.residual() << ")\n";
        return numerical_error;
    } catch (const DivergentIntegral& e) {
        err << "error: " << e.what() << "\n";
        return numerical_error;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const InfeasibleProblem& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const ContractViolation& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return failure;
    }
}

}  // namespace cfslab::cli
