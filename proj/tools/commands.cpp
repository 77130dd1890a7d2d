#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "oid/allocate.hpp"
#include "oid/format.hpp"
#include "oid/kron.hpp"
#include "oid/measures.hpp"
#include "oid/simulate.hpp"
#include "oid/spectral.hpp"

namespace oid {

namespace {

using json = nlohmann::ordered_json;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<double> omega;
    std::optional<double> lo;
    std::optional<double> ro;
    std::string out_path;
    std::string format;
};

PowerNetwork load(const std::string& path, const Globals& g) {
    auto net = load_network_file(path);
    if (g.omega) net = net.with_frequency(*g.omega);
    if (g.ro) net = net.with_output_resistance(*g.ro);
    if (g.lo) net = net.with_output_inductance(*g.lo);
    return net;
}

std::string pick_format(const Globals& g, std::initializer_list<std::string_view> allowed) {
    if (g.format.empty()) return std::string(*allowed.begin());
    for (auto a : allowed)
        if (a == g.format) return g.format;
    throw InputError("--format " + g.format + " is not available for this command");
}

std::string_view to_string(DynamicsMode m) { return m == DynamicsMode::Uniform ? "uniform" : "nonuniform"; }

json to_json(const Vector& v) {
    json a = json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

json to_json(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
    return a;
}

json ids_json(const GridModel& g) {
    json a = json::array();
    for (auto id : g.node_ids) a.push_back(id);
    return a;
}

std::vector<std::size_t> parse_sources(const std::string& spec, const PowerNetwork& net) {
    std::vector<std::size_t> idx;
    if (spec == "all") {
        for (std::size_t i = 0; i < net.node_count(); ++i) idx.push_back(i);
        return idx;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int id = 0;
        auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
        if (ec != std::errc{} || p != item.data() + item.size())
            throw ValidationError("sources", "'" + item + "' is not a node id");
        if (!net.has_node(id)) throw ValidationError("sources", "unknown node id " + item);
        idx.push_back(net.index_of(id));
    }
    if (idx.empty()) throw ValidationError("sources", "empty source set");
    return idx;
}

// Model the measures act on: the Kron reduction onto the sources when the
// network has load nodes, the full network otherwise.
GridModel measure_model(const PowerNetwork& net) {
    return net.load_indices().empty() ? grid_model(net) : reduce_to_sources(net);
}

json report_json(const GridModel& g, const MeasureReport& r, bool reduced) {
    json j;
    j["nodes"] = ids_json(g);
    j["reduced"] = reduced;
    j["mode"] = to_string(r.mode);
    j["regime"] = to_string(r.regime);
    j["psi_nir"] = r.psi_nir;
    j["psi_nrr"] = r.psi_nrr;
    j["theta_nir"] = r.theta_nir;
    j["lambda2"] = r.lambda2;
    j["lambda_max"] = r.lambda_max;
    j["lambda_used"] = r.lambda_used;
    j["mu"] = r.mu;
    j["mu_defined"] = r.mu_defined;
    j["assumption1"] = r.assumption1_ok;
    return j;
}

struct Emitter {
    std::ostream& out;
    std::string path;
    std::ostringstream buf;
    void flush() {
        if (path.empty()) {
            out << buf.str();
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw InputError(path + ": cannot open for writing");
        f << buf.str();
    }
};

void emit_json(Emitter& e, const json& j) { e.buf << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- commands

void cmd_analyze(const std::string& path, const Globals& gl, Emitter& e) {
    const auto fmt = pick_format(gl, {"json", "csv"});
    const auto net = load(path, gl);
    const auto g = measure_model(net);
    const auto j = report_json(g, analyze(g), !net.load_indices().empty());
    if (fmt == "json") return emit_json(e, j);
    e.buf << "key,value\n";
    for (auto& [k, v] : j.items()) {
        if (k == "nodes") continue;
        e.buf << k << ',';
        if (v.is_number_float())
            e.buf << format_double(v.get<double>());
        else if (v.is_string())
            e.buf << v.get<std::string>();
        else
            e.buf << v.dump();
        e.buf << '\n';
    }
}

void write_angle_csv(Emitter& e, const std::vector<BranchRecord>& rows) {
    e.buf << "i,j,class,R_branch,X_branch,theta_rad,nonphysical\n";
    for (const auto& b : rows) {
        e.buf << b.i << ',' << b.j << ',' << to_string(b.cls) << ',';
        if (b.cls == BranchClass::Absent)
            e.buf << "nan,nan,nan,0\n";
        else
            e.buf << format_double(b.impedance.real()) << ',' << format_double(b.impedance.imag()) << ','
                  << format_double(b.theta) << ',' << (b.nonphysical ? 1 : 0) << '\n';
    }
}

void cmd_kron(const std::string& path, const std::string& sources, bool phasor, const Globals& gl, Emitter& e,
              std::ostream& err) {
    const auto net = load(path, gl);
    std::vector<std::size_t> keep = sources.empty() ? net.source_indices() : parse_sources(sources, net);
    if (keep.empty()) throw ValidationError("sources", "network has no source nodes; pass --sources");

    if (phasor) {
        const auto fmt = pick_format(gl, {"csv", "json"});
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        const auto red = phasor_reduce(net, keep);
        const auto rows = line_angles(red, net);
        if (fmt == "csv") return write_angle_csv(e, rows);
        json a = json::array();
        for (const auto& b : rows) {
            json r;
            r["i"] = b.i;
            r["j"] = b.j;
            r["class"] = to_string(b.cls);
            if (b.cls != BranchClass::Absent) {
                r["R_branch"] = b.impedance.real();
                r["X_branch"] = b.impedance.imag();
                r["theta_rad"] = b.theta;
            }
            r["nonphysical"] = b.nonphysical;
            a.push_back(r);
        }
        return emit_json(e, json{{"omega", red.omega}, {"branches", a}});
    }

    pick_format(gl, {"json"});
    const auto red = kron_reduce_real(build_laplacian(net).matrix, keep);
    if (!red.warning.empty()) err << "warning: " << red.warning << '\n';
    json j;
    json kept = json::array(), gone = json::array();
    for (auto i : red.kept) kept.push_back(net.nodes()[i].id);
    for (auto i : red.eliminated) gone.push_back(net.nodes()[i].id);
    j["kept"] = kept;
    j["eliminated"] = gone;
    j["identity"] = red.identity;
    j["lambda2"] = red.matrix.rows() > 1 ? eigenvalues_symmetric(red.matrix)(1) : 0.0;
    j["laplacian"] = to_json(red.matrix);
    emit_json(e, j);
}

// Uniform doubles in [-1, 1) from the raw engine output, identical on every platform.
Vector random_balanced(std::mt19937_64& rng, Eigen::Index n) {
    Vector v(n);
    for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    v.array() -= v.mean();
    return v / v.norm();
}

struct SimulateOptions {
    bool worst_case = false;
    std::size_t points = 400;
    double horizon = 8.0;
    std::uint64_t seed = 1;
    std::string trajectory;
};

void cmd_simulate(const std::string& path, const SimulateOptions& o, const Globals& gl, Emitter& e) {
    pick_format(gl, {"json"});
    const auto net = load(path, gl);
    const auto g = measure_model(net);
    const auto report = analyze(g);
    const auto dyn = assemble_dynamics(g);
    const auto times = default_time_grid(report.psi_nir, o.points, o.horizon);

    Vector i0;
    if (o.worst_case) {
        i0 = worst_case_initial(dyn);
    } else {
        std::mt19937_64 rng(o.seed);
        i0 = random_balanced(rng, static_cast<Eigen::Index>(g.size()));
    }
    const auto traj = homogeneous_solution(dyn, i0, times);
    const auto verdict = verify_envelopes(traj, report);
    const auto rates = fit_decay_rates(traj);

    if (!o.trajectory.empty()) {
        std::ofstream f(o.trajectory, std::ios::binary);
        if (!f) throw InputError(o.trajectory + ": cannot open for writing");
        write_trajectory_csv(f, traj, g.node_ids);
    }

    json j;
    j["nodes"] = ids_json(g);
    j["initial"] = o.worst_case ? "worst-case" : "random";
    if (!o.worst_case) j["seed"] = o.seed;
    j["points"] = o.points;
    j["t_end"] = times.back();
    j["projected"] = traj.projected;
    j["psi_nir"] = report.psi_nir;
    j["psi_nrr"] = report.psi_nrr;
    j["mu"] = report.mu;
    j["mu_defined"] = report.mu_defined;
    j["lower_envelope_ok"] = verdict.lower_ok;
    j["upper_envelope_ok"] = verdict.upper_ok;
    j["min_lower_slack"] = verdict.min_lower_slack;
    j["min_upper_slack"] = verdict.min_upper_slack;
    j["fitted_fastest_rate"] = rates.fastest;
    j["fitted_slowest_rate"] = rates.slowest;
    j["bound_fastest_rate"] = 1.0 / report.psi_nir;
    j["truncated"] = rates.truncated;
    emit_json(e, j);
}

struct OptimizeOptions {
    std::optional<double> budget;
    std::optional<double> target_theta;
    std::optional<double> theta_increase;
    std::vector<double> lower;
    SolverOptions solver;
};

json diagnostics_json(const AllocationResult& r) {
    json d;
    d["starts"] = r.starts;
    d["iterations"] = r.iterations;
    d["median_lambda2"] = r.median_lambda2;
    d["best_minus_median"] = r.gap;
    return d;
}

void cmd_optimize(const std::string& path, const OptimizeOptions& o, const Globals& gl, Emitter& e) {
    pick_format(gl, {"json"});
    const int modes = (o.budget ? 1 : 0) + (o.target_theta ? 1 : 0) + (o.theta_increase ? 1 : 0);
    if (modes != 1) throw InputError("give exactly one of --budget, --target-theta, --theta-increase");
    const auto net = load(path, gl);
    const auto g = measure_model(net);

    json j;
    j["nodes"] = ids_json(g);
    if (o.budget) {
        AllocationProblem p{g.laplacian, *o.budget, {}, o.solver};
        if (!o.lower.empty()) p.lower_bounds = Eigen::Map<const Vector>(o.lower.data(), static_cast<Eigen::Index>(o.lower.size()));
        const auto res = optimize_allocation(p);
        GridModel with = g;
        with.l_out = res.allocation;
        const auto rep = analyze(with);
        j["budget"] = *o.budget;
        j["allocation"] = to_json(res.allocation);
        j["lambda2"] = res.lambda2;
        j["psi_nir"] = rep.psi_nir;
        j["theta_nir"] = rep.theta_nir;
        j["diagnostics"] = diagnostics_json(res);
        return emit_json(e, j);
    }

    const double base = analyze(g).theta_nir;
    const double target = o.target_theta ? *o.target_theta : base * (1.0 + *o.theta_increase);
    j["base_theta_nir"] = base;
    j["target_theta_nir"] = target;

    const double lo = design_uniform(g, target);
    GridModel uni = g;
    uni.l_out = Vector::Constant(static_cast<Eigen::Index>(g.size()), lo);
    json u;
    u["l_o"] = lo;
    u["total"] = lo * static_cast<double>(g.size());
    u["theta_nir"] = analyze(uni).theta_nir;
    j["uniform"] = u;

    const auto nd = design_nonuniform(g, target, o.solver);
    json n;
    n["allocation"] = to_json(nd.result.allocation);
    n["total"] = nd.budget;
    n["lambda2"] = nd.result.lambda2;
    n["psi_nir"] = nd.psi_nir;
    n["theta_nir"] = nd.theta_nir;
    n["diagnostics"] = diagnostics_json(nd.result);
    j["nonuniform"] = n;
    emit_json(e, j);
}

void cmd_landscape(const std::string& path, double budget, std::size_t resolution, const Globals& gl, Emitter& e) {
    pick_format(gl, {"csv"});
    const auto net = load(path, gl);
    const auto g = measure_model(net);
    const auto land = allocation_landscape({g.laplacian, budget, {}, {}}, resolution);
    for (auto id : g.node_ids) e.buf << "b_" << id << ',';
    e.buf << "lambda2\n";
    for (std::size_t k = 0; k < land.lambda2.size(); ++k) {
        for (auto b : land.barycentric[k]) e.buf << format_double(b) << ',';
        e.buf << format_double(land.lambda2[k]) << '\n';
    }
}

void cmd_sweep(const std::string& path, double from, double to, std::size_t steps, const Globals& gl, Emitter& e) {
    pick_format(gl, {"csv"});
    if (!(from > 0 && to > from)) throw InputError("sweep needs 0 < --from < --to");
    if (steps < 2) throw InputError("sweep needs --steps >= 2");
    const auto net = load(path, gl);
    for (std::size_t k = 0; k < steps; ++k) {
        const double lo = from * std::pow(to / from, static_cast<double>(k) / static_cast<double>(steps - 1));
        const auto swept = net.with_output_inductance(lo);
        const auto rows = line_angles(phasor_reduce(swept), swept);
        if (k == 0) {
            e.buf << "l_o,theta_nir";
            for (const auto& b : rows) e.buf << ",theta_" << b.i << '_' << b.j;
            e.buf << '\n';
        }
        e.buf << format_double(lo) << ',' << format_double(analyze(measure_model(swept)).theta_nir);
        for (const auto& b : rows) e.buf << ',' << (b.cls == BranchClass::Absent ? "nan" : format_double(b.theta));
        e.buf << '\n';
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Output impedance diffusion in lossy RL power networks", "oid"};
    app.require_subcommand(1);
    Globals gl;
    app.add_option("--omega", gl.omega, "override the network frequency (rad/s)");
    app.add_option("--lo", gl.lo, "override every output inductance (H)");
    app.add_option("--ro", gl.ro, "override every output resistance (ohm)");
    app.add_option("--out", gl.out_path, "write the result to this file instead of stdout");
    app.add_option("--format", gl.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    std::string path;
    auto with_input = [&](CLI::App* sub) {
        sub->add_option("network", path, "network JSON file")->required();
        sub->fallthrough();
        return sub;
    };

    auto* analyze_cmd = with_input(app.add_subcommand("analyze", "inductivity / resistivity report"));

    std::string sources;
    bool phasor = false;
    auto* kron_cmd = with_input(app.add_subcommand("kron", "Kron reduction onto a node set"));
    kron_cmd->add_option("--sources", sources, "comma-separated node ids or 'all' (default: source nodes)");
    kron_cmd->add_flag("--phasor", phasor, "phasor-domain reduction and branch angle table");

    SimulateOptions sim;
    auto* sim_cmd = with_input(app.add_subcommand("simulate", "time-domain envelope check"));
    sim_cmd->add_flag("--worst-case", sim.worst_case, "start on the fastest-decaying mode");
    sim_cmd->add_option("--points", sim.points, "time samples")->check(CLI::Range(4, 1000000));
    sim_cmd->add_option("--horizon", sim.horizon, "end time in multiples of psi_nir")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "seed for the random initial condition");
    sim_cmd->add_option("--trajectory", sim.trajectory, "write the trajectory CSV here");

    OptimizeOptions opt;
    auto* opt_cmd = with_input(app.add_subcommand("optimize", "output inductor allocation"));
    opt_cmd->add_option("--budget", opt.budget, "total inductance (H) to maximize lambda2 with");
    opt_cmd->add_option("--target-theta", opt.target_theta, "design for this theta_nir (rad)");
    opt_cmd->add_option("--theta-increase", opt.theta_increase, "design for theta_nir * (1 + value)");
    opt_cmd->add_option("--lower", opt.lower, "per-node lower bounds (H)")->delimiter(',');
    opt_cmd->add_option("--starts", opt.solver.quasi_random_starts, "quasi-random starts");
    opt_cmd->add_option("--tolerance", opt.solver.tolerance, "relative improvement tolerance");
    opt_cmd->add_option("--max-iterations", opt.solver.max_iterations, "iterations per start");

    double land_budget = 0;
    std::size_t resolution = 20;
    auto* land_cmd = with_input(app.add_subcommand("landscape", "lambda2 on a barycentric grid of the budget simplex"));
    land_cmd->add_option("--budget", land_budget, "total inductance (H)")->required();
    land_cmd->add_option("--resolution", resolution, "divisions per axis")->check(CLI::PositiveNumber);

    double from = 0.5e-3, to = 50e-3;
    std::size_t steps = 21;
    auto* sweep_cmd = with_input(app.add_subcommand("sweep", "branch angles over a log-spaced output inductance range"));
    sweep_cmd->add_option("--from", from, "first l_o (H)");
    sweep_cmd->add_option("--to", to, "last l_o (H)");
    sweep_cmd->add_option("--steps", steps, "number of l_o values");

    std::vector<std::string> argv_store{"oid"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ExitOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitInput;
    }

    Emitter e{out, gl.out_path, {}};
    try {
        if (*analyze_cmd)
            cmd_analyze(path, gl, e);
        else if (*kron_cmd)
            cmd_kron(path, sources, phasor, gl, e, err);
        else if (*sim_cmd)
            cmd_simulate(path, sim, gl, e);
        else if (*opt_cmd)
            cmd_optimize(path, opt, gl, e);
        else if (*land_cmd)
            cmd_landscape(path, land_budget, resolution, gl, e);
        else if (*sweep_cmd)
            cmd_sweep(path, from, to, steps, gl, e);
        e.flush();
    } catch (const NumericalError& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitNumerical;
    } catch (const ValidationError& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitInput;
    } catch (const ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitInput;
    } catch (const InputError& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitInput;
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitInput;
    } catch (const std::out_of_range& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitInput;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return ExitNumerical;
    }
    return ExitOk;
}

}  // namespace oid
