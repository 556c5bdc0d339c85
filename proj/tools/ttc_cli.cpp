// ttc: generate, solve, sweep and summarize synthetic TT completion instances.
//
// Exit status: 0 success, 1 usage / configuration / I/O error, 2 numerical abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ttc/harness.hpp"
#include "ttc/io.hpp"

namespace fs = std::filesystem;
using namespace ttc;

namespace {

struct SolveFile {
    InstanceSpec spec;
    SolverConfig solver;
    Algorithm algorithm = Algorithm::rttc_si;
};

// {"instance": {...}, "solver": {...}, "algorithm": "rttc-si"}
SolveFile read_solve_file(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object() || !j.contains("instance")) throw FormatError("config: " + path + " needs an \"instance\" object");
    SolveFile f;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "instance") f.spec = parse_instance_spec(it.value());
        else if (it.key() == "solver") f.solver = parse_solver_config(it.value());
        else if (it.key() == "algorithm") f.algorithm = parse_algorithm(it.value().get<std::string>());
        else if (it.key() == "description") continue;
        else throw FormatError("config: unknown key '" + it.key() + "'");
    }
    return f;
}

json spec_json(const InstanceSpec& s) {
    return {{"d", s.d}, {"N", s.N}, {"M", s.M}, {"r", s.r}, {"l", s.l}, {"omega", s.omega}, {"seed", s.seed}};
}

int cmd_gen(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
    SolveFile f = read_solve_file(config);
    if (seed) f.spec.seed = *seed;
    const Instance inst = generate_instance(f.spec);
    fs::create_directories(out);
    const fs::path dir(out);
    io::save_tt((dir / "target.tt").string(), inst.target);
    io::save_tt((dir / "init.tt").string(), inst.problem.initial);
    io::save_side_info((dir / "side.tsi").string(), *inst.problem.side);
    io::save_samples((dir / "train.tsm").string(), inst.problem.train);
    io::save_samples((dir / "test.tsm").string(), inst.problem.test);
    std::ofstream meta(dir / "instance.json");
    meta << spec_json(f.spec).dump(2) << '\n';
    if (!meta) throw Error("gen: cannot write " + (dir / "instance.json").string());
    return 0;
}

int cmd_solve(const std::string& config, const std::string& instance_dir, std::optional<std::uint64_t> seed,
              const std::string& algorithm, const std::string& report_path) {
    SolveFile f;
    CompletionProblem problem;
    if (!config.empty()) {
        f = read_solve_file(config);
        if (seed) f.spec.seed = *seed;
    }
    if (!algorithm.empty()) f.algorithm = parse_algorithm(algorithm);

    const auto start = std::chrono::steady_clock::now();
    if (!instance_dir.empty()) {
        const fs::path dir(instance_dir);
        f.spec = parse_instance_spec(read_json_file((dir / "instance.json").string()));
        problem.initial = io::load_tt((dir / "init.tt").string());
        problem.side = io::load_side_info((dir / "side.tsi").string());
        problem.train = io::load_samples((dir / "train.tsm").string());
        problem.test = io::load_samples((dir / "test.tsm").string());
        problem.ranks = problem.initial.ranks();
    } else {
        problem = generate_instance(f.spec).problem;
    }
    SolveReport report = solve(for_algorithm(std::move(problem), f.algorithm), f.solver);

    SweepRecord rec;
    rec.spec = f.spec;
    rec.algorithm = f.algorithm;
    rec.converged = report.converged;
    rec.test_rel_err = report.test_rel_err;
    rec.iters = report.iterations;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << csv_header << '\n' << to_csv_row(rec) << '\n';

    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::app);
        out << report_to_json_line(report, f.spec, f.algorithm) << '\n';
        if (!out) throw Error("solve: cannot write " + report_path);
    }
    return 0;
}

int cmd_sweep(const std::string& config, std::string out, int threads, bool resume) {
    SweepConfig c = parse_sweep_config(read_json_file(config));
    if (threads > 0) c.threads = threads;
    if (out.empty()) out = c.output;
    if (out.empty()) throw FormatError("sweep: no output path (use --out or \"output\" in the config)");
    if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
    const SweepStats st = run_sweep(c, out, resume);
    std::cerr << "sweep: " << st.written << " rows written, " << st.skipped << " resumed, " << st.total << " total -> "
              << out << '\n';
    return 0;
}

int cmd_summarize(const std::string& input, const std::string& out) {
    const auto cells = summarize(input);
    if (out.empty()) {
        write_summary(std::cout, cells);
        return 0;
    }
    std::ofstream f(out);
    write_summary(f, cells);
    if (!f) throw Error("summarize: cannot write " + out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Riemannian tensor-train completion with side information"};
    app.require_subcommand(1);

    std::string config, out, algorithm, instance_dir, report, input;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool resume = false;

    auto* gen = app.add_subcommand("gen", "Generate one synthetic instance into a directory");
    gen->add_option("--config", config, "Instance JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--seed", seed, "Override the instance seed");
    gen->add_option("--out", out, "Output directory")->required();

    auto* slv = app.add_subcommand("solve", "Solve one instance and print a CSV row");
    auto* cfg_opt = slv->add_option("--config", config, "Instance JSON")->check(CLI::ExistingFile);
    auto* dir_opt = slv->add_option("--instance", instance_dir, "Directory written by gen")->check(CLI::ExistingDirectory);
    cfg_opt->excludes(dir_opt);
    slv->add_option("--seed", seed, "Override the instance seed")->needs(cfg_opt);
    slv->add_option("--algorithm", algorithm, "rttc or rttc-si")->check(CLI::IsMember({"rttc", "rttc-si"}));
    slv->add_option("--report", report, "Append the solve report as one JSON line");

    auto* swp = app.add_subcommand("sweep", "Run a parameter sweep and write CSV");
    swp->add_option("--config", config, "Sweep JSON")->required()->check(CLI::ExistingFile);
    swp->add_option("--out", out, "Output CSV (default: config \"output\")");
    swp->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    swp->add_flag("--resume", resume, "Keep existing rows and run only missing ones");

    auto* sum = app.add_subcommand("summarize", "Per-cell convergence frequencies of a sweep CSV");
    sum->add_option("input", input, "Sweep CSV")->required()->check(CLI::ExistingFile);
    sum->add_option("--out", out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_gen(config, seed, out);
        if (*slv) {
            if (config.empty() && instance_dir.empty()) {
                std::cerr << "solve: one of --config or --instance is required\n";
                return 1;
            }
            return cmd_solve(config, instance_dir, seed, algorithm, report);
        }
        if (*swp) return cmd_sweep(config, out, threads, resume);
        if (*sum) return cmd_summarize(input, out);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
