#pragma once

// Synthetic phase-transition experiments: instance generation, single runs,
// parameter sweeps written as CSV, and per-cell convergence frequencies.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "random.hpp"
#include "samples.hpp"
#include "side_info.hpp"
#include "solver.hpp"
#include "tt.hpp"

namespace ttc {

using json = nlohmann::json;

/** One synthetic instance: order d, mode size N, TT rank r, subspace size M on the first l modes. */
struct InstanceSpec {
    Index d = 3;
    Index N = 10;
    Index M = 10;
    Index r = 2;
    Index l = 0;
    Index omega = 100;
    std::uint64_t seed = 0;

    Dims dims() const { return Dims(static_cast<std::size_t>(d), N); }
    Ranks ranks() const {
        Ranks rk(static_cast<std::size_t>(d + 1), r);
        rk.front() = rk.back() = 1;
        return rk;
    }

    /** Number of entries, saturated at INT64_MAX. */
    Index total_entries() const {
        Index total = 1;
        for (Index k = 0; k < d; ++k) {
            if (total > INT64_MAX / N) return INT64_MAX;
            total *= N;
        }
        return total;
    }

    void validate() const {
        if (d < 1) throw FormatError("InstanceSpec: d must be >= 1");
        if (N < 1) throw FormatError("InstanceSpec: N must be >= 1");
        if (r < 1) throw FormatError("InstanceSpec: r must be >= 1");
        if (M < 1 || M > N) throw FormatError("InstanceSpec: need 1 <= M <= N");
        if (l < 0 || l > d) throw FormatError("InstanceSpec: need 0 <= l <= d");
        if (omega < 1) throw FormatError("InstanceSpec: omega must be >= 1");
        if (omega > total_entries())
            throw FormatError("InstanceSpec: omega = " + std::to_string(omega) + " exceeds the " +
                              std::to_string(total_entries()) + " entries of the tensor");
    }
};

struct Instance {
    InstanceSpec spec;
    TTTensor target;
    CompletionProblem problem;
};

enum class Algorithm { rttc, rttc_si };

inline const char* to_string(Algorithm a) { return a == Algorithm::rttc ? "rttc" : "rttc-si"; }

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "rttc") return Algorithm::rttc;
    if (s == "rttc-si") return Algorithm::rttc_si;
    throw FormatError("unknown algorithm '" + s + "' (expected rttc or rttc-si)");
}

/**
 * `count` distinct indices drawn uniformly without replacement, in draw
 * order. Sparse case: every mode index drawn with Rng::below, duplicates
 * rejected. Dense case (count > total/4 and total <= 10^7): partial
 * Fisher-Yates over linear positions.
 */
inline std::vector<Index> sample_indices(const Dims& dims, Index count, Rng& rng) {
    detail::check_dims(dims, "sample_indices");
    Index total = 1;
    bool small = true;
    for (Index n : dims) {
        if (total > 10'000'000 / n) {
            small = false;
            break;
        }
        total *= n;
    }
    if (small && count > total) throw DimensionError("sample_indices: more samples than entries");
    const std::size_t d = dims.size();
    std::vector<Index> flat;
    flat.reserve(static_cast<std::size_t>(count) * d);
    if (small && 4 * count > total) {
        std::vector<Index> lin(static_cast<std::size_t>(total));
        for (Index i = 0; i < total; ++i) lin[static_cast<std::size_t>(i)] = i;
        for (Index s = 0; s < count; ++s) {
            const auto j = static_cast<std::size_t>(s) + rng.below(static_cast<std::uint64_t>(total - s));
            std::swap(lin[static_cast<std::size_t>(s)], lin[j]);
            Index rest = lin[static_cast<std::size_t>(s)];
            std::vector<Index> idx(d);
            for (std::size_t k = d; k-- > 0;) {
                idx[k] = rest % dims[k];
                rest /= dims[k];
            }
            flat.insert(flat.end(), idx.begin(), idx.end());
        }
        return flat;
    }
    std::unordered_set<std::string> seen;
    std::vector<Index> idx(d);
    while (static_cast<Index>(seen.size()) < count) {
        for (std::size_t k = 0; k < d; ++k) idx[k] = static_cast<Index>(rng.below(static_cast<std::uint64_t>(dims[k])));
        std::string key(reinterpret_cast<const char*>(idx.data()), d * sizeof(Index));
        if (seen.insert(std::move(key)).second) flat.insert(flat.end(), idx.begin(), idx.end());
    }
    return flat;
}

/** Independent seeds for each random ingredient of an instance. */
namespace stream {
inline constexpr std::uint64_t target = 1, basis = 2, omega = 3, gamma = 4, initial = 5;
}

/**
 * Target A = Q Q^T A~ with A~ a Gaussian rank-r TT, side information with
 * seeded orthonormal M-column bases on modes 0..l-1 and identity elsewhere,
 * Omega uniform without replacement, Gamma drawn independently with the same
 * size (overlap with Omega allowed), X0 = Q Q^T X~0.
 */
inline Instance generate_instance(const InstanceSpec& spec) {
    spec.validate();
    const Dims dims = spec.dims();
    const Ranks ranks = spec.ranks();

    std::vector<Matrix> bases(dims.size());
    std::vector<bool> trivial(dims.size(), true);
    for (Index k = 0; k < spec.l; ++k) {
        bases[static_cast<std::size_t>(k)] =
            orthonormal_basis(spec.N, spec.M, hash_combine(spec.seed, {stream::basis, static_cast<std::uint64_t>(k)}));
        trivial[static_cast<std::size_t>(k)] = false;
    }
    SideInfo side(dims, std::move(bases), std::move(trivial));

    TTTensor target = project_side(side, tt_random(dims, ranks, hash_combine(spec.seed, {stream::target})));
    TTTensor initial = project_side(side, tt_random(dims, ranks, hash_combine(spec.seed, {stream::initial})));

    Rng omega_rng(hash_combine(spec.seed, {stream::omega}));
    Rng gamma_rng(hash_combine(spec.seed, {stream::gamma}));
    SparseSamples train = SparseSamples::of(target, sample_indices(dims, spec.omega, omega_rng));
    SparseSamples test = SparseSamples::of(target, sample_indices(dims, spec.omega, gamma_rng));

    Instance inst{spec, target, CompletionProblem{std::move(train), std::move(test), ranks, std::move(side), initial}};
    return inst;
}

/** Same instance, but the solver ignores the side information (plain RTTC from the same X0). */
inline CompletionProblem for_algorithm(CompletionProblem problem, Algorithm a) {
    if (a == Algorithm::rttc) problem.side.reset();
    return problem;
}

// ---------------------------------------------------------------------------
// CSV records

inline constexpr const char* csv_schema_line = "# ttc-sweep-csv v1";
inline constexpr const char* csv_header = "d,N,M,r,l,omega,trial,seed,algorithm,converged,test_rel_err,iters,seconds";
inline constexpr std::size_t csv_columns = 13;

struct SweepRecord {
    InstanceSpec spec;
    int trial = 0;
    Algorithm algorithm = Algorithm::rttc_si;
    bool converged = false;
    double test_rel_err = 0.0;
    int iters = 0;
    double seconds = 0.0;
};

/** Shortest round-trip representation; identical doubles give identical text. */
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::string to_csv_row(const SweepRecord& rec) {
    const auto& s = rec.spec;
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.6f", rec.seconds);
    std::ostringstream out;
    out << s.d << ',' << s.N << ',' << s.M << ',' << s.r << ',' << s.l << ',' << s.omega << ',' << rec.trial << ','
        << s.seed << ',' << to_string(rec.algorithm) << ',' << (rec.converged ? 1 : 0) << ','
        << format_double(rec.test_rel_err) << ',' << rec.iters << ',' << secs;
    return out.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline SweepRecord parse_csv_row(const std::string& line) {
    auto f = split_csv(line);
    if (f.size() != csv_columns) throw FormatError("csv: expected " + std::to_string(csv_columns) + " columns");
    try {
        SweepRecord rec;
        rec.spec.d = std::stoll(f[0]);
        rec.spec.N = std::stoll(f[1]);
        rec.spec.M = std::stoll(f[2]);
        rec.spec.r = std::stoll(f[3]);
        rec.spec.l = std::stoll(f[4]);
        rec.spec.omega = std::stoll(f[5]);
        rec.trial = std::stoi(f[6]);
        rec.spec.seed = std::stoull(f[7]);
        rec.algorithm = parse_algorithm(f[8]);
        if (f[9] != "0" && f[9] != "1") throw FormatError("csv: converged must be 0 or 1");
        rec.converged = f[9] == "1";
        rec.test_rel_err = std::stod(f[10]);
        rec.iters = std::stoi(f[11]);
        rec.seconds = std::stod(f[12]);
        return rec;
    } catch (const std::logic_error&) {
        throw FormatError("csv: malformed row '" + line + "'");
    }
}

/**
 * Generate, solve, and score one instance. Converged means the held-out
 * relative error of the final iterate is below the solver's test_tol.
 * Numerical breakdown inside the solver is recorded as a non-convergent
 * run with test_rel_err = nan.
 */
inline SweepRecord run_single(const InstanceSpec& spec, const SolverConfig& config, Algorithm algorithm, int trial = 0) {
    const auto start = std::chrono::steady_clock::now();
    Instance inst = generate_instance(spec);
    SweepRecord rec;
    rec.spec = spec;
    rec.trial = trial;
    rec.algorithm = algorithm;
    try {
        SolveReport report = solve(for_algorithm(std::move(inst.problem), algorithm), config);
        rec.converged = report.converged;
        rec.test_rel_err = report.test_rel_err;
        rec.iters = report.iterations;
    } catch (const NumericalError&) {
        rec.converged = false;
        rec.test_rel_err = std::numeric_limits<double>::quiet_NaN();
        rec.iters = -1;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

// ---------------------------------------------------------------------------
// Configuration

namespace detail {

inline void read_solver_field(const json& j, SolverConfig& c) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        if (k == "max_iters") c.max_iters = v.get<int>();
        else if (k == "test_tol") c.test_tol = v.get<double>();
        else if (k == "train_tol") c.train_tol = v.get<double>();
        else if (k == "stagnation_tol") c.stagnation_tol = v.get<double>();
        else if (k == "stagnation_window") c.stagnation_window = v.get<int>();
        else if (k == "conjugate") c.conjugate = v.get<bool>();
        else if (k == "restart_every") c.restart_every = v.get<int>();
        else if (k == "armijo_c") c.armijo_c = v.get<double>();
        else if (k == "max_halvings") c.max_halvings = v.get<int>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else throw FormatError("config: unknown solver option '" + k + "'");
    }
}

inline Index& spec_field(InstanceSpec& s, const std::string& name) {
    if (name == "d") return s.d;
    if (name == "N") return s.N;
    if (name == "M") return s.M;
    if (name == "r") return s.r;
    if (name == "l") return s.l;
    if (name == "omega") return s.omega;
    throw FormatError("config: unknown instance parameter '" + name + "'");
}

inline const std::vector<std::string>& spec_fields() {
    static const std::vector<std::string> names{"d", "N", "M", "r", "l", "omega"};
    return names;
}

} // namespace detail

inline SolverConfig parse_solver_config(const json& j) {
    SolverConfig c;
    if (!j.is_object()) throw FormatError("config: solver section must be an object");
    try {
        detail::read_solver_field(j, c);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

/** Instance parameters; "l": "d" means side information on every mode. */
inline InstanceSpec parse_instance_spec(const json& j) {
    if (!j.is_object()) throw FormatError("config: instance section must be an object");
    InstanceSpec s;
    bool l_all = false;
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() == "seed")
                s.seed = it.value().get<std::uint64_t>();
            else if (it.key() == "l" && it.value().is_string()) {
                if (it.value().get<std::string>() != "d") throw FormatError("config: l must be an integer or \"d\"");
                l_all = true;
            } else
                detail::spec_field(s, it.key()) = it.value().get<Index>();
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    if (l_all) s.l = s.d;
    s.validate();
    return s;
}

struct SweepAxis {
    std::string name;
    std::vector<Index> values;
};

struct SweepConfig {
    std::string name;
    std::vector<SweepAxis> axes;
    std::map<std::string, Index> fixed;
    bool l_all_modes = false; // fixed "l": "d"
    std::vector<Algorithm> algorithms{Algorithm::rttc_si};
    int trials = 5;
    std::uint64_t base_seed = 0;
    SolverConfig solver;
    std::string output;
    int threads = 1;

    /** Every instance parameter combination, first axis outermost. */
    std::vector<InstanceSpec> cells() const {
        std::vector<InstanceSpec> out;
        InstanceSpec base;
        for (const auto& [k, v] : fixed) detail::spec_field(base, k) = v;
        std::vector<std::size_t> pos(axes.size(), 0);
        while (true) {
            InstanceSpec s = base;
            for (std::size_t a = 0; a < axes.size(); ++a) detail::spec_field(s, axes[a].name) = axes[a].values[pos[a]];
            if (l_all_modes) s.l = s.d;
            out.push_back(s);
            std::size_t a = axes.size();
            while (a > 0) {
                --a;
                if (++pos[a] < axes[a].values.size()) break;
                pos[a] = 0;
                if (a == 0) return out;
            }
            if (axes.empty()) return out;
        }
    }

    void validate() const {
        if (trials < 1) throw FormatError("config: trials must be >= 1");
        if (threads < 1) throw FormatError("config: threads must be >= 1");
        if (algorithms.empty()) throw FormatError("config: at least one algorithm required");
        std::set<std::string> given;
        for (const auto& a : axes) {
            if (a.values.empty()) throw FormatError("config: axis '" + a.name + "' has no values");
            if (!given.insert(a.name).second) throw FormatError("config: parameter '" + a.name + "' given twice");
        }
        for (const auto& [k, v] : fixed)
            if (!given.insert(k).second) throw FormatError("config: parameter '" + k + "' given twice");
        if (l_all_modes && !given.insert("l").second) throw FormatError("config: parameter 'l' given twice");
        for (const auto& name : detail::spec_fields())
            if (!given.count(name)) throw FormatError("config: parameter '" + name + "' is missing");
        for (const auto& cell : cells()) cell.validate();
        solver.validate();
    }
};

inline SweepConfig parse_sweep_config(const json& j) {
    if (!j.is_object()) throw FormatError("config: top level must be an object");
    SweepConfig c;
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            const json& v = it.value();
            if (k == "name") c.name = v.get<std::string>();
            else if (k == "axes") {
                if (!v.is_array() || v.empty()) throw FormatError("config: axes must be a non-empty array");
                for (const auto& a : v) {
                    SweepAxis axis{a.at("name").get<std::string>(), a.at("values").get<std::vector<Index>>()};
                    InstanceSpec probe;
                    detail::spec_field(probe, axis.name);
                    c.axes.push_back(std::move(axis));
                }
            } else if (k == "fixed") {
                for (auto f = v.begin(); f != v.end(); ++f) {
                    if (f.key() == "l" && f.value().is_string()) {
                        if (f.value().get<std::string>() != "d") throw FormatError("config: l must be an integer or \"d\"");
                        c.l_all_modes = true;
                        continue;
                    }
                    InstanceSpec probe;
                    detail::spec_field(probe, f.key());
                    c.fixed[f.key()] = f.value().get<Index>();
                }
            } else if (k == "algorithms") {
                c.algorithms.clear();
                for (const auto& a : v) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
            } else if (k == "trials") c.trials = v.get<int>();
            else if (k == "base_seed") c.base_seed = v.get<std::uint64_t>();
            else if (k == "solver") c.solver = parse_solver_config(v);
            else if (k == "output") c.output = v.get<std::string>();
            else if (k == "threads") c.threads = v.get<int>();
            else if (k == "description") continue;
            else throw FormatError("config: unknown key '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("config: cannot open " + path);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw FormatError("config: " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Sweeps

/**
 * Seed of one trial: hash_combine(base_seed, {d, N, M, r, l, omega, trial})
 * with hash_combine from random.hpp. Independent of the algorithm so that
 * all algorithms see identical instances, and of cell order so that cells
 * can run in any order.
 */
inline std::uint64_t trial_seed(std::uint64_t base_seed, const InstanceSpec& cell, int trial) {
    auto u = [](Index v) { return static_cast<std::uint64_t>(v); };
    return hash_combine(base_seed,
                        {u(cell.d), u(cell.N), u(cell.M), u(cell.r), u(cell.l), u(cell.omega), static_cast<std::uint64_t>(trial)});
}

struct SweepJob {
    InstanceSpec spec; // seed filled in
    int trial;
    Algorithm algorithm;
};

/** Jobs in output order: cell, then trial, then algorithm. */
inline std::vector<SweepJob> sweep_jobs(const SweepConfig& config) {
    std::vector<SweepJob> jobs;
    for (InstanceSpec cell : config.cells())
        for (int t = 0; t < config.trials; ++t) {
            cell.seed = trial_seed(config.base_seed, cell, t);
            for (Algorithm a : config.algorithms) jobs.push_back({cell, t, a});
        }
    return jobs;
}

namespace detail {

using RecordKey = std::tuple<Index, Index, Index, Index, Index, Index, int, int>;

inline RecordKey record_key(const InstanceSpec& s, int trial, Algorithm a) {
    return {s.d, s.N, s.M, s.r, s.l, s.omega, trial, static_cast<int>(a)};
}

/** Complete rows of an existing sweep CSV; a truncated trailing line is dropped. */
inline std::vector<std::string> existing_rows(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::string> rows;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < content.size()) {
        const std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) break; // incomplete last line
        std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty() || line[0] == '#') continue;
        if (line == csv_header) {
            header_seen = true;
            continue;
        }
        if (!header_seen) throw FormatError("csv: " + path + " lacks the sweep header");
        try {
            parse_csv_row(line);
        } catch (const FormatError&) {
            continue;
        }
        rows.push_back(std::move(line));
    }
    return rows;
}

} // namespace detail

struct SweepStats {
    std::size_t total = 0;
    std::size_t skipped = 0;
    std::size_t written = 0;
};

/**
 * Runs every (cell, trial, algorithm) job on a pool of `config.threads`
 * workers and writes one CSV row per job in job order through a single
 * writer, flushing after every row. With `resume`, rows already present in
 * the output are kept and their jobs skipped.
 */
inline SweepStats run_sweep(const SweepConfig& config, const std::string& path, bool resume = false) {
    config.validate();
    const std::vector<SweepJob> all = sweep_jobs(config);

    std::vector<std::string> kept;
    std::set<detail::RecordKey> done;
    if (resume) {
        kept = detail::existing_rows(path);
        for (const auto& row : kept) {
            auto rec = parse_csv_row(row);
            done.insert(detail::record_key(rec.spec, rec.trial, rec.algorithm));
        }
    }
    std::vector<SweepJob> todo;
    for (const auto& job : all)
        if (!done.count(detail::record_key(job.spec, job.trial, job.algorithm))) todo.push_back(job);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("sweep: cannot open " + path + " for writing");
    out << csv_schema_line << '\n' << csv_header << '\n';
    for (const auto& row : kept) out << row << '\n';
    out.flush();
    if (!out) throw Error("sweep: write to " + path + " failed");

    std::vector<std::optional<SweepRecord>> results(todo.size());
    std::mutex mutex;
    std::condition_variable ready;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            std::optional<SweepRecord> rec;
            try {
                rec = run_single(todo[i].spec, config.solver, todo[i].algorithm, todo[i].trial);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                next = todo.size();
            }
            {
                std::lock_guard lock(mutex);
                results[i] = std::move(rec);
            }
            ready.notify_one();
        }
    };

    const int nthreads = std::max(1, std::min<int>(config.threads, static_cast<int>(todo.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads && !todo.empty(); ++t) pool.emplace_back(worker);

    std::size_t written = 0;
    for (std::size_t i = 0; i < todo.size(); ++i) {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return results[i].has_value() || failure; });
        if (!results[i]) break;
        const std::string row = to_csv_row(*results[i]);
        lock.unlock();
        out << row << '\n';
        out.flush();
        ++written;
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    if (!out) throw Error("sweep: write to " + path + " failed");
    return {all.size(), all.size() - todo.size(), written};
}

// ---------------------------------------------------------------------------
// Summaries

struct CellSummary {
    Algorithm algorithm;
    Index d, N, M, r, l, omega;
    int trials = 0;
    int converged = 0;
    double frequency() const { return trials ? static_cast<double>(converged) / trials : 0.0; }
};

inline constexpr const char* summary_header = "algorithm,d,N,M,r,l,omega,trials,converged,frequency";

/** Groups rows by (algorithm, d, N, M, r, l, omega), sorted by that key; frequency = mean(converged). */
inline std::vector<CellSummary> summarize(std::istream& in) {
    using Key = std::tuple<int, Index, Index, Index, Index, Index, Index>;
    std::map<Key, CellSummary> cells;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line == csv_header) {
            header_seen = true;
            continue;
        }
        if (!header_seen) throw FormatError("summarize: missing sweep header");
        const SweepRecord rec = parse_csv_row(line);
        const auto& s = rec.spec;
        Key key{static_cast<int>(rec.algorithm), s.d, s.N, s.M, s.r, s.l, s.omega};
        auto [it, inserted] = cells.try_emplace(key, CellSummary{rec.algorithm, s.d, s.N, s.M, s.r, s.l, s.omega});
        it->second.trials += 1;
        it->second.converged += rec.converged ? 1 : 0;
    }
    if (!header_seen) throw FormatError("summarize: empty input");
    std::vector<CellSummary> out;
    for (auto& [k, v] : cells) out.push_back(v);
    return out;
}

inline std::vector<CellSummary> summarize(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("summarize: cannot open " + path);
    return summarize(in);
}

inline void write_summary(std::ostream& out, const std::vector<CellSummary>& cells) {
    out << summary_header << '\n';
    for (const auto& c : cells)
        out << to_string(c.algorithm) << ',' << c.d << ',' << c.N << ',' << c.M << ',' << c.r << ',' << c.l << ','
            << c.omega << ',' << c.trials << ',' << c.converged << ',' << format_double(c.frequency()) << '\n';
}

/** One line of structured text per solve. */
inline std::string report_to_json_line(const SolveReport& r, const InstanceSpec& spec, Algorithm a) {
    json j;
    j["instance"] = {{"d", spec.d}, {"N", spec.N}, {"M", spec.M}, {"r", spec.r}, {"l", spec.l}, {"omega", spec.omega},
                     {"seed", spec.seed}};
    j["algorithm"] = to_string(a);
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["stop_reason"] = to_string(r.reason);
    j["train_rel_res"] = r.train_rel_res;
    j["test_rel_err"] = r.test_rel_err;
    j["max_side_residual"] = r.max_side_residual;
    j["train_history"] = r.train_history;
    j["test_history"] = r.test_history;
    j["seconds"] = r.seconds;
    return j.dump();
}

} // namespace ttc
