// Command-line front end: builds/exports position-remapping matrices, fits
// the length-to-mapping-length sigmoid, runs the verification suites, checks
// the decomposed attention against the dense oracle, and emits comparison
// curves for the different mapping strategies.
//
// Exit codes: 0 pass, 1 invariant failure, 2 usage/parse error.
// All errors are machine-parseable JSON on stderr with a stable code.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lampe/attention.hpp"
#include "lampe/config.hpp"
#include "lampe/matrix_io.hpp"
#include "lampe/pe_map.hpp"
#include "lampe/rational.hpp"
#include "lampe/rotary.hpp"
#include "lampe/sigmoid_fit.hpp"
#include "lampe/three_pass.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct CliError {
    std::string code;
    std::string message;
    int exit_code;
    json extra;  // optional structured payload (e.g. a counterexample)
};

void emit_error(const CliError& err) {
    json doc;
    doc["error"] = {{"code", err.code}, {"message", err.message}};
    if (!err.extra.is_null()) doc["error"]["details"] = err.extra;
    std::cerr << doc.dump() << "\n";
}

// 64-bit FNV-1a over file bytes; stable content hash for the run manifest.
std::string fnv1a64_hex(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw lampe::io_error("cannot hash missing file: " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize k = 0; k < got; ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Collected outputs of one run, flushed as <out>/manifest.json.
struct RunManifest {
    std::string command;
    std::vector<std::string> config_paths;
    fs::path out_dir;
    std::uint64_t seed = 0;
    std::vector<fs::path> files;

    void add(const fs::path& p) { files.push_back(p); }

    void write() const {
        if (files.empty()) return;
        json doc;
        doc["command"] = command;
        doc["config_paths"] = config_paths;
        doc["output_dir"] = out_dir.string();
        doc["seed"] = seed;
        json list = json::array();
        for (const auto& f : files) {
            list.push_back({{"path", fs::relative(f, out_dir).string()},
                            {"fnv1a64", fnv1a64_hex(f)}});
        }
        doc["files"] = list;
        std::ofstream out(out_dir / "manifest.json");
        if (!out) throw lampe::io_error("cannot write manifest in " + out_dir.string());
        out << doc.dump(2) << "\n";
    }
};

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

json config_json(const lampe::MappingConfig& cfg) {
    return {{"l", cfg.l}, {"m", cfg.m}, {"s1", cfg.s1}, {"s2", cfg.s2}, {"n", cfg.n}};
}

// ---------------------------------------------------------------- pe-matrix

int cmd_pe_matrix(const std::string& config_path, const std::string& out,
                  const std::string& format, const std::string& output_name, bool index_form,
                  std::uint64_t seed) {
    const lampe::MappingConfig cfg = lampe::read_config_json(config_path);
    cfg.validate();

    const lampe::RelPositionMatrix pe =
        index_form ? lampe::build_index_pe_matrix(cfg) : lampe::build_pe_matrix(cfg);
    const lampe::RegionPartition part = lampe::region_partition(cfg);

    if (format == "json") {
        throw lampe::precondition_error("pe-matrix exports csv or binary, not json");
    }
    RunManifest manifest{"pe-matrix", {config_path}, ensure_out_dir(out), seed, {}};
    const bool binary = format == "binary";
    const std::string name =
        output_name.empty() ? (binary ? "pe_matrix.lpe" : "pe_matrix.csv") : output_name;
    const fs::path target = manifest.out_dir / name;
    if (binary) {
        lampe::write_matrix_binary(pe, cfg, target);
    } else {
        lampe::write_matrix_csv(pe, target);
    }
    manifest.add(target);
    manifest.write();

    json summary;
    summary["config"] = config_json(cfg);
    summary["file"] = target.string();
    summary["distinct_values"] = pe.distinct_value_count();
    summary["max_value"] = pe.max_value();
    summary["region_pairs"] = {{"head", part.head_pairs},
                               {"middle", part.middle_pairs},
                               {"tail", part.tail_pairs}};
    summary["identity_mapping"] = cfg.is_identity();
    std::cout << summary.dump(2) << "\n";
    if (cfg.is_identity()) std::cout << "identity mapping (m = l): entries are i - j\n";
    return kExitPass;
}

// -------------------------------------------------------------- fit-sigmoid

int cmd_fit_sigmoid(const std::string& points_path, std::int64_t ceiling, std::int64_t window,
                    const std::string& out, const std::string& output_name,
                    const std::vector<std::int64_t>& probes, std::uint64_t seed) {
    if (ceiling <= 0 && window <= 0) {
        throw lampe::precondition_error("one of --ceiling or --window is required");
    }
    std::int64_t L = ceiling;
    if (L <= 0) {
        L = lampe::default_ceiling(window);
        std::cout << "ceiling derived from window: L = floor(3n/4) = " << L << "\n";
    }
    const auto points = lampe::read_observations_csv(points_path);
    const lampe::SigmoidParams params = lampe::fit_sigmoid(points, L);

    RunManifest manifest{"fit-sigmoid", {points_path}, ensure_out_dir(out), seed, {}};
    const std::string name = output_name.empty() ? "sigmoid_params.json" : output_name;
    const fs::path target = manifest.out_dir / name;
    {
        std::ofstream file(target);
        if (!file) throw lampe::io_error("cannot write " + target.string());
        file << lampe::params_to_json(params);
    }
    manifest.add(target);
    manifest.write();

    std::cout << lampe::params_to_json(params);
    for (const std::int64_t probe : probes) {
        std::cout << "m(" << probe << ") = " << lampe::mapping_length(probe, params) << "\n";
    }
    return kExitPass;
}

// ------------------------------------------------------------------- verify

struct CheckOutcome {
    bool pass = true;
    json details;
};

CheckOutcome check_monotonicity(const lampe::RelPositionMatrix& pe) {
    CheckOutcome out;
    const lampe::MonotonicityReport report = lampe::verify_monotonicity(pe);
    out.pass = report.pass;
    if (!report.pass) {
        out.details = {{"i", report.i}, {"j1", report.j1}, {"j2", report.j2}};
    }
    return out;
}

CheckOutcome check_range(const lampe::RelPositionMatrix& pe, const lampe::MappingConfig& cfg) {
    CheckOutcome out;
    for (std::int64_t i = 0; i < pe.size(); ++i) {
        const std::int32_t* row = pe.row(i);
        if (row[i] != 0) {
            out.pass = false;
            out.details = {{"kind", "nonzero_diagonal"}, {"i", i}};
            return out;
        }
        for (std::int64_t j = 0; j <= i; ++j) {
            if (row[j] < 0 || row[j] > cfg.m - 1) {
                out.pass = false;
                out.details = {{"kind", "out_of_range"}, {"i", i}, {"j", j}, {"value", row[j]}};
                return out;
            }
        }
    }
    if (cfg.s2 >= 1 && cfg.l >= 2 && pe.at(cfg.l - 1, 0) != cfg.m - 1) {
        out.pass = false;
        out.details = {{"kind", "corner_not_m_minus_1"}, {"value", pe.at(cfg.l - 1, 0)}};
    }
    return out;
}

CheckOutcome check_boundary_identities(const lampe::MappingConfig& cfg) {
    CheckOutcome out;
    const lampe::MiddleTransform t = lampe::MiddleTransform::from_config(cfg);
    out.pass = t.identities_hold(cfg) && t.slope > lampe::Rational(0) &&
               t.slope <= lampe::Rational(1);
    if (!out.pass) {
        out.details = {{"slope", t.slope.str()}, {"offset", t.offset.str()}};
    }
    return out;
}

CheckOutcome check_partition(const lampe::MappingConfig& cfg) {
    CheckOutcome out;
    const lampe::RegionPartition part = lampe::region_partition(cfg);
    // Offset-level enumeration: every offset in exactly one band, counts match.
    std::int64_t head = 0, middle = 0, tail = 0;
    for (std::int64_t d = 0; d < cfg.l; ++d) {
        const bool in_head = d <= cfg.s1;
        const bool in_middle = d > cfg.s1 && d < cfg.l - cfg.s2;
        const bool in_tail = d >= cfg.l - cfg.s2;
        if (static_cast<int>(in_head) + static_cast<int>(in_middle) + static_cast<int>(in_tail) !=
            1) {
            out.pass = false;
            out.details = {{"kind", "offset_not_in_exactly_one_region"}, {"offset", d}};
            return out;
        }
        const std::int64_t pairs = cfg.l - d;
        if (in_head) head += pairs;
        if (in_middle) middle += pairs;
        if (in_tail) tail += pairs;
    }
    out.pass = head == part.head_pairs && middle == part.middle_pairs &&
               tail == part.tail_pairs &&
               part.total_pairs() == cfg.l * (cfg.l + 1) / 2;
    if (!out.pass) {
        out.details = {{"kind", "count_mismatch"},
                       {"enumerated", {head, middle, tail}},
                       {"partition", {part.head_pairs, part.middle_pairs, part.tail_pairs}}};
    }
    return out;
}

CheckOutcome check_floor_discrepancy(const lampe::RelPositionMatrix& offs,
                                     const lampe::RelPositionMatrix& idx,
                                     const lampe::MappingConfig& cfg) {
    CheckOutcome out;
    const lampe::RegionPartition part = lampe::region_partition(cfg);
    for (std::int64_t i = 0; i < offs.size(); ++i) {
        const std::int32_t* a = offs.row(i);
        const std::int32_t* b = idx.row(i);
        for (std::int64_t j = 0; j <= i; ++j) {
            const std::int64_t diff = static_cast<std::int64_t>(a[j]) - b[j];
            const bool middle = part.classify_offset(i - j) == lampe::Region::middle;
            if (diff < -1 || diff > 1 || (diff != 0 && !middle)) {
                out.pass = false;
                out.details = {{"i", i}, {"j", j}, {"offset_form", a[j]}, {"index", b[j]}};
                return out;
            }
        }
    }
    return out;
}

json verify_one_config(const lampe::MappingConfig& cfg, bool& all_pass) {
    cfg.validate();
    const lampe::RelPositionMatrix idx = lampe::build_index_pe_matrix(cfg);
    const lampe::RelPositionMatrix offs = lampe::build_pe_matrix(cfg);

    std::map<std::string, CheckOutcome> checks;
    checks["monotonicity"] = check_monotonicity(idx);
    checks["range"] = check_range(idx, cfg);
    checks["boundary_identities"] = check_boundary_identities(cfg);
    checks["partition"] = check_partition(cfg);
    checks["floor_discrepancy"] = check_floor_discrepancy(offs, idx, cfg);

    json report;
    report["config"] = config_json(cfg);
    const lampe::RegionPartition part = lampe::region_partition(cfg);
    report["region_pairs"] = {{"head", part.head_pairs},
                              {"middle", part.middle_pairs},
                              {"tail", part.tail_pairs}};
    bool pass = true;
    for (const auto& [name, outcome] : checks) {
        report["checks"][name] = outcome.pass;
        if (!outcome.pass) {
            report["counterexamples"][name] = outcome.details;
            pass = false;
        }
    }
    report["pass"] = pass;
    all_pass = all_pass && pass;
    return report;
}

int cmd_verify(const std::vector<std::string>& config_paths, const std::string& matrix_path,
               const std::string& sweep, const std::string& params_path, const std::string& out,
               std::uint64_t seed) {
    json reports = json::array();
    bool all_pass = true;
    std::optional<json> first_failure;

    if (!matrix_path.empty()) {
        // Stored-matrix mode: monotonicity plus range against the stored header.
        const lampe::LoadedMatrix loaded = lampe::read_matrix(matrix_path);
        json report;
        report["matrix"] = matrix_path;
        report["config"] = config_json(loaded.cfg);
        const CheckOutcome mono = check_monotonicity(loaded.pe);
        const CheckOutcome range = check_range(loaded.pe, loaded.cfg);
        report["checks"]["monotonicity"] = mono.pass;
        report["checks"]["range"] = range.pass;
        if (!mono.pass) report["counterexamples"]["monotonicity"] = mono.details;
        if (!range.pass) report["counterexamples"]["range"] = range.details;
        report["pass"] = mono.pass && range.pass;
        all_pass = mono.pass && range.pass;
        if (!all_pass) first_failure = report;
        reports.push_back(report);
    }

    std::vector<lampe::MappingConfig> configs;
    for (const std::string& path : config_paths) {
        configs.push_back(lampe::read_config_json(path));
    }
    if (!sweep.empty()) {
        std::int64_t lo = 0, hi = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(sweep);
        if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step < 1 ||
            lo < 2 || hi < lo) {
            throw lampe::parse_error("bad --sweep spec, expected MIN:MAX:STEP with MIN >= 2");
        }
        std::optional<lampe::SigmoidParams> params;
        if (!params_path.empty()) params = lampe::read_params_json(params_path);
        for (std::int64_t l = lo; l <= hi; l += step) {
            lampe::MappingConfig cfg;
            cfg.l = l;
            cfg.m = params ? lampe::mapping_length(l, *params)
                           : lampe::clamp_mapping_length((3 * l + 3) / 4, l);
            cfg.s1 = l / 16;
            cfg.s2 = l / 16;
            cfg.n = params ? params->ceiling : 0;
            configs.push_back(cfg);
        }
    }

    for (const auto& cfg : configs) {
        const json report = verify_one_config(cfg, all_pass);
        if (!report["pass"].get<bool>() && !first_failure) first_failure = report;
        reports.push_back(report);
    }

    if (reports.empty()) {
        throw lampe::precondition_error("nothing to verify: pass --config, --matrix or --sweep");
    }

    json doc;
    doc["reports"] = reports;
    doc["pass"] = all_pass;
    std::cout << doc.dump(2) << "\n";

    if (!out.empty()) {
        RunManifest manifest{"verify", config_paths, ensure_out_dir(out), seed, {}};
        const fs::path target = manifest.out_dir / "verify_report.json";
        std::ofstream file(target);
        file << doc.dump(2) << "\n";
        manifest.add(target);
        manifest.write();
    }

    if (!all_pass) {
        CliError err{"invariant_violation", "verification failed", kExitInvariant,
                     first_failure ? *first_failure : json()};
        emit_error(err);
        return kExitInvariant;
    }
    return kExitPass;
}

// --------------------------------------------------------------- attn-check

int cmd_attn_check(std::uint64_t seed, std::int64_t l, std::int64_t m, std::int64_t s1,
                   std::int64_t s2, int heads, int dim, double tol, double base,
                   bool include_timings, const std::string& out) {
    const lampe::MappingConfig cfg{l, m, s1, s2, 0};
    cfg.validate();
    const lampe::RotaryBasis basis = lampe::RotaryBasis::create(dim, base);
    const lampe::AttentionBatch batch = lampe::make_random_batch(seed, heads, l, dim);
    const lampe::EquivalenceReport report = lampe::run_equivalence_check(batch, cfg, basis);

    std::cout << lampe::report_to_json(report, true);

    if (!out.empty()) {
        RunManifest manifest{"attn-check", {}, ensure_out_dir(out), seed, {}};
        const fs::path target = manifest.out_dir / "attn_check_report.json";
        std::ofstream file(target);
        file << lampe::report_to_json(report, include_timings);
        manifest.add(target);
        manifest.write();
    }

    const bool pass =
        report.max_abs_error <= tol && report.disjointness_ok && report.monotonicity_ok;
    if (!pass) {
        json details = {{"max_abs_error", report.max_abs_error},
                        {"tolerance", tol},
                        {"disjointness_ok", report.disjointness_ok},
                        {"monotonicity_ok", report.monotonicity_ok}};
        emit_error({"tolerance_exceeded", "decomposed attention differs from the dense oracle",
                    kExitInvariant, details});
        return kExitInvariant;
    }
    return kExitPass;
}

// ------------------------------------------------------------------ compare

struct StrategyCurve {
    std::string name;
    std::vector<std::int64_t> mapped;  // per offset 0..l-1
};

std::vector<StrategyCurve> compare_curves(std::int64_t l, std::int64_t n,
                                          const std::vector<std::string>& strategies,
                                          const std::optional<lampe::SigmoidParams>& params,
                                          std::int64_t s1, std::int64_t s2, std::int64_t se_w,
                                          std::int64_t se_g) {
    // Mapping length policy: identity inside the pretraining window, sigmoid
    // (or the 3n/4 ceiling) beyond it.
    std::int64_t m = l;
    if (l > n) {
        m = params ? lampe::mapping_length(l, *params)
                   : lampe::clamp_mapping_length(lampe::default_ceiling(n), l);
    }

    std::vector<StrategyCurve> curves;
    for (const std::string& name : strategies) {
        StrategyCurve curve;
        curve.name = name;
        curve.mapped.resize(static_cast<std::size_t>(l));
        if (name == "lampe") {
            lampe::MappingConfig cfg{l, m, s1, s2, n};
            if (cfg.is_identity()) {
                cfg.s1 = std::min(s1, l - 1);
                cfg.s2 = std::min(s2, l - 1 - cfg.s1);
            }
            cfg.validate();
            const lampe::RelPositionMatrix pe = lampe::build_pe_matrix(cfg);
            for (std::int64_t d = 0; d < l; ++d) {
                curve.mapped[static_cast<std::size_t>(d)] = pe.at(l - 1, l - 1 - d);
            }
        } else if (name == "self-extend") {
            const lampe::SelfExtendConfig se{se_w, se_g, n};
            se.validate();
            for (std::int64_t d = 0; d < l; ++d) {
                curve.mapped[static_cast<std::size_t>(d)] = lampe::self_extend_pe(d, 0, se);
            }
        } else if (name == "adaptive-group") {
            for (std::int64_t d = 0; d < l; ++d) {
                curve.mapped[static_cast<std::size_t>(d)] = lampe::adaptive_group_pe(d, 0, l, m);
            }
        } else {
            throw lampe::precondition_error("unknown strategy: " + name);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

int cmd_compare(const std::vector<std::int64_t>& lengths, std::int64_t n,
                std::vector<std::string> strategies,
                const std::string& params_path, std::int64_t s1_opt, std::int64_t s2_opt,
                std::int64_t se_w_opt, std::int64_t se_g_opt, const std::string& out,
                std::uint64_t seed) {
    if (lengths.empty()) throw lampe::precondition_error("--lengths is required");
    if (n < 4) throw lampe::precondition_error("--window must be >= 4");
    if (strategies.empty()) strategies = {"lampe", "self-extend", "adaptive-group"};

    std::optional<lampe::SigmoidParams> params;
    std::vector<std::string> config_paths;
    if (!params_path.empty()) {
        params = lampe::read_params_json(params_path);
        config_paths.push_back(params_path);
    }

    const std::int64_t s1 = s1_opt >= 0 ? s1_opt : n / 16;
    const std::int64_t s2 = s2_opt >= 0 ? s2_opt : std::min<std::int64_t>(64, n / 16);
    const std::int64_t se_w = se_w_opt >= 0 ? se_w_opt : n / 4;
    const std::int64_t max_l = *std::max_element(lengths.begin(), lengths.end());

    RunManifest manifest{"compare", config_paths, ensure_out_dir(out), seed, {}};
    const fs::path curves_path = manifest.out_dir / "compare_curves.csv";
    const fs::path stats_path = manifest.out_dir / "compare_stats.csv";
    std::ofstream curves_file(curves_path);
    std::ofstream stats_file(stats_path);
    if (!curves_file || !stats_file) {
        throw lampe::io_error("cannot write compare outputs in " + manifest.out_dir.string());
    }
    curves_file << "l,offset,strategy,mapped\n";
    stats_file << "l,strategy,max_mapped,decile,offsets,mean_group_size\n";

    for (const std::int64_t l : lengths) {
        if (l < 1) throw lampe::precondition_error("lengths must be >= 1");
        // Auto group size: smallest G whose extended window covers this l.
        std::int64_t se_g = se_g_opt;
        if (se_g <= 0) {
            se_g = l <= n ? 1 : (l - se_w + (n - se_w) - 1) / (n - se_w);
        }
        const auto curves = compare_curves(l, n, strategies, params, s1, s2, se_w, se_g);
        for (const auto& curve : curves) {
            for (std::int64_t d = 0; d < l; ++d) {
                curves_file << l << ',' << d << ',' << curve.name << ','
                            << curve.mapped[static_cast<std::size_t>(d)] << '\n';
            }
            const std::int64_t max_mapped =
                *std::max_element(curve.mapped.begin(), curve.mapped.end());
            // Mean run length of constant mapped value, per offset decile.
            for (int decile = 0; decile < 10; ++decile) {
                const std::int64_t lo = l * decile / 10;
                const std::int64_t hi = std::max(lo + 1, l * (decile + 1) / 10);
                if (lo >= l) break;
                std::int64_t runs = 1;
                for (std::int64_t d = lo + 1; d < hi; ++d) {
                    if (curve.mapped[static_cast<std::size_t>(d)] !=
                        curve.mapped[static_cast<std::size_t>(d - 1)]) {
                        ++runs;
                    }
                }
                const double mean_group =
                    static_cast<double>(hi - lo) / static_cast<double>(runs);
                stats_file << l << ',' << curve.name << ',' << max_mapped << ',' << decile << ','
                           << (hi - lo) << ',' << mean_group << '\n';
            }
        }
    }
    curves_file.close();
    stats_file.close();
    manifest.add(curves_path);
    manifest.add(stats_path);
    manifest.write();

    std::cout << "wrote " << curves_path.string() << " and " << stats_path.string() << " (max l "
              << max_l << ")\n";
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"length-aware multi-grained positional encoding toolkit"};
    app.fallthrough();
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string out_dir;
    std::string format = "csv";
    app.add_option("--seed", seed, "deterministic seed for generated fixtures");
    app.add_option("--out", out_dir, "output directory (manifest.json written alongside)");
    app.add_option("--format", format, "matrix export format")
        ->check(CLI::IsMember({"csv", "binary", "json"}));

    // pe-matrix
    auto* pe_cmd = app.add_subcommand("pe-matrix", "build and export a remapping matrix");
    std::string pe_config;
    std::string pe_output;
    bool pe_index = false;
    pe_cmd->add_option("--config", pe_config, "MappingConfig JSON file")->required();
    pe_cmd->add_option("--output", pe_output, "output file name (relative to --out)");
    pe_cmd->add_flag("--index", pe_index, "export the index-difference form instead of the offset form");

    // fit-sigmoid
    auto* fit_cmd = app.add_subcommand("fit-sigmoid", "fit the length-to-mapping-length curve");
    std::string fit_points;
    std::string fit_output;
    std::int64_t fit_ceiling = 0;
    std::int64_t fit_window = 0;
    std::vector<std::int64_t> fit_probes;
    fit_cmd->add_option("--points", fit_points, "observation CSV")->required();
    fit_cmd->add_option("--ceiling", fit_ceiling, "curve ceiling L");
    fit_cmd->add_option("--window", fit_window, "pretraining window n (L = floor(3n/4))");
    fit_cmd->add_option("--output", fit_output, "params JSON file name");
    fit_cmd->add_option("--probe", fit_probes, "input lengths to evaluate after fitting");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run the mapping property suite");
    std::vector<std::string> verify_configs;
    std::string verify_matrix;
    std::string verify_sweep;
    std::string verify_params;
    verify_cmd->add_option("--config", verify_configs, "MappingConfig JSON file(s)");
    verify_cmd->add_option("--matrix", verify_matrix, "stored matrix file (csv or binary)");
    verify_cmd->add_option("--sweep", verify_sweep, "length sweep MIN:MAX:STEP");
    verify_cmd->add_option("--params", verify_params, "sigmoid params JSON for sweep m values");

    // attn-check
    auto* attn_cmd = app.add_subcommand("attn-check", "decomposed attention vs dense oracle");
    std::int64_t attn_l = 128, attn_m = 48, attn_s1 = 8, attn_s2 = 8;
    int attn_heads = 2, attn_dim = 16;
    double attn_tol = 1e-8;
    double attn_base = 10000.0;
    bool attn_timings = false;
    attn_cmd->add_option("--l", attn_l, "sequence length");
    attn_cmd->add_option("--m", attn_m, "mapping length");
    attn_cmd->add_option("--s1", attn_s1, "head region width");
    attn_cmd->add_option("--s2", attn_s2, "tail region width");
    attn_cmd->add_option("--heads", attn_heads, "attention heads");
    attn_cmd->add_option("--dim", attn_dim, "head dimension (even)");
    attn_cmd->add_option("--tol", attn_tol, "max-abs error tolerance");
    attn_cmd->add_option("--base", attn_base, "rotary base");
    attn_cmd->add_flag("--timings", attn_timings,
                       "include runtime_ms_per_pass in the report file (breaks byte-stable reruns)");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "emit mapping-strategy comparison curves");
    std::vector<std::int64_t> cmp_lengths;
    std::int64_t cmp_window = 0;
    std::vector<std::string> cmp_strategies;
    std::string cmp_params;
    std::int64_t cmp_s1 = -1, cmp_s2 = -1, cmp_se_w = -1, cmp_se_g = -1;
    compare_cmd->add_option("--lengths", cmp_lengths, "input lengths")->required();
    compare_cmd->add_option("--window", cmp_window, "pretraining context window n")->required();
    compare_cmd->add_option("--strategies", cmp_strategies,
                            "subset of lampe,self-extend,adaptive-group");
    compare_cmd->add_option("--params", cmp_params, "sigmoid params JSON");
    compare_cmd->add_option("--s1", cmp_s1, "head region width (default n/16)");
    compare_cmd->add_option("--s2", cmp_s2, "tail region width (default min(64, n/16))");
    compare_cmd->add_option("--se-window", cmp_se_w, "SelfExtend local window (default n/4)");
    compare_cmd->add_option("--se-group", cmp_se_g, "SelfExtend group size (default: cover l)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error({"usage", e.what(), kExitUsage, json()});
        return kExitUsage;
    }

    try {
        if (pe_cmd->parsed()) {
            return cmd_pe_matrix(pe_config, out_dir, format, pe_output, pe_index, seed);
        }
        if (fit_cmd->parsed()) {
            return cmd_fit_sigmoid(fit_points, fit_ceiling, fit_window, out_dir, fit_output,
                                   fit_probes, seed);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(verify_configs, verify_matrix, verify_sweep, verify_params, out_dir,
                              seed);
        }
        if (attn_cmd->parsed()) {
            return cmd_attn_check(seed, attn_l, attn_m, attn_s1, attn_s2, attn_heads, attn_dim,
                                  attn_tol, attn_base, attn_timings, out_dir);
        }
        if (compare_cmd->parsed()) {
            return cmd_compare(cmp_lengths, cmp_window, cmp_strategies, cmp_params, cmp_s1,
                               cmp_s2, cmp_se_w, cmp_se_g, out_dir, seed);
        }
    } catch (const lampe::error& e) {
        emit_error({e.code(), e.what(), kExitUsage, json()});
        return kExitUsage;
    } catch (const std::exception& e) {
        emit_error({"internal", e.what(), kExitUsage, json()});
        return kExitUsage;
    }
    return kExitUsage;
}
