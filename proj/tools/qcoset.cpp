// Command-line front end: base search and construction, lifting, certification,
// decoding and FER runs.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qcoset/base.hpp"
#include "qcoset/certify.hpp"
#include "qcoset/decode.hpp"
#include "qcoset/harness.hpp"
#include "qcoset/lift.hpp"
#include "qcoset/replay.hpp"

using namespace qcoset;
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    return f;
}

Field parse_field(const std::string& spec, const std::vector<std::uint32_t>& modulus) {
    std::uint32_t p = 0, e = 1;
    char caret = 0;
    std::istringstream is(spec);
    is >> p;
    if (is >> caret) {
        if (caret != '^' || !(is >> e)) throw FormatError("field must look like p or p^e");
    }
    return Field(p, e, modulus);
}

std::string stem(const std::string& prefix) { return fs::path(prefix).filename().string(); }

/// Writes <prefix>.hx.alist, <prefix>.hz.alist and a manifest <prefix>.code.
void write_bundle(const std::string& prefix, const CssCode& code, const std::string& base_file,
                  const std::string& labels_file) {
    {
        auto f = open_out(prefix + ".hx.alist");
        write_alist(f, code.hx());
    }
    {
        auto f = open_out(prefix + ".hz.alist");
        write_alist(f, code.hz());
    }
    auto m = open_out(prefix + ".code");
    const auto dir = fs::absolute(fs::path(prefix)).parent_path();
    auto rel = [&](const std::string& p) { return fs::relative(fs::absolute(p), dir).string(); };
    m << "hx " << stem(prefix) << ".hx.alist\nhz " << stem(prefix) << ".hz.alist\n";
    if (!base_file.empty()) m << "base " << rel(base_file) << '\n';
    if (!labels_file.empty()) m << "labels " << rel(labels_file) << '\n';
}

void print_census(const BasePair& b) {
    auto cc = census(b);
    CssCode code(b.hx, b.hz);
    std::cout << "params " << code.params() << " n=" << code.n() << " k=" << code.k() << " rank_x=" << code.rank_x()
              << " rank_z=" << code.rank_z() << '\n';
    std::cout << "N_XZ2 " << cc.nxz2 << "\nN6 " << cc.n6_x << ' ' << cc.n6_z << '\n';
    std::cout << "overlap_histogram";
    for (auto [k, v] : cc.overlap_histogram) std::cout << ' ' << k << ':' << v;
    std::cout << '\n';
}

SearchBudget budget_from(double seconds, unsigned threads) {
    SearchBudget b;
    b.seconds = seconds;
    b.threads = threads;
    return b;
}

void print_distance(const CssCode& code) {
    auto show = [](const char* name, const DistanceInterval& iv) {
        std::cout << name << " [" << (iv.lower ? std::to_string(*iv.lower) : "?") << ", "
                  << (iv.upper ? std::to_string(*iv.upper) : "?") << "] " << iv.provenance << '\n';
    };
    show("d_X", code.dist_x);
    show("d_Z", code.dist_z);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcoset: two-branch coset CSS codes, circulant lifts and decoding"};
    app.require_subcommand(1);

    // search-base
    std::string field_spec;
    std::vector<std::uint32_t> modulus;
    std::uint32_t m = 0, J = 0;
    bool exhaustive = false;
    std::string out;
    unsigned threads = 0;
    auto* search = app.add_subcommand("search-base", "normalized coefficient search");
    search->add_option("--field", field_spec, "p or p^e")->required();
    search->add_option("--modulus", modulus, "extension modulus coefficients, little-endian");
    search->add_option("--m", m, "subgroup order")->required();
    search->add_option("--J", J, "column weight")->required();
    search->add_flag("--exhaustive", exhaustive, "all normalized sets instead of the first");
    search->add_option("--out", out, "write coefficient file(s) with this prefix");
    search->add_option("--threads", threads);

    // build-base / certify-base
    std::string coeffs;
    auto* build = app.add_subcommand("build-base", "build H_X, H_Z from a coefficient file");
    build->add_option("--coeffs", coeffs)->required()->check(CLI::ExistingFile);
    build->add_option("--out", out, "output prefix")->required();
    auto* cert_base = app.add_subcommand("certify-base", "coset certificates, direct checks and cycle census");
    cert_base->add_option("--coeffs", coeffs)->required()->check(CLI::ExistingFile);

    // lift
    std::string base_file, support_file;
    std::int64_t P = 0;
    std::uint64_t seed = 1;
    std::string solve_mode = "randomized";
    auto* lift = app.add_subcommand("lift", "solve CPM labels and build the lifted pair");
    lift->add_option("--base", base_file, "coefficient file")->required()->check(CLI::ExistingFile);
    lift->add_option("--P", P, "circulant size")->required();
    lift->add_option("--orbit", support_file, "support file (orbit seeds, closing supports)")->check(CLI::ExistingFile);
    lift->add_option("--seed", seed);
    lift->add_option("--mode", solve_mode)->check(CLI::IsMember({"randomized", "complete"}));
    lift->add_option("--out", out, "output prefix")->required();

    // certify-lift
    std::string code_file, labels_file;
    auto* cert_lift = app.add_subcommand("certify-lift", "independent checks of a lifted pair");
    cert_lift->add_option("--code", code_file, "code manifest with base and labels")->required()->check(CLI::ExistingFile);
    cert_lift->add_option("--labels", labels_file, "label file (overrides the manifest)")->check(CLI::ExistingFile);
    cert_lift->add_option("--orbit", support_file)->check(CLI::ExistingFile);

    // distance
    std::size_t target = 0;
    double budget_s = 0;
    auto* dist = app.add_subcommand("distance", "target-distance acceptance by exhaustive enumeration");
    dist->add_option("--code", code_file)->required()->check(CLI::ExistingFile);
    dist->add_option("--target", target, "D: accept iff no logical of weight < D")->required();
    dist->add_option("--budget", budget_s, "seconds, 0 = unlimited");
    dist->add_option("--threads", threads);

    // witness
    std::string witness_file;
    auto* wit = app.add_subcommand("witness", "verify an explicit logical operator");
    wit->add_option("--code", code_file)->required()->check(CLI::ExistingFile);
    wit->add_option("--witness", witness_file)->required()->check(CLI::ExistingFile);

    // decode
    double p = 0;
    std::string config_file;
    auto* dec = app.add_subcommand("decode", "sample one depolarizing error and decode it");
    dec->add_option("--code", code_file)->required()->check(CLI::ExistingFile);
    dec->add_option("--p", p)->required();
    dec->add_option("--seed", seed);
    dec->add_option("--config", config_file)->check(CLI::ExistingFile);

    // fer
    std::vector<double> p_list;
    std::uint64_t trials = 0, failures = 0, chunk = 256;
    std::string checkpoint, dump_file;
    std::size_t max_dumps = 100;
    auto* fer = app.add_subcommand("fer", "Monte Carlo frame error rate");
    fer->add_option("--code", code_file)->required()->check(CLI::ExistingFile);
    fer->add_option("--p-list", p_list)->required()->delimiter(',');
    fer->add_option("--trials", trials, "trial cap per point");
    fer->add_option("--failures", failures, "stop a point after this many failures");
    fer->add_option("--seed", seed);
    fer->add_option("--config", config_file)->check(CLI::ExistingFile);
    fer->add_option("--threads", threads);
    fer->add_option("--chunk", chunk);
    fer->add_option("--checkpoint", checkpoint);
    fer->add_option("--dumps", dump_file, "append failure dumps here");
    fer->add_option("--max-dumps", max_dumps);
    fer->add_option("--out", out, "plot data file");

    // replay
    auto* rep = app.add_subcommand("replay", "extract logical operators from failure dumps");
    rep->add_option("--code", code_file)->required()->check(CLI::ExistingFile);
    rep->add_option("--dumps", dump_file)->required()->check(CLI::ExistingFile);
    rep->add_option("--out", out, "witness file prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*search) {
            Field F = parse_field(field_spec, modulus);
            auto res = search_coefficients(F, m, J, exhaustive ? SearchMode::Exhaustive : SearchMode::FirstFound, threads);
            std::cout << "found " << res.size() << " normalized coefficient set(s)\n";
            for (std::size_t i = 0; i < res.size(); ++i) {
                std::cout << "# set " << i << '\n';
                write_coefficients(std::cout, res[i]);
                if (!out.empty()) {
                    auto f = open_out(out + (res.size() > 1 ? "." + std::to_string(i) : "") + ".coeffs");
                    write_coefficients(f, res[i]);
                }
            }
            return res.empty() ? 1 : 0;
        }
        if (*build) {
            auto b = build_base(load_coefficients(coeffs));
            CssCode code(b.hx, b.hz);
            write_bundle(out, code, coeffs, "");
            auto f = open_out(out + ".mapping");
            write_base_mapping(f, b);
            print_census(b);
            return 0;
        }
        if (*cert_base) {
            auto c = load_coefficients(coeffs);
            auto o = check_orthogonality_certificate(c);
            auto q = check_4cycle_certificate(c);
            auto b = build_base(c);
            auto d = verify_4cycles_directly(b);
            const bool prod = product_is_zero(b.hx, b.hz);
            std::cout << "orthogonality_certificate " << (o.pass ? "PASS" : "FAIL") << ' ' << o.detail << '\n'
                      << "fourcycle_certificate " << (q.pass ? "PASS" : "FAIL") << ' ' << q.detail << '\n'
                      << "product_is_zero " << (prod ? "PASS" : "FAIL") << '\n'
                      << "fourcycle_direct " << (d.pass ? "PASS" : "FAIL") << ' ' << d.detail << '\n';
            print_census(b);
            return o.pass && q.pass && d.pass && prod ? 0 : 1;
        }
        if (*lift) {
            auto b = build_base(load_coefficients(base_file));
            auto cc = census(b);
            auto sys = make_system(b, P, cc, true);
            std::optional<SupportOrbit> orbit;
            if (!support_file.empty()) {
                auto sfile = load_support_file(support_file);
                if (!sfile.seeds.empty()) {
                    orbit = orbit_from_seeds(b, sfile.seeds, P, sfile.K_order);
                    add_support_forms(sys, b, *orbit);
                }
                for (const auto& c : sfile.close) add_support_closing_rows(sys, b, c.columns, c.K_order, c.side);
            }
            const auto t0 = std::chrono::steady_clock::now();
            auto res = solve_labels(sys, seed, {},
                                    solve_mode == "complete" ? SolveMode::Complete : SolveMode::Randomized);
            std::cout << "solve " << to_string(res.status) << " violated=" << res.violated
                      << " forced_zero=" << res.forced_zero.size() << " generators=" << res.generators
                      << " restarts=" << res.restarts << " steps=" << res.steps << " seconds="
                      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << '\n';
            auto l = LiftLabels::from_flat(P, sys.num_x, res.s);
            const std::string lab = out + ".labels";
            {
                auto f = open_out(lab);
                write_labels(f, b, l);
            }
            auto code = build_lift(b, l);
            write_bundle(out, code, base_file, lab);
            auto report = verify_lift(code, b, l, orbit ? &*orbit : nullptr);
            std::cout << report.text();
            return res.status == SolveStatus::Solved && report.ok() ? 0 : 1;
        }
        if (*cert_lift) {
            auto bundle = load_code(code_file);
            if (!bundle.base) throw FormatError("certify-lift needs a manifest with a base");
            if (!labels_file.empty()) {
                std::ifstream li(labels_file);
                bundle.labels = read_labels(li, *bundle.base);
                bundle.code = build_lift(*bundle.base, *bundle.labels);
            }
            if (!bundle.labels) throw FormatError("certify-lift needs labels");
            std::optional<SupportOrbit> orbit;
            if (!support_file.empty()) {
                auto sfile = load_support_file(support_file);
                if (!sfile.seeds.empty())
                    orbit = orbit_from_seeds(*bundle.base, sfile.seeds, bundle.labels->P, sfile.K_order);
            }
            auto report = verify_lift(bundle.code, *bundle.base, *bundle.labels, orbit ? &*orbit : nullptr);
            std::cout << report.text();
            return report.ok() ? 0 : 1;
        }
        if (*dist) {
            auto bundle = load_code(code_file);
            auto r = certify_lower_bound(bundle.code, target, budget_from(budget_s, threads));
            std::cout << "target D=" << target << ' ' << to_string(r.verdict) << " nodes=" << r.nodes
                      << " kernel_vectors_below=" << r.kernel_vectors_below << " seconds=" << r.seconds << '\n';
            if (r.verdict == CertifyVerdict::Rejected) {
                std::cout << "logical " << r.side << " weight " << r.logical.size() << ':';
                for (auto c : r.logical) std::cout << ' ' << c;
                std::cout << '\n';
                verify_witness(bundle.code, r.side, r.logical);
            }
            print_distance(bundle.code);
            return r.verdict == CertifyVerdict::Accepted ? 0 : (r.verdict == CertifyVerdict::Rejected ? 1 : 2);
        }
        if (*wit) {
            auto bundle = load_code(code_file);
            std::ifstream wi(witness_file);
            auto w = read_witness(wi);
            auto r = verify_witness(bundle.code, w.side, w.support());
            std::cout << "witness " << r.side << " weight=" << r.weight << " in_kernel=" << r.in_kernel
                      << " in_row_space=" << r.in_row_space << ' ' << (r.valid() ? "VALID" : "INVALID") << '\n';
            bool derived_ok = false;
            if (!r.valid() && !w.pairs.empty() && bundle.base && bundle.labels && bundle.labels->P == w.P) {
                // the literal representatives depend on the labels; recompute them from ours
                std::cout << "SKIP literal witness: not a logical under these labels\n";
                std::vector<std::size_t> cols;
                for (auto [c, res] : w.pairs) cols.push_back(c);
                const auto K = static_cast<std::int64_t>(std::max<std::size_t>(1, w.K.size()));
                auto sf = support_quotient_forms(*bundle.base, cols, w.P, K, w.side == 'X' ? Side::Z : Side::X);
                if (auto f = coset_representatives(*bundle.base, sf, *bundle.labels)) {
                    auto d = verify_witness(bundle.code, w.side, coset_support(sf.columns, *f, w.P, K));
                    derived_ok = d.valid();
                    std::cout << "derived " << d.side << " weight=" << d.weight << " in_kernel=" << d.in_kernel
                              << " in_row_space=" << d.in_row_space << ' ' << (d.valid() ? "VALID" : "INVALID") << '\n';
                } else {
                    std::cout << "derived: labels admit no coset lift on these columns\n";
                }
            }
            print_distance(bundle.code);
            return r.valid() || derived_ok ? 0 : 1;
        }
        DecoderConfig cfg;
        if (!config_file.empty()) {
            std::ifstream ci(config_file);
            cfg = read_config(ci);
        }
        if (*dec) {
            auto bundle = load_code(code_file);
            if (bundle.labels && !cfg.circulant_size) cfg.circulant_size = static_cast<std::size_t>(bundle.labels->P);
            std::mt19937_64 rng(seed);
            auto e = sample_error(DepolarizingPrior(p), bundle.code.n(), rng);
            auto [sx, sz] = syndromes(bundle.code, e.x, e.z);
            Decoder d(bundle.code, DepolarizingPrior(p), cfg);
            auto o = d.decode(sx, sz);
            auto status = o.status;
            if (is_success(status) && classify_outcome(bundle.code, e.x, e.z, o.ex, o.ez) == DecodeStatus::LogicalFailure)
                status = DecodeStatus::LogicalFailure;
            std::cout << "error_weight " << (e.x | e.z).count() << " syndrome_weight " << sx.count() + sz.count()
                      << "\nstatus " << to_string(status) << "\niterations " << o.iterations << "\nfallback "
                      << o.fallback_used << "\nresidual_unsat " << o.residual_unsat << "\nrule " << rule_name(o.rule)
                      << '\n';
            for (auto& t : o.trace) std::cout << "trace " << t << '\n';
            return is_success(status) ? 0 : 1;
        }
        if (*fer) {
            if (!trials && !failures) throw Error("give --trials and/or --failures");
            auto bundle = load_code(code_file);
            if (bundle.labels && !cfg.circulant_size) cfg.circulant_size = static_cast<std::size_t>(bundle.labels->P);
            FerStop stop{trials ? trials : UINT64_MAX, failures};
            FerOptions opt;
            opt.threads = threads;
            opt.chunk = chunk;
            opt.checkpoint = checkpoint;
            opt.max_dumps = max_dumps;
            std::ofstream dumps;
            if (!dump_file.empty()) {
                dumps.open(dump_file, std::ios::app);
                if (!dumps) throw Error("cannot write " + dump_file);
                opt.dumps = &dumps;
            }
            opt.progress = [](const FerRecord& r) {
                std::cerr << "p=" << r.p << " trials=" << r.trials << " failures=" << r.failures << '\n';
            };
            auto recs = run_fer(bundle.code, p_list, stop, cfg, seed, opt);
            emit_plot_data(std::cout, recs);
            if (!out.empty()) {
                auto f = open_out(out);
                emit_plot_data(f, recs);
            }
            return 0;
        }
        if (*rep) {
            auto bundle = load_code(code_file);
            std::ifstream di(dump_file);
            std::size_t idx = 0, logicals = 0;
            while (auto d = read_dump(di)) {
                if (d->status == std::string(to_string(DecodeStatus::SyndromeFailure))) {
                    std::cout << "dump " << idx++ << " syndrome-failure: skipped\n";
                    continue;
                }
                auto r = extract_logical(bundle.code, *d);
                std::cout << "dump " << idx << (r.degenerate ? " degenerate" : " logical");
                for (auto* w : {&r.x, &r.z}) {
                    if (!*w) continue;
                    ++logicals;
                    std::cout << ' ' << (*w)->side << ":weight=" << (*w)->weight;
                    if (!out.empty()) {
                        auto f = open_out(out + "." + std::to_string(idx) + "." + (*w)->side + ".witness");
                        write_witness(f, WitnessFile{(*w)->side, 0, {}, {}, (*w)->support});
                    }
                }
                std::cout << '\n';
                ++idx;
            }
            std::cout << "logicals " << logicals << '\n';
            print_distance(bundle.code);
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 3;
    }
    return 0;
}
