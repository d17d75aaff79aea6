#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cubemix/generate.hpp"
#include "cubemix/io.hpp"
#include "cubemix/oracle.hpp"
#include "cubemix/rng.hpp"
#include "cubemix/sampling_tree.hpp"
#include "cubemix/sdt.hpp"
#include "cubemix/sq.hpp"

using namespace cubemix;

namespace {

constexpr const char* kReportSchema = "cubemix.report/1";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (...) {
            throw ConfigError("bad integer list '" + s + "'");
        }
    }
    require(!out.empty(), "empty integer list");
    return out;
}

Json load_json(const std::string& path) {
    try {
        return Json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

// A model file or a sampling tree file, evaluated as a density.
struct Density {
    int n = 0;
    PdfFn pdf;
};

Density load_density(const std::string& path) {
    Json j = load_json(path);
    if (j.contains("root")) {
        auto tree = std::make_shared<SamplingTree>(tree_from_json(j.dump()));
        return {tree->n, [tree](Mask x) { return tree_pdf(*tree, x); }};
    }
    auto m = std::make_shared<ProductMixture>(model_from_json(j));
    return {m->n, [m](Mask x) { return pdf_exact(*m, x); }};
}

// Moments of every subset from a density table (superset sums).
std::vector<double> all_moments(const PdfFn& pdf, int n) {
    std::vector<double> t = pdf_table(pdf, n);
    for (int i = 0; i < n; ++i)
        for (Mask x = 0; x < t.size(); ++x)
            if (!test_bit(x, i)) t[x] += t[x | (Mask{1} << i)];
    return t;
}

Json residual_table(const SamplingTree& tree, const MomentOracle& oracle, int degree) {
    Json rows = Json::array();
    double worst = 0.0;
    if (tree.n <= brute_force_cap()) {
        std::vector<double> mom = all_moments([&](Mask x) { return tree_pdf(tree, x); }, tree.n);
        for_each_subset(full_mask(tree.n), 1, degree, [&](Mask S) {
            double r = std::abs(mom[S] - oracle.moment(S));
            worst = std::max(worst, r);
            rows.push_back({{"S", members(S)}, {"residual", r}});
        });
    }
    return Json{{"degree", degree}, {"max_residual", worst}, {"moments", rows}};
}

void emit(const std::string& path, const Json& j) {
    if (path.empty() || path == "-") std::cout << j.dump(2) << "\n";
    else write_text_file(path, j.dump(2) + "\n");
}

struct LearnOpts {
    std::string samples;
    int k = 2;
    double epsilon = 0.1;
    std::uint64_t seed = 0;
    std::size_t min_samples = 1000;
    int max_branch_sets = 24;
    double tau_trunc = -1.0;
    double inspan_threshold = -1.0;
    double verify_threshold = -1.0;
    double entry_step = -1.0;
    double weight_step = -1.0;
    std::size_t candidate_cap = 10000;
    bool no_prefilter = false;
    std::string out;
    std::string report;
};

void add_learn_options(CLI::App* sub, LearnOpts& o, bool products) {
    sub->add_option("samples", o.samples, "sample file")->required();
    sub->add_option("--k", o.k, "number of components")->required();
    sub->add_option("--epsilon", o.epsilon, "target accuracy");
    sub->add_option("--seed", o.seed, "seed");
    sub->add_option("--min-samples", o.min_samples, "survivors required to recurse into a branch");
    sub->add_option("--max-branch-sets", o.max_branch_sets, "condition sets explored per node");
    sub->add_option("--tau-trunc", o.tau_trunc, "edge weight below which a branch becomes a point mass");
    sub->add_option("--out", o.out, "learned tree file")->required();
    sub->add_option("--report", o.report, "report file (default: stdout)");
    if (products) {
        sub->add_option("--entry-step", o.entry_step, "marginal grid step");
        sub->add_option("--weight-step", o.weight_step, "weight grid step");
        sub->add_option("--candidate-cap", o.candidate_cap, "candidates kept per node");
        sub->add_flag("--no-prefilter", o.no_prefilter, "disable the moment prefilter on grid guesses");
    } else {
        sub->add_option("--inspan-threshold", o.inspan_threshold, "span test threshold");
        sub->add_option("--verify-threshold", o.verify_threshold, "moment verification threshold");
    }
}

int run_learn(const LearnOpts& o, LearnerKind kind) {
    require(o.k >= 1, "--k must be at least 1");
    require(o.epsilon > 0.0 && o.epsilon < 1.0, "--epsilon must lie in (0,1)");
    require(o.max_branch_sets >= 0, "--max-branch-sets must be nonnegative");
    require(o.entry_step < 0.0 || (o.entry_step > 0.0 && o.entry_step <= 1.0), "--entry-step must lie in (0,1]");
    require(o.weight_step < 0.0 || (o.weight_step > 0.0 && o.weight_step <= 1.0), "--weight-step must lie in (0,1]");
    int n = 0;
    std::vector<Mask> samples = read_sample_file(o.samples, n);
    NListConfig cfg;
    cfg.learner = kind;
    cfg.k = o.k;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    cfg.tau_trunc = o.tau_trunc;
    cfg.max_branch_sets = o.max_branch_sets;
    cfg.candidate_cap = o.candidate_cap;
    cfg.subcube.inspan_threshold = o.inspan_threshold;
    cfg.subcube.verify_threshold = o.verify_threshold;
    cfg.grid.entry_step = o.entry_step;
    cfg.grid.weight_step = o.weight_step;
    cfg.grid.prefilter = !o.no_prefilter;

    SampleSource src(samples, n, o.min_samples);
    auto oracle = src.oracle();
    SubcubeConfig sc = cfg.subcube;
    sc.epsilon = o.epsilon;
    NListStats st;
    auto tree = n_list(src, o.k, cfg, &st);
    if (!tree) throw Error("learner returned Fail on every branch");
    write_text_file(o.out, tree_to_json(*tree) + "\n");

    Json rep;
    rep["schema"] = kReportSchema;
    rep["command"] = kind == LearnerKind::Subcube ? "learn-subcubes" : "learn-products";
    rep["config"] = {{"samples", o.samples}, {"n", n}, {"k", o.k}, {"epsilon", o.epsilon}, {"seed", o.seed},
                     {"min_samples", o.min_samples}, {"max_branch_sets", o.max_branch_sets}};
    Json th;
    th["oracle_tolerance"] = oracle->tolerance();
    th["tau_trunc"] = o.tau_trunc > 0.0 ? o.tau_trunc : default_tau_trunc(kind, o.epsilon, o.k);
    if (kind == LearnerKind::Subcube) {
        th["inspan_threshold"] = effective_inspan_threshold(sc, *oracle, o.k);
        th["inspan_degree"] = inspan_degree(o.k);
        th["verify_threshold"] = effective_verify_threshold(sc, *oracle, o.k);
        th["verify_degree"] = verify_degree(o.k);
        th["gap_ratio"] = sc.gap_ratio;
        th["weight_floor"] = o.epsilon / (20.0 * o.k);
    } else {
        th["entry_step"] = o.entry_step > 0.0 ? o.entry_step : default_entry_step(o.epsilon, o.k, n);
        th["weight_step"] = o.weight_step > 0.0 ? o.weight_step : default_weight_step(o.epsilon, o.k);
        th["prefilter"] = !o.no_prefilter;
        th["candidate_cap"] = o.candidate_cap;
        th["sigma_cond"] = default_sigma_cond(o.epsilon, n, o.k);
        th["sample_accuracy_target"] = product_sample_accuracy(o.epsilon, n, o.k);
    }
    rep["thresholds"] = th;
    rep["result"] = {{"tree_depth", tree->depth()}, {"nodes_visited", st.nodes}, {"failed_branches", st.failed_branches}};
    rep["moment_residuals"] = residual_table(*tree, *oracle, kind == LearnerKind::Subcube ? verify_degree(o.k) : 2);
    emit(o.report, rep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning mixtures of subcubes and product distributions over the Boolean cube"};
    app.require_subcommand(1);

    // gen-model
    std::string g_kind = "subcube", g_out;
    int g_n = 0, g_k = 0, g_s = 1, g_fanout = 3, g_degree = -1;
    std::uint64_t g_seed = 0;
    double g_half = 1.0 / 3.0, g_sigma = 0.02;
    bool g_nondeg = false, g_arbitrary = false;
    auto* gen = app.add_subcommand("gen-model", "write a random model");
    gen->add_option("--kind", g_kind, "subcube, product or sdt")->check(CLI::IsMember({"subcube", "product", "sdt"}));
    gen->add_option("--n", g_n, "dimension")->required();
    gen->add_option("--k", g_k, "components (leaves for sdt)")->required();
    gen->add_option("--seed", g_seed, "seed");
    gen->add_option("--half-bias", g_half, "probability of a 1/2 entry in subcube centers");
    gen->add_flag("--nondegenerate", g_nondeg, "resample until the conditioning gate passes");
    gen->add_option("--sigma-threshold", g_sigma, "conditioning gate threshold");
    gen->add_option("--degree", g_degree, "moment degree of the conditioning gate");
    gen->add_option("--s", g_s, "sdt: stochastic nodes per path");
    gen->add_option("--fanout", g_fanout, "sdt: maximum stochastic fan-out");
    gen->add_flag("--arbitrary-probs", g_arbitrary, "sdt: non-dyadic transition probabilities");
    gen->add_option("--out", g_out, "output file")->required();

    // sample
    std::string s_model, s_out;
    std::size_t s_count = 0;
    std::uint64_t s_seed = 0;
    auto* samp = app.add_subcommand("sample", "draw samples from a model, tree or sdt file");
    samp->add_option("--model", s_model, "model file")->required();
    samp->add_option("--count", s_count, "number of samples")->required();
    samp->add_option("--seed", s_seed, "seed");
    samp->add_option("--out", s_out, "sample file")->required();

    LearnOpts ls, lp;
    auto* lsub = app.add_subcommand("learn-subcubes", "learn a mixture of subcubes from samples");
    add_learn_options(lsub, ls, false);
    auto* lprod = app.add_subcommand("learn-products", "learn a mixture of product distributions from samples");
    add_learn_options(lprod, lp, true);
    lp.epsilon = 0.15;

    std::string e_a, e_b;
    auto* ev = app.add_subcommand("eval-tvd", "total variation distance between two model or tree files");
    ev->add_option("a", e_a, "model or tree file")->required();
    ev->add_option("b", e_b, "model or tree file")->required();
    double e_max = -1.0;
    ev->add_option("--max", e_max, "exit with status 3 when the distance exceeds this");

    int q_m = 4, q_n = 6;
    std::string q_model, q_report;
    auto* sq = app.add_subcommand("sq-demo", "build and verify the moment-matching instance");
    sq->add_option("--m", q_m, "instance dimension (m + 1 prime)");
    sq->add_option("--n", q_n, "ambient dimension for the embedding statistics");
    sq->add_option("--out-model", q_model, "write the instance model here");
    sq->add_option("--report", q_report, "report file (default: stdout)");

    std::string d_samples, d_truth, d_out, d_report;
    int d_k = 4;
    double d_eps = 0.1;
    std::uint64_t d_seed = 0;
    auto* sd = app.add_subcommand("sdt-learn", "learn a classifier from labeled samples");
    sd->add_option("samples", d_samples, "labeled sample file")->required();
    sd->add_option("--k", d_k, "leaves of the generating tree");
    sd->add_option("--epsilon", d_eps, "target excess error");
    sd->add_option("--seed", d_seed, "seed");
    sd->add_option("--truth", d_truth, "true sdt file for the error report");
    sd->add_option("--out", d_out, "learned conditional tree file");
    sd->add_option("--report", d_report, "report file (default: stdout)");

    std::string b_ns = "6,8", b_ks = "2,3", b_out;
    std::size_t b_samples = 50000;
    std::uint64_t b_seed = 0;
    auto* bench = app.add_subcommand("bench", "timing table over an (n,k) grid");
    bench->add_option("--n", b_ns, "comma-separated dimensions");
    bench->add_option("--k", b_ks, "comma-separated component counts");
    bench->add_option("--samples", b_samples, "samples per instance");
    bench->add_option("--seed", b_seed, "seed");
    bench->add_option("--out", b_out, "CSV output (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) {
            require(g_n >= 1 && g_n <= kMaxDim, "--n must lie in [1, 63]");
            require(g_k >= 1 && g_k <= 64, "--k must lie in [1, 64]");
            require(g_half >= 0.0 && g_half <= 1.0, "--half-bias must lie in [0,1]");
            if (g_kind == "sdt") {
                require(g_s >= 0 && g_fanout >= 2, "--s must be nonnegative and --fanout at least 2");
                SdtGenSpec spec;
                spec.n = g_n;
                spec.k = g_k;
                spec.s = g_s;
                spec.max_fanout = g_fanout;
                spec.dyadic = !g_arbitrary;
                spec.require_stochastic = g_s > 0;
                write_text_file(g_out, sdt_to_json(random_sdt(spec, g_seed)).dump(2) + "\n");
                return 0;
            }
            bool subcube = g_kind == "subcube";
            if (!g_nondeg) {
                ProductMixture m = subcube ? random_subcube_mixture(g_n, g_k, g_seed, g_half).to_product()
                                           : random_product_mixture(g_n, g_k, g_seed);
                write_model_file(g_out, m);
                return 0;
            }
            int degree = g_degree > 0 ? g_degree : (subcube ? verify_degree(g_k) : g_k);
            GeneratedModel gm = generate_nondegenerate(subcube, g_n, g_k, g_seed, degree, g_sigma, g_half);
            Json j = model_to_json(gm.model);
            j["nondegeneracy_score"] = gm.score;
            j["nondegeneracy_threshold"] = g_sigma;
            j["degenerate_warning"] = gm.degenerate_warning;
            if (gm.degenerate_warning)
                std::cerr << "warning: no draw passed the conditioning gate after " << gm.tries << " tries\n";
            write_text_file(g_out, j.dump(2) + "\n");
            return 0;
        }
        if (*samp) {
            require(s_count >= 1, "--count must be positive");
            Json j = load_json(s_model);
            if (j.contains("nodes")) {
                StochasticDecisionTree t = sdt_from_json(j);
                write_labeled_file(s_out, sdt_sample(t, s_seed, s_count), t.n);
            } else if (j.contains("root")) {
                SamplingTree t = tree_from_json(j.dump());
                write_sample_file(s_out, tree_sample(t, s_seed, s_count), t.n);
            } else {
                ProductMixture m = model_from_json(j);
                write_sample_file(s_out, sample(m, s_seed, s_count), m.n);
            }
            return 0;
        }
        if (*lsub) return run_learn(ls, LearnerKind::Subcube);
        if (*lprod) return run_learn(lp, LearnerKind::Product);
        if (*ev) {
            Density a = load_density(e_a), b = load_density(e_b);
            require(a.n == b.n, "models have different dimensions");
            double d = tvd_bruteforce(a.pdf, b.pdf, a.n);
            std::printf("%.12g\n", d);
            return e_max >= 0.0 && d > e_max + 1e-12 ? 3 : 0;
        }
        if (*sq) {
            require(q_m >= 3, "--m must be at least 3");
            require(is_prime(q_m + 1), "--m + 1 must be prime");
            require(q_n >= q_m + 1 && q_n <= brute_force_cap(), "--n must lie in [m + 1, brute-force cap]");
            MomentMatchInstance inst = build_instance(q_m);
            if (!q_model.empty()) write_model_file(q_model, inst.A);
            Json rep;
            rep["schema"] = kReportSchema;
            rep["command"] = "sq-demo";
            rep["config"] = {{"m", q_m}, {"n", q_n}};
            rep["k"] = inst.k;
            rep["delta"] = inst.delta;
            rep["lambda1"] = inst.lambda1;
            rep["delta_lower_bound"] = std::pow(2.0 * q_m, -2.0 * q_m);
            Json table = Json::array();
            double worst = 0.0;
            for_each_subset(full_mask(q_m), 1, q_m, [&](Mask S) {
                double v = exact_moment(inst.A, S), u = std::ldexp(1.0, -popcount(S));
                if (popcount(S) < q_m) worst = std::max(worst, std::abs(v - u));
                table.push_back({{"S", members(S)}, {"moment", v}, {"uniform", u}});
            });
            rep["moments"] = table;
            rep["max_low_degree_deviation"] = worst;
            rep["top_discrepancy"] = pdf_exact(inst.A, full_mask(q_m)) - std::ldexp(1.0, -q_m);
            Mask I = full_mask(q_m), J = full_mask(q_m + 1) & ~Mask{1};
            InstanceStats st = instance_stats(inst, q_n, I, J);
            rep["embedding"] = {{"I", members(I)}, {"J", members(J)},
                                {"chi_pair", st.chi_pair}, {"chi_pair_closed", st.chi_pair_closed},
                                {"chi_sq", st.chi_sq}, {"chi_sq_closed", st.chi_sq_closed},
                                {"tvd", st.tvd}, {"tvd_closed", st.tvd_closed}};
            rep["checks_passed"] = worst <= 1e-12;
            emit(q_report, rep);
            return 0;
        }
        if (*sd) {
            require(d_k >= 1, "--k must be at least 1");
            require(d_eps > 0.0 && d_eps < 1.0, "--epsilon must lie in (0,1)");
            int n = 0;
            std::vector<LabeledSample> data = read_labeled_file(d_samples, n);
            SdtLearnConfig cfg;
            cfg.nlist.seed = d_seed;
            SdtClassifier c = learn_sdt_classifier(data, n, d_k, d_eps, cfg);
            if (!d_out.empty() && c.conditional) write_text_file(d_out, tree_to_json(*c.conditional) + "\n");
            Json rep;
            rep["schema"] = kReportSchema;
            rep["command"] = "sdt-learn";
            rep["config"] = {{"samples", d_samples}, {"n", n}, {"k", d_k}, {"epsilon", d_eps}, {"seed", d_seed}};
            rep["b_star"] = c.b_star;
            rep["pi_b_star"] = c.pi_b;
            rep["constant_classifier"] = c.constant;
            double train_err = 0.0;
            for (const auto& s : data) train_err += c.predict(s.x) != s.label;
            rep["training_error"] = train_err / static_cast<double>(data.size());
            if (!d_truth.empty()) {
                StochasticDecisionTree t = sdt_from_json(load_json(d_truth));
                require(t.n == n, "truth tree dimension differs from the samples");
                rep["bayes_optimal_error"] = bayes_optimal_error(t);
                rep["classifier_error"] = classifier_error(t, [&](Mask x) { return c.predict(x); });
            }
            emit(d_report, rep);
            return 0;
        }
        if (*bench) {
            require(b_samples >= 1, "--samples must be positive");
            std::vector<int> ns = parse_int_list(b_ns), ks = parse_int_list(b_ks);
            for (int n : ns) require(n >= 1 && n <= kMaxDim, "bench dimensions must lie in [1, 63]");
            for (int k : ks) require(k >= 1 && k <= 8, "bench component counts must lie in [1, 8]");
            std::ostringstream csv;
            csv << "n,k,samples,seconds,tree_depth,tvd\n";
            for (int n : ns)
                for (int k : ks) {
                    std::uint64_t seed = derive_seed(b_seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)});
                    ProductMixture truth = generate_nondegenerate(true, n, k, seed, verify_degree(k), 0.02).model;
                    std::vector<Mask> data = sample(truth, seed, b_samples);
                    NListConfig cfg;
                    cfg.k = k;
                    cfg.seed = seed;
                    auto t0 = std::chrono::steady_clock::now();
                    SampleSource src(data, n, 1000);
                    auto tree = n_list(src, k, cfg);
                    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    std::string tvd = "nan";
                    if (tree && n <= brute_force_cap())
                        tvd = std::to_string(tvd_bruteforce([&](Mask x) { return tree_pdf(*tree, x); },
                                                            [&](Mask x) { return pdf_exact(truth, x); }, n));
                    csv << n << ',' << k << ',' << b_samples << ',' << secs << ',' << (tree ? tree->depth() : -1)
                        << ',' << tvd << '\n';
                }
            if (b_out.empty()) std::cout << csv.str();
            else write_text_file(b_out, csv.str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
