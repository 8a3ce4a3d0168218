#include "sfm/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include "sfm/config.hpp"
#include "sfm/dataset.hpp"
#include "sfm/error.hpp"
#include "sfm/eval.hpp"
#include "sfm/extractor.hpp"
#include "sfm/io.hpp"
#include "sfm/service.hpp"
#include "sfm/sfm_model.hpp"
#include "sfm/ssc.hpp"
#include "sfm/subdivision.hpp"
#include "sfm/synthgen.hpp"
#include "sfm/tsne.hpp"

namespace sfm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

/// Feature rows with ids; `dataset` is set when the file carried labels.
struct Points {
    std::vector<std::string> ids;
    Eigen::MatrixXd X;
    std::optional<LabeledDataset> dataset;
};

std::vector<std::string> header_fields(const std::string& text) {
    const auto end = text.find('\n');
    std::vector<std::string> out;
    for (auto f : io::split(std::string_view(text).substr(0, end == std::string::npos ? text.size() : end), ','))
        out.emplace_back(f);
    return out;
}

Points load_points(const std::string& path) {
    Points p;
    if (format_from_path(path) == DataFormat::Json) {
        p.dataset = load_dataset(path);
    } else {
        const std::string text = io::read_file(path);
        const auto header = header_fields(text);
        if (std::find(header.begin(), header.end(), "label") != header.end()) {
            p.dataset = parse_dataset_csv(text);
        } else {
            const bool has_id = !header.empty() && header[0] == "id";
            std::istringstream in(text);
            std::string line;
            std::getline(in, line);
            std::vector<std::vector<double>> rows;
            int lineno = 1;
            while (std::getline(in, line)) {
                ++lineno;
                if (io::trim(line).empty()) continue;
                auto fields = io::split(line, ',');
                if (fields.size() != header.size())
                    fail(Errc::MalformedFile, path + ":" + std::to_string(lineno) + ": expected " +
                                                  std::to_string(header.size()) + " fields");
                std::vector<double> row;
                for (std::size_t j = has_id ? 1 : 0; j < fields.size(); ++j) {
                    double v = 0.0;
                    if (!io::parse_double(fields[j], v))
                        fail(Errc::MalformedFile, path + ":" + std::to_string(lineno) + ": non-numeric field '" +
                                                      std::string(fields[j]) + "'");
                    row.push_back(v);
                }
                p.ids.push_back(has_id ? std::string(fields[0]) : "s" + std::to_string(rows.size()));
                rows.push_back(std::move(row));
            }
            if (rows.empty()) fail(Errc::EmptyDataset, path + ": no samples");
            const auto d = static_cast<Eigen::Index>(rows[0].size());
            if (d == 0) fail(Errc::MalformedFile, path + ": no feature columns");
            p.X.resize(static_cast<Eigen::Index>(rows.size()), d);
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (Eigen::Index j = 0; j < d; ++j) p.X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
            return p;
        }
    }
    p.ids = p.dataset->sample_ids;
    p.X = p.dataset->features;
    return p;
}

LabeledDataset load_labeled(const std::string& path) {
    if (path.empty()) fail(Errc::Usage, "a dataset path is required (--data)");
    return load_dataset(path);
}

/// Reads an id,x,y coordinates file and aligns it with `ids`.
Eigen::MatrixXd load_embedding(const std::string& path, const std::vector<std::string>& ids) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    const auto header = header_fields(line);
    if (header.size() != 3 || header[0] != "id") fail(Errc::MalformedFile, path + ": expected header id,x,y");
    std::map<std::string, std::pair<double, double>> by_id;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        auto f = io::split(line, ',');
        double x = 0.0, y = 0.0;
        if (f.size() != 3 || !io::parse_double(f[1], x) || !io::parse_double(f[2], y))
            fail(Errc::MalformedFile, path + ":" + std::to_string(lineno) + ": expected id,x,y");
        by_id[std::string(f[0])] = {x, y};
    }
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(ids.size()), 2);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = by_id.find(ids[i]);
        if (it == by_id.end()) fail(Errc::MissingEmbedding, path + ": no coordinates for sample '" + ids[i] + "'");
        Y(static_cast<Eigen::Index>(i), 0) = it->second.first;
        Y(static_cast<Eigen::Index>(i), 1) = it->second.second;
    }
    return Y;
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    io::atomic_write(p, content);
}

std::string out_path(const Globals& g, const std::string& fallback, const PipelineConfig& pc) {
    if (!g.out.empty()) return g.out;
    if (pc.output_dir != ".") return (fs::path(pc.output_dir) / fallback).string();
    return fallback;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (auto f : io::split(text, ',')) {
        long long v = 0;
        if (!io::parse_int(f, v)) fail(Errc::Usage, what + ": '" + std::string(f) + "' is not an integer");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

/// --k values: auto-ratio, ratio:T, auto-suggest[:KMAX], or a manual spec.
KSource parse_k_source(const std::string& spec, const std::vector<std::string>& class_names) {
    if (spec == "auto-ratio") return KSource::ratio();
    if (spec.rfind("ratio:", 0) == 0) {
        double t = 0.0;
        if (!io::parse_double(spec.substr(6), t) || !(t > 0.0)) fail(Errc::Usage, "ratio:T needs a positive T");
        return KSource::ratio(t);
    }
    if (spec == "auto-suggest") return KSource::suggest();
    if (spec.rfind("auto-suggest:", 0) == 0) {
        long long k = 0;
        if (!io::parse_int(spec.substr(13), k) || k < 2) fail(Errc::Usage, "auto-suggest:KMAX needs KMAX >= 2");
        return KSource::suggest(static_cast<int>(k));
    }
    return KSource::manual(parse_k_spec(spec, class_names));
}

/// Fills a manual K that the config gave by class name.
void resolve_named_k(SfmConfig& cfg, const PipelineConfig& pc, const std::vector<std::string>& class_names) {
    if (pc.named_k.empty() || cfg.k_source.kind != KSource::Kind::Manual) return;
    std::string spec;
    for (const auto& [name, k] : pc.named_k) spec += (spec.empty() ? "" : ",") + name + "=" + std::to_string(k);
    cfg.k_source.K = parse_k_spec(spec, class_names);
}

std::string coords_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& Y) {
    std::string s = "id,x,y\n";
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        s += ids[static_cast<std::size_t>(i)] + "," + io::format_double(Y(i, 0)) + "," + io::format_double(Y(i, 1)) + "\n";
    return s;
}

std::string kl_csv(const tsne::EmbeddingResult& r) {
    std::string s = "iteration,kl\n";
    for (const auto& rec : r.kl_history) s += std::to_string(rec.iteration) + "," + io::format_double(rec.kl) + "\n";
    return s;
}

std::string sibling(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int exit_code_for(const Error& e) {
    switch (classify(e.code())) {
        case ErrorClass::Usage: return 1;
        case ErrorClass::Data: return 2;
        case ErrorClass::Numerical: return 3;
    }
    return 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Subdivision-fusion classification pipeline", "sfm"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Pipeline configuration file (JSON)")->check(CLI::ExistingFile);
    g.seed_opt = app.add_option("--seed", g.seed, "Base random seed");
    g.out_opt = app.add_option("--out", g.out, "Primary output path");

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
    std::string gen_kind;
    int gen_n = 100, gen_dim = 2, gen_ambient = 10;
    double gen_overlap = 0.0, gen_sep = 3.0, gen_noise = -1.0, gen_test_fraction = 0.25;
    std::string gen_counts, gen_subdims = "2,2,2", gen_test_out;
    gen->add_option("kind", gen_kind, "figure1 | subspaces | imbalanced")
        ->required()
        ->check(CLI::IsMember({"figure1", "subspaces", "imbalanced"}));
    gen->add_option("--n", gen_n, "Samples per class (per subspace for subspaces)")->check(CLI::PositiveNumber);
    gen->add_option("--dim", gen_dim, "Feature dimension")->check(CLI::PositiveNumber);
    gen->add_option("--overlap", gen_overlap, "figure1: how far the class-3 lower mode moves toward class 2");
    gen->add_option("--separation", gen_sep, "figure1: mode separation");
    gen->add_option("--noise", gen_noise, "Gaussian noise sigma");
    gen->add_option("--counts", gen_counts, "imbalanced: per-class counts, e.g. 9,29,17");
    gen->add_option("--ambient", gen_ambient, "subspaces: ambient dimension")->check(CLI::PositiveNumber);
    gen->add_option("--subspace-dims", gen_subdims, "subspaces: dimensions, e.g. 2,2,2");
    gen->add_option("--test-out", gen_test_out, "Also write a stratified test split here");
    gen->add_option("--test-fraction", gen_test_fraction, "Test fraction for --test-out");

    // embed
    auto* emb = app.add_subcommand("embed", "2-D t-SNE embedding of a feature file");
    std::string emb_data, emb_kl_out, emb_extractor = "standardize";
    tsne::TsneOptions emb_opts;
    emb->add_option("--data", emb_data, "Features (CSV or JSON dataset)")->required();
    emb->add_option("--perplexity", emb_opts.perplexity, "Perplexity");
    emb->add_option("--iters", emb_opts.iters, "Gradient steps")->check(CLI::PositiveNumber);
    emb->add_option("--kl-out", emb_kl_out, "KL history CSV (default: <out>_kl.csv)");
    emb->add_option("--extractor", emb_extractor, "identity | standardize")
        ->check(CLI::IsMember({"identity", "standardize"}));

    // cluster
    auto* clu = app.add_subcommand("cluster", "Cluster the samples of a feature file");
    std::string clu_data, clu_method = "ssc";
    int clu_k = 2;
    double clu_lambda = ssc::kDefaultLambdaRel;
    clu->add_option("--data", clu_data, "Features (CSV or JSON dataset)")->required();
    clu->add_option("--k", clu_k, "Number of clusters")->required()->check(CLI::PositiveNumber);
    clu->add_option("--lambda-rel", clu_lambda, "Relative lasso penalty");
    clu->add_option("--method", clu_method, "ssc | random")->check(CLI::IsMember({"ssc", "random"}));

    // subdivide
    auto* sub = app.add_subcommand("subdivide", "Split every class into subcategories");
    std::string sub_data, sub_method = "ratio", sub_k, sub_mode = "full", sub_embedding, sub_extractor = "standardize";
    double sub_t = 0.0, sub_lambda = 0.1;
    int sub_kmax = 4, sub_min_size = 2;
    sub->add_option("--data", sub_data, "Labelled dataset")->required();
    sub->add_option("--method", sub_method, "ratio | manual | suggest")
        ->check(CLI::IsMember({"ratio", "manual", "suggest"}));
    auto* sub_t_opt = sub->add_option("--t", sub_t, "ratio: samples per subcategory (default: smallest class)");
    sub->add_option("--k", sub_k, "manual: K spec, e.g. c0=1,c3=2 or 1,1,2,2");
    sub->add_option("--mode", sub_mode, "full | 2d | random")->check(CLI::IsMember({"full", "2d", "random"}));
    sub->add_option("--embedding", sub_embedding, "id,x,y coordinates (computed when omitted)");
    sub->add_option("--k-max", sub_kmax, "suggest: largest K tried")->check(CLI::Range(2, 64));
    sub->add_option("--lambda-rel", sub_lambda, "Relative lasso penalty");
    sub->add_option("--min-sub-size", sub_min_size, "Smallest subcategory kept")->check(CLI::PositiveNumber);
    sub->add_option("--extractor", sub_extractor, "identity | standardize | pca");

    // train
    auto* tr = app.add_subcommand("train", "Train an SFM model");
    std::string tr_data, tr_subdivision, tr_k, tr_mode, tr_extractor, tr_embedding;
    SoftmaxHyper tr_hyper;
    double tr_lambda = 0.1, tr_perplexity = 30.0;
    int tr_pca_dim = 0, tr_tsne_iters = 1000;
    bool tr_warm = false;
    tr->add_option("--data", tr_data, "Training dataset");
    tr->add_option("--subdivision", tr_subdivision, "Subdivision file from `subdivide`");
    tr->add_option("--k", tr_k, "auto-ratio | ratio:T | auto-suggest[:KMAX] | manual spec");
    tr->add_option("--mode", tr_mode, "full | 2d | random");
    tr->add_option("--embedding", tr_embedding, "id,x,y coordinates for 2d mode or suggest");
    auto* tr_lr_opt = tr->add_option("--lr", tr_hyper.learning_rate, "Learning rate");
    auto* tr_epochs_opt = tr->add_option("--epochs", tr_hyper.epochs, "Full-batch epochs");
    auto* tr_l2_opt = tr->add_option("--l2", tr_hyper.l2, "L2 penalty on the weights");
    auto* tr_lambda_opt = tr->add_option("--lambda-rel", tr_lambda, "Relative lasso penalty");
    auto* tr_ext_opt = tr->add_option("--extractor", tr_extractor, "identity | standardize | pca");
    auto* tr_pca_opt = tr->add_option("--pca-dim", tr_pca_dim, "Output dimension for pca");
    auto* tr_perp_opt = tr->add_option("--perplexity", tr_perplexity, "t-SNE perplexity (2d mode)");
    auto* tr_iters_opt = tr->add_option("--tsne-iters", tr_tsne_iters, "t-SNE steps (2d mode)");
    tr->add_flag("--warm-start", tr_warm, "Initialise from a coarse classifier");

    // predict
    auto* pr = app.add_subcommand("predict", "Score samples with a trained model");
    std::string pr_model, pr_data;
    pr->add_option("--model", pr_model, "Model file")->required();
    pr->add_option("--data", pr_data, "Features (CSV or JSON dataset)")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "Accuracy and mAP of a model on a labelled set");
    std::string ev_model, ev_data, ev_text_out;
    ev->add_option("--model", ev_model, "Model file")->required();
    ev->add_option("--data", ev_data, "Labelled test set")->required();
    ev->add_option("--text-out", ev_text_out, "Also write the plain-text table here");

    // compare
    auto* cmp = app.add_subcommand("compare", "Baseline vs SFM vs random grouping over seeds");
    std::string cmp_generator, cmp_data, cmp_seeds, cmp_k, cmp_mode, cmp_text_out, cmp_csv_out, cmp_counts;
    int cmp_n_seeds = 0, cmp_n = 100, cmp_dim = 2;
    double cmp_overlap = 0.0, cmp_sep = 3.0, cmp_noise = -1.0, cmp_test_fraction = 0.25;
    cmp->add_option("--generator", cmp_generator, "figure1 | imbalanced | file")
        ->check(CLI::IsMember({"figure1", "imbalanced", "file"}));
    cmp->add_option("--data", cmp_data, "Dataset for --generator file");
    cmp->add_option("--seeds", cmp_seeds, "Comma-separated seeds");
    cmp->add_option("--n-seeds", cmp_n_seeds, "Use seeds base..base+N-1")->check(CLI::PositiveNumber);
    cmp->add_option("--k", cmp_k, "auto-ratio | ratio:T | auto-suggest[:KMAX] | manual spec");
    cmp->add_option("--mode", cmp_mode, "full | 2d | random");
    cmp->add_option("--n", cmp_n, "figure1: samples per class")->check(CLI::PositiveNumber);
    cmp->add_option("--dim", cmp_dim, "Feature dimension")->check(CLI::PositiveNumber);
    cmp->add_option("--overlap", cmp_overlap, "figure1 overlap");
    cmp->add_option("--separation", cmp_sep, "figure1 mode separation");
    cmp->add_option("--noise", cmp_noise, "Noise sigma");
    cmp->add_option("--counts", cmp_counts, "imbalanced: per-class counts");
    auto* cmp_tf_opt = cmp->add_option("--test-fraction", cmp_test_fraction, "Test fraction");
    cmp->add_option("--text-out", cmp_text_out, "Plain-text summary path");
    cmp->add_option("--csv-out", cmp_csv_out, "Per-seed CSV path");

    // serve
    auto* srv = app.add_subcommand("serve", "HTTP service for interactive K selection");
    std::string srv_data, srv_host = "127.0.0.1", srv_ui, srv_reports;
    int srv_port = 8080;
    srv->add_option("--data", srv_data, "Labelled dataset")->required();
    srv->add_option("--host", srv_host, "Bind address");
    srv->add_option("--port", srv_port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    srv->add_option("--ui-dir", srv_ui, "Static files served at /");
    srv->add_option("--report-dir", srv_reports, "Directory for finished training reports");

    for (auto* s : app.get_subcommands({})) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        PipelineConfig pc;
        if (!g.config_path.empty()) pc = load_pipeline_config(g.config_path);
        const std::uint64_t seed = g.seed_opt->count() > 0 ? g.seed : pc.seed;

        if (gen->parsed()) {
            LabeledDataset ds;
            if (gen_kind == "figure1") {
                synth::Figure1Config c;
                c.n_per_class = gen_n;
                c.dim = gen_dim;
                c.overlap = gen_overlap;
                c.mode_separation = gen_sep;
                if (gen_noise >= 0.0) c.noise_sigma = gen_noise;
                c.seed = seed;
                ds = synth::gen_figure1(c).dataset;
            } else if (gen_kind == "imbalanced") {
                synth::ImbalancedConfig c;
                c.counts = gen_counts.empty() ? std::vector<int>{9, 29, 17} : parse_int_list(gen_counts, "--counts");
                c.dim = gen_dim;
                if (gen_noise >= 0.0) c.noise_sigma = gen_noise;
                c.seed = seed;
                ds = synth::gen_imbalanced(c);
            } else {
                synth::SubspaceConfig c;
                c.ambient_dim = gen_ambient;
                c.subspace_dims = parse_int_list(gen_subdims, "--subspace-dims");
                c.n_per_subspace = gen_n;
                if (gen_noise >= 0.0) c.noise_sigma = gen_noise;
                c.seed = seed;
                const auto s = synth::gen_subspaces(c);
                ds.features = s.points;
                ds.labels = s.truth;
                for (std::size_t k = 0; k < c.subspace_dims.size(); ++k) ds.class_names.push_back("s" + std::to_string(k));
                for (Eigen::Index i = 0; i < s.points.rows(); ++i) ds.sample_ids.push_back("p" + std::to_string(i));
            }
            const std::string path = out_path(g, "data.csv", pc);
            if (!gen_test_out.empty()) {
                auto [train, test] = split_stratified(ds, SplitSpec{gen_test_fraction, seed, true});
                save_dataset(train, path, format_from_path(path));
                save_dataset(test, gen_test_out, format_from_path(gen_test_out));
            } else {
                save_dataset(ds, path, format_from_path(path));
            }
            return 0;
        }

        if (emb->parsed()) {
            const Points p = load_points(emb_data);
            emb_opts.seed = seed;
            const auto kind = extractor_kind_from_string(emb_extractor);
            const Eigen::MatrixXd X = FeatureExtractor::fit(p.X, kind).apply(p.X);
            const auto r = tsne::tsne(X, emb_opts);
            const std::string path = out_path(g, "embedding.csv", pc);
            write_output(path, coords_csv(p.ids, r.Y), out);
            write_output(emb_kl_out.empty() ? sibling(path, "_kl.csv") : emb_kl_out, kl_csv(r), out);
            return 0;
        }

        if (clu->parsed()) {
            const Points p = load_points(clu_data);
            const int n = static_cast<int>(p.X.rows());
            std::vector<int> labels;
            if (clu_method == "ssc") {
                labels = ssc::ssc(p.X.transpose(), clu_k, clu_lambda, seed);
            } else {
                if (clu_k > n) fail(Errc::KTooLarge, "k exceeds the sample count");
                labels = ssc::random_partition(n, clu_k, seed);
            }
            std::string s = "id,cluster\n";
            for (int i = 0; i < n; ++i) s += p.ids[static_cast<std::size_t>(i)] + "," + std::to_string(labels[static_cast<std::size_t>(i)]) + "\n";
            write_output(out_path(g, "clusters.csv", pc), s, out);
            return 0;
        }

        if (sub->parsed()) {
            const LabeledDataset ds = load_labeled(sub_data);
            ds.validate(true);
            const auto fx = FeatureExtractor::fit(ds.features, extractor_kind_from_string(sub_extractor));
            const LabeledDataset ext = ds.with_features(fx.apply(ds.features));
            const ClusterMode mode = cluster_mode_from_string(sub_mode);

            std::optional<Eigen::MatrixXd> embedding;
            if (mode == ClusterMode::Ssc2d || sub_method == "suggest") {
                if (!sub_embedding.empty()) {
                    embedding = load_embedding(sub_embedding, ds.sample_ids);
                } else {
                    auto opts = pc.sfm.tsne;
                    opts.seed = derive_seed(seed, 7);
                    embedding = tsne::tsne(ext.features, opts).Y;
                }
            }

            std::vector<int> K;
            std::string source;
            if (sub_method == "ratio") {
                K = ratio_rule_k(ds.class_counts(), sub_t_opt->count() > 0 ? std::optional<double>(sub_t) : std::nullopt);
                source = "ratio_rule";
            } else if (sub_method == "manual") {
                if (sub_k.empty()) fail(Errc::Usage, "--method manual needs --k");
                K = parse_k_spec(sub_k, ds.class_names);
                source = "manual";
            } else {
                K = suggest_k(*embedding, ds, sub_kmax, derive_seed(seed, 101), sub_lambda);
                source = "suggest";
            }

            SubdivideOptions opts;
            opts.mode = mode;
            opts.lambda_rel = sub_lambda;
            opts.seed = seed;
            opts.min_sub_size = sub_min_size;
            if (mode == ClusterMode::Ssc2d) opts.embedding = embedding;
            auto map = subdivide(ext, K, opts);
            map.k_source = source;
            json doc = map.to_json(true);
            doc["sample_ids"] = ds.sample_ids;
            write_output(out_path(g, "subdivision.json", pc), doc.dump(2) + "\n", out);
            return 0;
        }

        if (tr->parsed()) {
            const std::string data = !tr_data.empty() ? tr_data : pc.train_path.value_or("");
            const LabeledDataset ds = load_labeled(data);
            SfmConfig cfg = pc.sfm;
            cfg.seed = seed;
            if (!tr_mode.empty()) cfg.mode = cluster_mode_from_string(tr_mode);
            if (tr_lr_opt->count()) cfg.hyper.learning_rate = tr_hyper.learning_rate;
            if (tr_epochs_opt->count()) cfg.hyper.epochs = tr_hyper.epochs;
            if (tr_l2_opt->count()) cfg.hyper.l2 = tr_hyper.l2;
            cfg.hyper.seed = seed;
            if (tr_lambda_opt->count()) cfg.lambda_rel = tr_lambda;
            if (tr_ext_opt->count()) cfg.extractor = extractor_kind_from_string(tr_extractor);
            if (tr_pca_opt->count()) cfg.pca_dim = tr_pca_dim;
            if (tr_perp_opt->count()) cfg.tsne.perplexity = tr_perplexity;
            if (tr_iters_opt->count()) cfg.tsne.iters = tr_tsne_iters;
            if (g.seed_opt->count() || g.config_path.empty()) cfg.tsne.seed = derive_seed(seed, 7);
            if (tr_warm) cfg.warm_start = true;

            TrainInputs inputs;
            if (!tr_subdivision.empty()) {
                if (!tr_k.empty()) fail(Errc::Usage, "--subdivision and --k are mutually exclusive");
                const json doc = json::parse(io::read_file(tr_subdivision));
                inputs.subdivision = SubdivisionMap::from_json(doc);
                if (doc.contains("sample_ids") && doc["sample_ids"].get<std::vector<std::string>>() != ds.sample_ids)
                    fail(Errc::LengthMismatch, "subdivision file was made for a different dataset");
            } else if (!tr_k.empty()) {
                cfg.k_source = parse_k_source(tr_k, ds.class_names);
            } else {
                resolve_named_k(cfg, pc, ds.class_names);
                if (cfg.k_source.kind == KSource::Kind::Manual && cfg.k_source.K.empty())
                    fail(Errc::Usage, "train needs --k, --subdivision or a k_source in the config");
            }
            if (!tr_embedding.empty()) inputs.embedding = load_embedding(tr_embedding, ds.sample_ids);

            const auto model = train_sfm(ds, cfg, inputs);
            const std::string path = out_path(g, "model.json", pc);
            if (path == "-") out << model.to_json().dump(2) << "\n";
            else {
                if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
                save_model(model, path);
            }
            return 0;
        }

        if (pr->parsed()) {
            const auto model = load_model(pr_model);
            const Points p = load_points(pr_data);
            const auto b = predict_sfm_batch(model, p.X);
            std::string s = "id,R,label";
            for (const auto& name : model.class_names) s += ",O_" + name;
            for (int k = 0; k < model.map.M; ++k) s += ",V_" + std::to_string(k);
            s += "\n";
            for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
                const int R = b.R[static_cast<std::size_t>(i)];
                s += p.ids[static_cast<std::size_t>(i)] + "," + std::to_string(R) + "," +
                     model.class_names[static_cast<std::size_t>(R)];
                for (Eigen::Index c = 0; c < b.O.cols(); ++c) s += "," + io::format_double(b.O(i, c));
                for (Eigen::Index k = 0; k < b.V.cols(); ++k) s += "," + io::format_double(b.V(i, k));
                s += "\n";
            }
            write_output(out_path(g, "predictions.csv", pc), s, out);
            return 0;
        }

        if (ev->parsed()) {
            const auto model = load_model(ev_model);
            LoadOptions lo;
            lo.class_names = model.class_names;
            lo.require_all_classes = false;
            const LabeledDataset test = load_dataset(ev_data, format_from_path(ev_data), lo);
            const auto report = eval::evaluate(model, test);
            write_output(out_path(g, "report.json", pc), report.to_json().dump(2) + "\n", out);
            const std::string text = report.to_text(model.class_names);
            if (!ev_text_out.empty()) write_output(ev_text_out, text, out);
            else if (!g.out.empty()) out << text;
            return 0;
        }

        if (cmp->parsed()) {
            eval::GeneratorConfig gen_cfg = pc.generator;
            if (!cmp_generator.empty()) {
                gen_cfg.kind = cmp_generator == "figure1"      ? eval::GeneratorConfig::Kind::Figure1
                               : cmp_generator == "imbalanced" ? eval::GeneratorConfig::Kind::Imbalanced
                                                               : eval::GeneratorConfig::Kind::File;
            }
            if (gen_cfg.kind == eval::GeneratorConfig::Kind::Figure1 && cmp_generator == "figure1") {
                gen_cfg.figure1.n_per_class = cmp_n;
                gen_cfg.figure1.dim = cmp_dim;
                gen_cfg.figure1.overlap = cmp_overlap;
                gen_cfg.figure1.mode_separation = cmp_sep;
                if (cmp_noise >= 0.0) gen_cfg.figure1.noise_sigma = cmp_noise;
            }
            if (gen_cfg.kind == eval::GeneratorConfig::Kind::Imbalanced && cmp_generator == "imbalanced") {
                if (!cmp_counts.empty()) gen_cfg.imbalanced.counts = parse_int_list(cmp_counts, "--counts");
                gen_cfg.imbalanced.dim = cmp_dim;
                if (cmp_noise >= 0.0) gen_cfg.imbalanced.noise_sigma = cmp_noise;
            }
            if (gen_cfg.kind == eval::GeneratorConfig::Kind::File) {
                if (!cmp_data.empty()) gen_cfg.path = cmp_data;
                else if (pc.train_path) gen_cfg.path = *pc.train_path;
                if (gen_cfg.path.empty()) fail(Errc::Usage, "--generator file needs --data");
            }

            std::vector<std::uint64_t> seeds;
            if (!cmp_seeds.empty()) {
                for (int s : parse_int_list(cmp_seeds, "--seeds")) {
                    if (s < 0) fail(Errc::Usage, "--seeds must be non-negative");
                    seeds.push_back(static_cast<std::uint64_t>(s));
                }
            } else if (cmp_n_seeds > 0) {
                for (int i = 0; i < cmp_n_seeds; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
            } else if (!pc.seeds.empty()) {
                seeds = pc.seeds;
            } else {
                seeds = {seed};
            }

            SfmConfig cfg = pc.sfm;
            if (!cmp_mode.empty()) cfg.mode = cluster_mode_from_string(cmp_mode);
            std::vector<std::string> names;
            if (gen_cfg.kind == eval::GeneratorConfig::Kind::File) names = load_dataset(gen_cfg.path).class_names;
            else if (gen_cfg.kind == eval::GeneratorConfig::Kind::Figure1) names = {"c0", "c1", "c2", "c3"};
            else
                for (std::size_t c = 0; c < gen_cfg.imbalanced.counts.size(); ++c) names.push_back("c" + std::to_string(c));
            if (!cmp_k.empty()) cfg.k_source = parse_k_source(cmp_k, names);
            else resolve_named_k(cfg, pc, names);
            if (cfg.k_source.kind == KSource::Kind::Manual && cfg.k_source.K.empty()) cfg.k_source = KSource::ratio();

            const double tf = cmp_tf_opt->count() ? cmp_test_fraction : pc.test_fraction;
            const auto report = eval::compare_experiment(gen_cfg, cfg, seeds, tf);
            write_output(out_path(g, "compare.json", pc), report.to_json().dump(2) + "\n", out);
            if (!cmp_text_out.empty()) write_output(cmp_text_out, report.to_text(), out);
            if (!cmp_csv_out.empty()) write_output(cmp_csv_out, report.to_csv(), out);
            if (cmp_text_out.empty() && !g.out.empty() && g.out != "-") out << report.to_text();
            return 0;
        }

        if (srv->parsed()) {
            service::ServiceOptions so;
            so.seed = seed;
            so.test_fraction = pc.test_fraction;
            so.base = pc.sfm;
            so.report_dir = srv_reports;
            service::Service svc(load_labeled(srv_data), so);
            service::HttpServer http(svc, srv_host, srv_port, srv_ui);
            err << "listening on http://" << srv_host << ":" << http.port() << "\n";
            http.wait();
            return 0;
        }
    } catch (const Error& e) {
        err << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const json::exception& e) {
        err << "error [MalformedFile]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace sfm::cli
