#include "sfm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "sfm/error.hpp"
#include "sfm/io.hpp"

namespace sfm::eval {

using nlohmann::json;

AccuracyMetrics accuracy_metrics(std::span<const int> preds, std::span<const int> truth, int num_classes) {
    if (preds.size() != truth.size()) fail(Errc::LengthMismatch, "predictions and truth differ in length");
    if (truth.empty()) fail(Errc::EmptyDataset, "no samples to score");
    AccuracyMetrics m;
    m.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
    for (std::size_t s = 0; s < truth.size(); ++s) {
        if (truth[s] < 0 || truth[s] >= num_classes || preds[s] < 0 || preds[s] >= num_classes)
            fail(Errc::InvalidConfig, "label out of range at sample " + std::to_string(s));
        ++m.confusion(truth[s], preds[s]);
    }
    m.accuracy = static_cast<double>(m.confusion.trace()) / static_cast<double>(truth.size());
    for (int c = 0; c < num_classes; ++c) {
        const int row = m.confusion.row(c).sum();
        if (row == 0) {
            m.empty_rows.push_back(c);
            m.per_class.push_back(0.0);
        } else {
            m.per_class.push_back(static_cast<double>(m.confusion(c, c)) / row);
        }
    }
    return m;
}

double average_precision(std::span<const double> scores, std::span<const bool> positive) {
    if (scores.size() != positive.size()) fail(Errc::LengthMismatch, "scores and positives differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    long double sum = 0.0L;
    int hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (!positive[order[r]]) continue;
        ++hits;
        sum += static_cast<long double>(hits) / static_cast<long double>(r + 1);
    }
    if (hits == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(sum / hits);
}

ApResult mean_average_precision(const Eigen::MatrixXd& scores, std::span<const int> truth) {
    if (static_cast<std::size_t>(scores.rows()) != truth.size()) fail(Errc::LengthMismatch, "scores/truth mismatch");
    if (!scores.allFinite()) fail(Errc::NonFinite, "scores contain NaN or Inf");
    const Eigen::Index L = scores.cols();
    ApResult out;
    std::vector<double> col(static_cast<std::size_t>(scores.rows()));
    std::unique_ptr<bool[]> pos(new bool[truth.size()]);
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index c = 0; c < L; ++c) {
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            col[static_cast<std::size_t>(i)] = scores(i, c);
            pos[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)] == c;
        }
        const double ap = average_precision(col, std::span<const bool>(pos.get(), truth.size()));
        out.per_class_ap.push_back(ap);
        if (std::isnan(ap)) {
            out.excluded.push_back(static_cast<int>(c));
        } else {
            sum += ap;
            ++used;
        }
    }
    if (used == 0) fail(Errc::NoPositives, "no class has a positive sample");
    out.map = sum / used;
    return out;
}

EvalReport make_report(std::span<const int> preds, const Eigen::MatrixXd& scores, std::span<const int> truth,
                       int num_classes) {
    const auto acc = accuracy_metrics(preds, truth, num_classes);
    const auto ap = mean_average_precision(scores, truth);
    EvalReport r;
    r.accuracy = acc.accuracy;
    r.per_class_accuracy = acc.per_class;
    r.confusion = acc.confusion;
    r.map_score = ap.map;
    r.per_class_ap = ap.per_class_ap;
    r.excluded_classes = ap.excluded;
    r.n_test = static_cast<int>(truth.size());
    return r;
}

EvalReport evaluate(const SfmModel& model, const LabeledDataset& test) {
    if (test.num_classes() != model.num_classes())
        fail(Errc::DimensionMismatch, "test set has a different class list than the model");
    const auto pred = predict_sfm_batch(model, test.features);
    return make_report(pred.R, pred.O, test.labels, model.num_classes());
}

namespace {
json nan_to_null(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(std::isnan(x) ? json(nullptr) : json(x));
    return out;
}
}  // namespace

json EvalReport::to_json() const {
    json doc;
    doc["accuracy"] = accuracy;
    doc["per_class_accuracy"] = per_class_accuracy;
    json conf = json::array();
    for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
        std::vector<int> row(static_cast<std::size_t>(confusion.cols()));
        for (Eigen::Index j = 0; j < confusion.cols(); ++j) row[static_cast<std::size_t>(j)] = confusion(i, j);
        conf.push_back(row);
    }
    doc["confusion"] = std::move(conf);
    doc["map"] = map_score;
    doc["per_class_ap"] = nan_to_null(per_class_ap);
    doc["excluded_classes"] = excluded_classes;
    doc["n_test"] = n_test;
    return doc;
}

std::string EvalReport::to_text(const std::vector<std::string>& class_names) const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "n_test    " << n_test << "\naccuracy  " << accuracy << "\nmAP       " << map_score << "\n";
    out << "class            acc       AP\n";
    for (std::size_t c = 0; c < per_class_accuracy.size(); ++c) {
        const auto& name = c < class_names.size() ? class_names[c] : std::to_string(c);
        out << std::left << std::setw(14) << name << std::right << std::setw(8) << per_class_accuracy[c] << " ";
        if (std::isnan(per_class_ap[c])) out << std::setw(8) << "-";
        else out << std::setw(8) << per_class_ap[c];
        out << "\n";
    }
    return out.str();
}

ArmSummary ComparisonReport::summarize(double ComparisonRecord::*field) const {
    ArmSummary s;
    if (records.empty()) return s;
    for (const auto& r : records) s.mean += r.*field;
    s.mean /= static_cast<double>(records.size());
    if (records.size() > 1) {
        double ss = 0.0;
        for (const auto& r : records) ss += (r.*field - s.mean) * (r.*field - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(records.size() - 1));
    }
    return s;
}

namespace {
struct ArmField {
    const char* name;
    double ComparisonRecord::*field;
};
constexpr ArmField kArms[] = {
    {"baseline_acc", &ComparisonRecord::baseline_acc},     {"sfm_acc", &ComparisonRecord::sfm_acc},
    {"random_sfm_acc", &ComparisonRecord::random_sfm_acc}, {"baseline_map", &ComparisonRecord::baseline_map},
    {"sfm_map", &ComparisonRecord::sfm_map},               {"random_sfm_map", &ComparisonRecord::random_sfm_map},
};
}  // namespace

json ComparisonReport::to_json() const {
    json doc;
    doc["schema_version"] = 1;
    doc["config"] = config;
    doc["seeds"] = seeds;
    json recs = json::array();
    for (const auto& r : records) {
        json j{{"seed", r.seed}, {"split_hash", r.split_hash}, {"K", r.K}};
        for (const auto& arm : kArms) j[arm.name] = r.*(arm.field);
        recs.push_back(std::move(j));
    }
    doc["records"] = std::move(recs);
    json summary;
    for (const auto& arm : kArms) {
        const auto s = summarize(arm.field);
        summary[arm.name] = {{"mean", s.mean}, {"stddev", s.stddev}};
    }
    doc["summary"] = std::move(summary);
    return doc;
}

std::string ComparisonReport::to_text() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "seed        baseline   sfm        random     K\n";
    for (const auto& r : records) {
        out << std::left << std::setw(12) << r.seed << std::right << r.baseline_acc << "     " << r.sfm_acc << "     "
            << r.random_sfm_acc << "     ";
        for (std::size_t i = 0; i < r.K.size(); ++i) out << (i ? "," : "") << r.K[i];
        out << "\n";
    }
    for (const auto& arm : kArms) {
        const auto s = summarize(arm.field);
        out << std::left << std::setw(16) << arm.name << std::right << " mean " << s.mean << "  sd " << s.stddev << "\n";
    }
    return out.str();
}

std::string ComparisonReport::to_csv() const {
    std::string out = "seed,split_hash";
    for (const auto& arm : kArms) out += std::string(",") + arm.name;
    out += "\n";
    for (const auto& r : records) {
        out += std::to_string(r.seed) + "," + std::to_string(r.split_hash);
        for (const auto& arm : kArms) out += "," + io::format_double(r.*(arm.field));
        out += "\n";
    }
    return out;
}

ComparisonReport compare_experiment(const GeneratorConfig& generator, const SfmConfig& pipeline,
                                    std::span<const std::uint64_t> seeds, double test_fraction) {
    if (seeds.empty()) fail(Errc::InvalidConfig, "compare needs at least one seed");
    ComparisonReport report;
    report.seeds.assign(seeds.begin(), seeds.end());
    report.config = {{"pipeline", config_to_json(pipeline)}, {"test_fraction", test_fraction}};

    std::optional<LabeledDataset> file_data;
    if (generator.kind == GeneratorConfig::Kind::File) file_data = load_dataset(generator.path);

    for (auto seed : seeds) {
        LabeledDataset data;
        switch (generator.kind) {
            case GeneratorConfig::Kind::Figure1: {
                auto cfg = generator.figure1;
                cfg.seed = seed;
                data = synth::gen_figure1(cfg).dataset;
                break;
            }
            case GeneratorConfig::Kind::Imbalanced: {
                auto cfg = generator.imbalanced;
                cfg.seed = seed;
                data = synth::gen_imbalanced(cfg);
                break;
            }
            case GeneratorConfig::Kind::File: data = *file_data; break;
        }
        const auto split = split_indices(data, SplitSpec{test_fraction, seed, true});
        const auto train = data.subset(split.train);
        const auto test = data.subset(split.test);

        ComparisonRecord rec;
        rec.seed = seed;
        rec.split_hash = io::fnv1a(split.test);

        auto sfm_cfg = pipeline;
        sfm_cfg.seed = seed;
        sfm_cfg.tsne.seed = derive_seed(seed, 7);
        const auto sfm_model = train_sfm(train, sfm_cfg);
        rec.K = sfm_model.map.K;

        auto base_cfg = sfm_cfg;
        base_cfg.k_source = KSource::manual(std::vector<int>(static_cast<std::size_t>(train.num_classes()), 1));
        base_cfg.mode = ClusterMode::SscFullDim;
        const auto base_model = train_sfm(train, base_cfg);

        auto rand_cfg = sfm_cfg;
        rand_cfg.k_source = KSource::manual(rec.K);
        rand_cfg.mode = ClusterMode::Random;
        const auto rand_model = train_sfm(train, rand_cfg);

        const auto rb = evaluate(base_model, test);
        const auto rs = evaluate(sfm_model, test);
        const auto rr = evaluate(rand_model, test);
        rec.baseline_acc = rb.accuracy;
        rec.sfm_acc = rs.accuracy;
        rec.random_sfm_acc = rr.accuracy;
        rec.baseline_map = rb.map_score;
        rec.sfm_map = rs.map_score;
        rec.random_sfm_map = rr.map_score;
        report.records.push_back(std::move(rec));
    }
    return report;
}

}  // namespace sfm::eval
