#include "sfm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <sstream>
#include <unordered_map>

#include "sfm/error.hpp"
#include "sfm/io.hpp"

namespace sfm {

using json = nlohmann::json;

std::vector<int> LabeledDataset::class_counts() const {
    std::vector<int> counts(class_names.size(), 0);
    for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
    return counts;
}

std::vector<int> LabeledDataset::indices_of_class(int cls) const {
    std::vector<int> out;
    for (int i = 0; i < num_samples(); ++i)
        if (labels[static_cast<std::size_t>(i)] == cls) out.push_back(i);
    return out;
}

LabeledDataset LabeledDataset::subset(std::span<const int> rows) const {
    LabeledDataset out;
    out.class_names = class_names;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    out.sample_ids.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = static_cast<std::size_t>(rows[r]);
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(rows[r]);
        out.labels.push_back(labels[src]);
        out.sample_ids.push_back(sample_ids[src]);
        if (!modes.empty()) out.modes.push_back(modes[src]);
    }
    return out;
}

LabeledDataset LabeledDataset::with_features(Eigen::MatrixXd new_features) const {
    LabeledDataset out = *this;
    out.features = std::move(new_features);
    return out;
}

void LabeledDataset::validate(bool require_all_classes) const {
    const auto n = static_cast<std::size_t>(features.rows());
    if (n == 0) fail(Errc::EmptyDataset, "dataset has no samples");
    if (features.cols() < 1) fail(Errc::MalformedFile, "dataset has no feature columns");
    if (class_names.size() < 2) fail(Errc::SingleClass, "dataset needs at least 2 classes");
    if (labels.size() != n || sample_ids.size() != n)
        fail(Errc::LengthMismatch, "labels/ids length does not match feature rows");
    if (!modes.empty() && modes.size() != n)
        fail(Errc::LengthMismatch, "mode metadata length does not match feature rows");
    if (!features.allFinite()) fail(Errc::NonFinite, "features contain NaN or Inf");
    const int L = num_classes();
    std::vector<int> seen(static_cast<std::size_t>(L), 0);
    for (int y : labels) {
        if (y < 0 || y >= L) fail(Errc::MalformedFile, "label index out of range");
        seen[static_cast<std::size_t>(y)] = 1;
    }
    if (require_all_classes) {
        for (int c = 0; c < L; ++c)
            if (!seen[static_cast<std::size_t>(c)])
                fail(Errc::EmptyClass, "class '" + class_names[static_cast<std::size_t>(c)] +
                                           "' has no samples");
    }
}

DataFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".json") return DataFormat::Json;
    return DataFormat::Csv;
}

namespace {

class LabelIndex {
public:
    explicit LabelIndex(const LoadOptions& options) {
        if (options.class_names) {
            fixed_ = true;
            names_ = *options.class_names;
            for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], static_cast<int>(i));
        }
    }

    int lookup(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return it->second;
        if (fixed_) fail(Errc::MalformedFile, "unknown class label '" + name + "'");
        const int id = static_cast<int>(names_.size());
        names_.push_back(name);
        index_.emplace(name, id);
        return id;
    }

    std::vector<std::string> take() { return std::move(names_); }

private:
    bool fixed_ = false;
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

void finish(LabeledDataset& ds, const LoadOptions& options) {
    if (ds.features.rows() == 0) fail(Errc::EmptyDataset, "dataset has no samples");
    if (ds.class_names.size() < 2)
        fail(Errc::SingleClass, "dataset has a single class ('" +
                                    (ds.class_names.empty() ? std::string() : ds.class_names[0]) + "')");
    if (ds.sample_ids.empty()) {
        for (int i = 0; i < ds.num_samples(); ++i) ds.sample_ids.push_back("s" + std::to_string(i));
    }
    ds.validate(options.require_all_classes);
}

}  // namespace

LabeledDataset parse_dataset_csv(std::string_view text, const LoadOptions& options) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::string> header;
    int id_col = -1, label_col = -1, mode_col = -1;
    std::vector<int> feature_cols;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    std::vector<int> labels, modes;
    LabelIndex index(options);
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (io::trim(line).empty()) continue;
        auto cells = io::split(line, ',');
        if (header.empty()) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                std::string name(cells[j]);
                const int col = static_cast<int>(j);
                if (name == "id" && j == 0) id_col = col;
                else if (name == "label") label_col = col;
                else if (name == "mode") mode_col = col;
                else feature_cols.push_back(col);
                header.push_back(std::move(name));
            }
            if (label_col < 0) fail(Errc::MalformedFile, "CSV header has no 'label' column");
            if (feature_cols.empty()) fail(Errc::MalformedFile, "CSV header has no feature columns");
            continue;
        }
        const auto where = "line " + std::to_string(line_no);
        if (cells.size() != header.size()) fail(Errc::MalformedFile, where + ": row length mismatch");
        std::vector<double> row(feature_cols.size());
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const auto cell = cells[static_cast<std::size_t>(feature_cols[j])];
            if (!io::parse_double(cell, row[j]))
                fail(Errc::MalformedFile, where + ": non-numeric feature cell '" + std::string(cell) + "'");
            if (!std::isfinite(row[j])) fail(Errc::MalformedFile, where + ": non-finite feature value");
        }
        rows.push_back(std::move(row));
        labels.push_back(index.lookup(std::string(cells[static_cast<std::size_t>(label_col)])));
        if (id_col >= 0) ids.emplace_back(cells[static_cast<std::size_t>(id_col)]);
        if (mode_col >= 0) {
            long long m = 0;
            if (!io::parse_int(cells[static_cast<std::size_t>(mode_col)], m))
                fail(Errc::MalformedFile, where + ": non-integer mode cell");
            modes.push_back(static_cast<int>(m));
        }
    }
    if (header.empty()) fail(Errc::EmptyDataset, "CSV file is empty");

    LabeledDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.labels = std::move(labels);
    ds.class_names = index.take();
    ds.sample_ids = std::move(ids);
    ds.modes = std::move(modes);
    finish(ds, options);
    return ds;
}

LabeledDataset parse_dataset_json(std::string_view text, const LoadOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Errc::MalformedFile, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("features") || !doc.contains("labels"))
        fail(Errc::MalformedFile, "JSON dataset needs 'features' and 'labels'");
    const auto& feats = doc["features"];
    const auto& labs = doc["labels"];
    if (!feats.is_array() || !labs.is_array()) fail(Errc::MalformedFile, "'features' and 'labels' must be arrays");
    if (feats.size() != labs.size()) fail(Errc::MalformedFile, "features/labels length mismatch");
    if (feats.empty()) fail(Errc::EmptyDataset, "dataset has no samples");

    LoadOptions effective = options;
    if (!effective.class_names && doc.contains("class_names"))
        effective.class_names = doc["class_names"].get<std::vector<std::string>>();
    LabelIndex index(effective);

    const std::size_t d = feats[0].is_array() ? feats[0].size() : 0;
    LabeledDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(feats.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const auto& row = feats[i];
        if (!row.is_array() || row.size() != d)
            fail(Errc::MalformedFile, "feature row " + std::to_string(i) + " has wrong length");
        for (std::size_t j = 0; j < d; ++j) {
            if (!row[j].is_number())
                fail(Errc::MalformedFile, "non-numeric feature at row " + std::to_string(i));
            const double v = row[j].get<double>();
            if (!std::isfinite(v)) fail(Errc::MalformedFile, "non-finite feature value");
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
        const auto& lab = labs[i];
        std::string name;
        if (lab.is_string()) name = lab.get<std::string>();
        else if (lab.is_number_integer()) name = std::to_string(lab.get<long long>());
        else fail(Errc::MalformedFile, "label " + std::to_string(i) + " is neither string nor integer");
        ds.labels.push_back(index.lookup(name));
    }
    if (doc.contains("ids")) {
        for (const auto& id : doc["ids"]) ds.sample_ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
    }
    if (doc.contains("modes")) ds.modes = doc["modes"].get<std::vector<int>>();
    ds.class_names = index.take();
    finish(ds, effective);
    return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const LoadOptions& options) {
    if (!std::filesystem::exists(path)) fail(Errc::Io, "no such file: " + path.string());
    const auto text = io::read_file(path);
    return format == DataFormat::Json ? parse_dataset_json(text, options) : parse_dataset_csv(text, options);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}

std::string dataset_to_csv(const LabeledDataset& ds) {
    std::string out = "id";
    for (int j = 0; j < ds.dim(); ++j) out += ",f" + std::to_string(j);
    out += ",label";
    const bool with_modes = !ds.modes.empty();
    if (with_modes) out += ",mode";
    out += '\n';
    for (int i = 0; i < ds.num_samples(); ++i) {
        const auto si = static_cast<std::size_t>(i);
        out += ds.sample_ids[si];
        for (int j = 0; j < ds.dim(); ++j) {
            out += ',';
            out += io::format_double(ds.features(i, j));
        }
        out += ',';
        out += ds.class_names[static_cast<std::size_t>(ds.labels[si])];
        if (with_modes) out += "," + std::to_string(ds.modes[si]);
        out += '\n';
    }
    return out;
}

std::string dataset_to_json(const LabeledDataset& ds) {
    json doc;
    json feats = json::array();
    for (int i = 0; i < ds.num_samples(); ++i) {
        json row = json::array();
        for (int j = 0; j < ds.dim(); ++j) row.push_back(ds.features(i, j));
        feats.push_back(std::move(row));
    }
    json labels = json::array();
    for (int y : ds.labels) labels.push_back(ds.class_names[static_cast<std::size_t>(y)]);
    doc["class_names"] = ds.class_names;
    doc["features"] = std::move(feats);
    doc["labels"] = std::move(labels);
    doc["ids"] = ds.sample_ids;
    if (!ds.modes.empty()) doc["modes"] = ds.modes;
    return doc.dump() + "\n";
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path, DataFormat format) {
    io::atomic_write(path, format == DataFormat::Json ? dataset_to_json(ds) : dataset_to_csv(ds));
}

SplitIndices split_indices(const LabeledDataset& ds, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        fail(Errc::InvalidConfig, "test_fraction must lie in (0, 1)");
    std::mt19937_64 rng(spec.seed);
    SplitIndices out;
    auto take = [&](std::vector<int> idx, int n_test) {
        std::shuffle(idx.begin(), idx.end(), rng);
        out.test.insert(out.test.end(), idx.begin(), idx.begin() + n_test);
        out.train.insert(out.train.end(), idx.begin() + n_test, idx.end());
    };
    if (spec.stratified) {
        for (int c = 0; c < ds.num_classes(); ++c) {
            auto idx = ds.indices_of_class(c);
            const int n_c = static_cast<int>(idx.size());
            if (n_c == 0) continue;
            if (n_c < 2)
                fail(Errc::ClassTooSmall, "class '" + ds.class_names[static_cast<std::size_t>(c)] +
                                              "' has fewer than 2 samples");
            int n_test = static_cast<int>(std::lround(spec.test_fraction * n_c));
            n_test = std::clamp(n_test, 1, n_c - 1);
            take(std::move(idx), n_test);
        }
    } else {
        const int n = ds.num_samples();
        if (n < 2) fail(Errc::ClassTooSmall, "need at least 2 samples to split");
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        int n_test = std::clamp(static_cast<int>(std::lround(spec.test_fraction * n)), 1, n - 1);
        take(std::move(idx), n_test);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<LabeledDataset, LabeledDataset> split_stratified(const LabeledDataset& ds, const SplitSpec& spec) {
    const auto idx = split_indices(ds, spec);
    return {ds.subset(idx.train), ds.subset(idx.test)};
}

}  // namespace sfm
