#include "sfm/subdivision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sfm/error.hpp"
#include "sfm/parallel.hpp"
#include "sfm/ssc.hpp"

namespace sfm {

using nlohmann::json;

std::string to_string(ClusterMode mode) {
    switch (mode) {
        case ClusterMode::SscFullDim: return "ssc_full_dim";
        case ClusterMode::Ssc2d: return "ssc_2d";
        case ClusterMode::Random: return "random";
        case ClusterMode::Manual: return "manual";
    }
    return "ssc_full_dim";
}

ClusterMode cluster_mode_from_string(const std::string& name) {
    if (name == "ssc_full_dim" || name == "full") return ClusterMode::SscFullDim;
    if (name == "ssc_2d" || name == "2d") return ClusterMode::Ssc2d;
    if (name == "random") return ClusterMode::Random;
    if (name == "manual") return ClusterMode::Manual;
    fail(Errc::InvalidConfig, "unknown clustering mode '" + name + "'");
}

void SubdivisionMap::validate_structure() const {
    const int L = static_cast<int>(K.size());
    if (L < 1) fail(Errc::InvalidConfig, "subdivision has no classes");
    int total = 0;
    for (int k : K) {
        if (k < 1) fail(Errc::InvalidConfig, "every K_i must be >= 1");
        total += k;
    }
    if (total != M) fail(Errc::InvalidConfig, "M does not equal the sum of K");
    if (static_cast<int>(owner.size()) != M) fail(Errc::InvalidConfig, "owner table must have M entries");
    std::vector<int> owned(static_cast<std::size_t>(L), 0);
    for (int o : owner) {
        if (o < 0 || o >= L) fail(Errc::InvalidConfig, "owner index out of range");
        ++owned[static_cast<std::size_t>(o)];
    }
    for (int i = 0; i < L; ++i)
        if (owned[static_cast<std::size_t>(i)] != K[static_cast<std::size_t>(i)])
            fail(Errc::InvalidConfig, "class " + std::to_string(i) + " does not own exactly K_i subcategories");
}

void SubdivisionMap::validate(std::span<const int> labels) const {
    validate_structure();
    if (sub_labels.size() != labels.size()) fail(Errc::LengthMismatch, "sub_labels length does not match samples");
    std::vector<int> used(static_cast<std::size_t>(M), 0);
    for (std::size_t s = 0; s < labels.size(); ++s) {
        const int sub = sub_labels[s];
        if (sub < 0 || sub >= M) fail(Errc::InvalidConfig, "sub-label out of range");
        if (owner[static_cast<std::size_t>(sub)] != labels[s])
            fail(Errc::InvalidConfig, "sample " + std::to_string(s) + " sits in a subcategory of another class");
        used[static_cast<std::size_t>(sub)] = 1;
    }
    for (int k = 0; k < M; ++k)
        if (!used[static_cast<std::size_t>(k)])
            fail(Errc::EmptyClass, "subcategory " + std::to_string(k) + " has no samples");
}

json SubdivisionMap::to_json(bool with_samples) const {
    json doc;
    doc["K"] = K;
    doc["M"] = M;
    doc["owner"] = owner;
    doc["method"] = to_string(mode);
    doc["k_source"] = k_source;
    if (with_samples) doc["sub_labels"] = sub_labels;
    return doc;
}

SubdivisionMap SubdivisionMap::from_json(const json& doc) {
    SubdivisionMap map;
    try {
        map.K = doc.at("K").get<std::vector<int>>();
        map.owner = doc.at("owner").get<std::vector<int>>();
        map.M = doc.contains("M") ? doc.at("M").get<int>() : static_cast<int>(map.owner.size());
        if (doc.contains("sub_labels")) map.sub_labels = doc.at("sub_labels").get<std::vector<int>>();
        if (doc.contains("method")) map.mode = cluster_mode_from_string(doc.at("method").get<std::string>());
        if (doc.contains("k_source")) map.k_source = doc.at("k_source").get<std::string>();
    } catch (const json::exception& e) {
        fail(Errc::MalformedFile, std::string("bad subdivision document: ") + e.what());
    }
    map.validate_structure();
    return map;
}

SubdivisionMap identity_subdivision(std::span<const int> labels, int num_classes) {
    SubdivisionMap map;
    map.K.assign(static_cast<std::size_t>(num_classes), 1);
    map.M = num_classes;
    map.owner.resize(static_cast<std::size_t>(num_classes));
    std::iota(map.owner.begin(), map.owner.end(), 0);
    map.sub_labels.assign(labels.begin(), labels.end());
    map.mode = ClusterMode::Manual;
    return map;
}

FusionMatrix build_fusion_matrix(const SubdivisionMap& map) {
    map.validate_structure();
    FusionMatrix fm;
    fm.W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(map.K.size()), map.M);
    for (int k = 0; k < map.M; ++k) fm.W(map.owner[static_cast<std::size_t>(k)], k) = 1.0;
    return fm;
}

double round_half_to_even(double x) {
    const double lo = std::floor(x);
    const double frac = x - lo;
    if (frac > 0.5) return lo + 1.0;
    if (frac < 0.5) return lo;
    return std::fmod(lo, 2.0) == 0.0 ? lo : lo + 1.0;
}

std::vector<int> ratio_rule_k(std::span<const int> counts, std::optional<double> t) {
    if (counts.empty()) fail(Errc::InvalidCounts, "no class counts given");
    for (int c : counts)
        if (c < 1) fail(Errc::InvalidCounts, "every class count must be >= 1");
    const double denom = t ? *t : static_cast<double>(*std::min_element(counts.begin(), counts.end()));
    if (!(denom > 0.0) || !std::isfinite(denom)) fail(Errc::InvalidCounts, "t must be a positive finite number");
    std::vector<int> K;
    K.reserve(counts.size());
    for (int c : counts) K.push_back(std::max(1, static_cast<int>(round_half_to_even(c / denom))));
    return K;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finaliser over (base, stream)
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

// Relabels to 0..k-1 in order of first use, then folds clusters below
// min_size into the sibling with the nearest centroid (in `space` rows).
std::vector<int> compact_and_merge(std::vector<int> local, const Eigen::MatrixXd& space, int min_size) {
    auto compact = [](std::vector<int>& labels) {
        std::vector<int> remap;
        int max_label = *std::max_element(labels.begin(), labels.end());
        remap.assign(static_cast<std::size_t>(max_label) + 1, -1);
        int next = 0;
        // keep the original ordering of surviving cluster ids
        std::vector<int> present(remap.size(), 0);
        for (int l : labels) present[static_cast<std::size_t>(l)] = 1;
        for (std::size_t l = 0; l < present.size(); ++l)
            if (present[l]) remap[l] = next++;
        for (int& l : labels) l = remap[static_cast<std::size_t>(l)];
        return next;
    };

    int k = compact(local);
    while (k > 1) {
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int l : local) ++sizes[static_cast<std::size_t>(l)];
        int victim = -1;
        for (int c = 0; c < k; ++c)
            if (sizes[static_cast<std::size_t>(c)] < min_size &&
                (victim < 0 || sizes[static_cast<std::size_t>(c)] < sizes[static_cast<std::size_t>(victim)]))
                victim = c;
        if (victim < 0) break;

        Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, space.cols());
        for (std::size_t s = 0; s < local.size(); ++s)
            centroids.row(local[s]) += space.row(static_cast<Eigen::Index>(s));
        for (int c = 0; c < k; ++c) centroids.row(c) /= sizes[static_cast<std::size_t>(c)];

        int target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == victim) continue;
            const double d = (centroids.row(c) - centroids.row(victim)).squaredNorm();
            if (d < best) {
                best = d;
                target = c;
            }
        }
        for (int& l : local)
            if (l == victim) l = target;
        k = compact(local);
    }
    return local;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(idx[r]);
    return out;
}

}  // namespace

SubdivisionMap subdivide(const LabeledDataset& ds, std::span<const int> K, const SubdivideOptions& options) {
    const int L = ds.num_classes();
    const int n = ds.num_samples();
    if (static_cast<int>(K.size()) != L)
        fail(Errc::InvalidConfig, "K has " + std::to_string(K.size()) + " entries for " + std::to_string(L) + " classes");
    const auto counts = ds.class_counts();
    for (int i = 0; i < L; ++i) {
        const int k = K[static_cast<std::size_t>(i)];
        if (k < 1) fail(Errc::InvalidConfig, "K for class '" + ds.class_names[static_cast<std::size_t>(i)] + "' must be >= 1");
        if (k > counts[static_cast<std::size_t>(i)])
            fail(Errc::KExceedsClassSize, "K = " + std::to_string(k) + " exceeds the " +
                                              std::to_string(counts[static_cast<std::size_t>(i)]) +
                                              " samples of class '" + ds.class_names[static_cast<std::size_t>(i)] + "'");
    }
    if (options.mode == ClusterMode::Ssc2d && (!options.embedding || options.embedding->rows() != n))
        fail(Errc::MissingEmbedding, "ssc_2d subdivision needs a 2-D embedding of every sample");
    if (options.mode == ClusterMode::Manual && static_cast<int>(options.manual_assignments.size()) != n)
        fail(Errc::InvalidConfig, "manual subdivision needs one assignment per sample");

    const Eigen::MatrixXd& space = options.mode == ClusterMode::Ssc2d ? *options.embedding : ds.features;
    std::vector<std::vector<int>> members(static_cast<std::size_t>(L));
    for (int c = 0; c < L; ++c) members[static_cast<std::size_t>(c)] = ds.indices_of_class(c);
    std::vector<std::vector<int>> local(static_cast<std::size_t>(L));

    parallel_for(L, [&](int c) {
        const auto& idx = members[static_cast<std::size_t>(c)];
        const int k = K[static_cast<std::size_t>(c)];
        auto& out = local[static_cast<std::size_t>(c)];
        if (idx.empty()) return;
        if (k == 1) {
            out.assign(idx.size(), 0);
            return;
        }
        const auto seed = derive_seed(options.seed, static_cast<std::uint64_t>(c));
        const Eigen::MatrixXd pts = rows_of(space, idx);
        switch (options.mode) {
            case ClusterMode::SscFullDim:
            case ClusterMode::Ssc2d: out = ssc::ssc(pts.transpose(), k, options.lambda_rel, seed); break;
            case ClusterMode::Random: out = ssc::random_partition(static_cast<int>(idx.size()), k, seed); break;
            case ClusterMode::Manual:
                for (int s : idx) {
                    const int a = options.manual_assignments[static_cast<std::size_t>(s)];
                    if (a < 0 || a >= k)
                        fail(Errc::InvalidConfig, "manual assignment of sample " + std::to_string(s) + " outside [0, K)");
                    out.push_back(a);
                }
                break;
        }
        out = compact_and_merge(std::move(out), pts, options.min_sub_size);
    });

    SubdivisionMap map;
    map.mode = options.mode;
    map.sub_labels.assign(static_cast<std::size_t>(n), 0);
    int offset = 0;
    for (int c = 0; c < L; ++c) {
        const auto& idx = members[static_cast<std::size_t>(c)];
        const auto& lab = local[static_cast<std::size_t>(c)];
        const int kc = lab.empty() ? 1 : *std::max_element(lab.begin(), lab.end()) + 1;
        for (std::size_t r = 0; r < idx.size(); ++r)
            map.sub_labels[static_cast<std::size_t>(idx[r])] = offset + lab[r];
        map.K.push_back(kc);
        for (int j = 0; j < kc; ++j) map.owner.push_back(c);
        offset += kc;
    }
    map.M = offset;
    map.validate(ds.labels);
    return map;
}

double silhouette(const Eigen::MatrixXd& X, std::span<const int> labels) {
    const Eigen::Index n = X.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) fail(Errc::LengthMismatch, "silhouette labels/rows mismatch");
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    const auto present = std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
    if (present < 2) return std::numeric_limits<double>::quiet_NaN();

    double total = 0.0;
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (X.row(i) - X.row(j)).norm();
        const int own = labels[static_cast<std::size_t>(i)];
        const int own_size = sizes[static_cast<std::size_t>(own)];
        if (own_size < 2) continue;  // singleton contributes 0
        const double a = sums[static_cast<std::size_t>(own)] / (own_size - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != own && sizes[static_cast<std::size_t>(c)] > 0)
                b = std::min(b, sums[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

std::vector<int> suggest_k(const Eigen::MatrixXd& embedding, const LabeledDataset& ds, int k_max,
                           std::uint64_t seed, double lambda_rel) {
    if (embedding.rows() != ds.num_samples() || embedding.cols() != 2)
        fail(Errc::MissingEmbedding, "suggest_k needs 2-D coordinates for every sample");
    const int L = ds.num_classes();
    std::vector<int> out(static_cast<std::size_t>(L), 1);
    parallel_for(L, [&](int c) {
        const auto idx = ds.indices_of_class(c);
        const int n_c = static_cast<int>(idx.size());
        const Eigen::MatrixXd pts = rows_of(embedding, idx);
        double best = -std::numeric_limits<double>::infinity();
        int best_k = 1;
        for (int k = 2; k <= std::min(k_max, n_c); ++k) {
            const auto labels = ssc::ssc(pts.transpose(), k, lambda_rel, derive_seed(seed, static_cast<std::uint64_t>(c)));
            const double s = silhouette(pts, labels);
            if (std::isfinite(s) && s > best) {
                best = s;
                best_k = k;
            }
        }
        out[static_cast<std::size_t>(c)] = best >= kSuggestSilhouetteFloor ? best_k : 1;
    });
    return out;
}

}  // namespace sfm
