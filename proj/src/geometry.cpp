#include "gramvec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gramvec/embedding.hpp"
#include "gramvec/error.hpp"
#include "gramvec/rng.hpp"

namespace gramvec {

namespace {

// Relative variance below which a further component is considered noise.
constexpr double kRankTol = 1e-12;
constexpr double kPowerTol = 1e-13;
constexpr int kPowerMaxIters = 100000;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Dominant eigenpair of the symmetric matrix C (dim x dim, row-major),
// staying orthogonal to the already-extracted components.
std::pair<double, std::vector<double>> dominant_eigenpair(
    const std::vector<double>& C, int dim,
    const std::vector<std::vector<double>>& found, int component_index) {
    // Deterministic start; the index folds in so successive components do not
    // begin from the same direction.
    Rng rng(combine_seed({0x9c0ffee1u, static_cast<std::uint64_t>(component_index)}));
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.normal();

    const auto orthogonalize = [&](std::vector<double>& u) {
        for (const std::vector<double>& f : found) {
            const double proj = dot(u, f);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] -= proj * f[i];
        }
    };
    const auto norm_of = [](const std::vector<double>& u) {
        return std::sqrt(dot(u, u));
    };

    orthogonalize(v);
    double n = norm_of(v);
    if (n == 0.0) {
        v.assign(v.size(), 0.0);
        return {0.0, v};
    }
    for (double& x : v) x /= n;

    std::vector<double> w(v.size());
    double lambda = 0.0;
    for (int iter = 0; iter < kPowerMaxIters; ++iter) {
        for (int i = 0; i < dim; ++i) {
            double s = 0.0;
            const double* row = C.data() + static_cast<std::size_t>(i) * dim;
            for (int j = 0; j < dim; ++j) s += row[j] * v[j];
            w[i] = s;
        }
        orthogonalize(w);
        lambda = dot(v, w);
        const double wn = norm_of(w);
        if (wn == 0.0) {
            return {0.0, v};
        }
        for (double& x : w) x /= wn;
        double delta = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            delta = std::max(delta, std::abs(w[i] - v[i]));
        }
        v = w;
        if (delta < kPowerTol) {
            break;
        }
    }
    return {lambda, v};
}

void fix_sign(std::vector<double>& v) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            arg = i;
        }
    }
    if (v[arg] < 0.0) {
        for (double& x : v) x = -x;
    }
}

double mean_pairwise_cosine(const std::vector<const std::vector<double>*>& xs,
                            const std::vector<const std::vector<double>*>& ys,
                            bool same_set) {
    double sum = 0.0;
    long count = 0;
    if (same_set) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = i + 1; j < xs.size(); ++j) {
                sum += cosine(*xs[i], *xs[j]);
                ++count;
            }
        }
    } else {
        for (const auto* x : xs) {
            for (const auto* y : ys) {
                sum += cosine(*x, *y);
                ++count;
            }
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

Projection pca_project(const std::vector<std::vector<double>>& vectors, int out_dim) {
    const std::size_t n = vectors.size();
    if (n < 2) {
        throw ArgumentError("geometry: need at least 2 vectors");
    }
    const int dim = static_cast<int>(vectors[0].size());
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != dim) {
            throw ArgumentError("geometry: vectors have mixed widths");
        }
    }
    if (out_dim < 1 || out_dim > dim) {
        throw ArgumentError("geometry: out_dim must be in [1, dim]");
    }

    // Mean-center.
    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
    for (const auto& v : vectors) {
        for (int j = 0; j < dim; ++j) mean[j] += v[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    std::vector<std::vector<double>> centered(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) centered[i][j] = vectors[i][j] - mean[j];
    }

    // Covariance (unbiased).
    std::vector<double> C(static_cast<std::size_t>(dim) * dim, 0.0);
    for (const auto& v : centered) {
        for (int i = 0; i < dim; ++i) {
            const double vi = v[i];
            double* row = C.data() + static_cast<std::size_t>(i) * dim;
            for (int j = i; j < dim; ++j) row[j] += vi * v[j];
        }
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            const double value = C[static_cast<std::size_t>(i) * dim + j] /
                                 static_cast<double>(n - 1);
            C[static_cast<std::size_t>(i) * dim + j] = value;
            C[static_cast<std::size_t>(j) * dim + i] = value;
        }
    }
    double total_var = 0.0;
    for (int i = 0; i < dim; ++i) total_var += C[static_cast<std::size_t>(i) * dim + i];
    if (total_var <= 0.0) {
        throw RankDeficiencyError("geometry: all points are identical (usable rank 0)", 0);
    }

    Projection projection;
    std::vector<double> deflated = C;
    for (int c = 0; c < out_dim; ++c) {
        auto [lambda, v] = dominant_eigenpair(deflated, dim, projection.components, c);
        if (!(lambda > kRankTol * total_var)) {
            throw RankDeficiencyError(
                "geometry: variance exhausted after " + std::to_string(c) +
                    " components (usable rank " + std::to_string(c) + ")",
                c);
        }
        fix_sign(v);
        // Deflate: C <- C - lambda v v^T.
        for (int i = 0; i < dim; ++i) {
            double* row = deflated.data() + static_cast<std::size_t>(i) * dim;
            for (int j = 0; j < dim; ++j) row[j] -= lambda * v[i] * v[j];
        }
        projection.explained_variance.push_back(lambda / total_var);
        projection.components.push_back(std::move(v));
    }

    projection.coords.assign(n, std::vector<double>(out_dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < out_dim; ++c) {
            projection.coords[i][c] = dot(centered[i], projection.components[c]);
        }
    }
    return projection;
}

void save_projection_csv(const Projection& projection,
                         const std::vector<std::string>& labels,
                         const std::vector<std::string>& categories,
                         const std::string& path) {
    if (labels.size() != projection.coords.size() ||
        categories.size() != projection.coords.size()) {
        throw ArgumentError("geometry: labels/categories do not match the points");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("geometry: cannot open '" + path + "' for writing");
    }
    const std::size_t width =
        projection.coords.empty() ? 0 : projection.coords[0].size();
    out << "label,category";
    for (std::size_t c = 0; c < width; ++c) {
        if (c == 0) {
            out << ",x";
        } else if (c == 1) {
            out << ",y";
        } else {
            out << ",c" << c + 1;
        }
    }
    out << '\n';
    char text[64];
    for (std::size_t i = 0; i < projection.coords.size(); ++i) {
        out << labels[i] << ',' << categories[i];
        for (const double value : projection.coords[i]) {
            std::snprintf(text, sizeof(text), "%.6f", value);
            out << ',' << text;
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("geometry: failed while writing '" + path + "'");
    }
}

PairDifferenceReport pair_difference_analysis(
    const std::map<std::string, std::vector<std::pair<std::vector<double>,
                                                      std::vector<double>>>>& pairs) {
    if (pairs.size() < 2) {
        throw ArgumentError("geometry: need at least 2 categories");
    }
    PairDifferenceReport report;
    std::map<std::string, std::vector<const std::vector<double>*>> by_category;

    for (const auto& [category, list] : pairs) {
        if (list.size() < 2) {
            throw ArgumentError("geometry: category '" + category +
                                "' needs at least 2 pairs");
        }
        CategoryCohesion cohesion;
        cohesion.category = category;
        for (const auto& [first, second] : list) {
            if (first.size() != second.size()) {
                throw ArgumentError("geometry: pair vectors have mixed widths");
            }
            std::vector<double> diff(first.size());
            for (std::size_t i = 0; i < diff.size(); ++i) {
                diff[i] = second[i] - first[i];
            }
            double norm = 0.0;
            for (const double x : diff) norm += x * x;
            if (norm == 0.0) {
                ++cohesion.dropped_zero;  // identical pair carries no direction
                continue;
            }
            normalize_in_place(diff);
            report.differences.emplace_back(category, std::move(diff));
            ++cohesion.pair_count;
        }
        report.per_category.push_back(cohesion);
    }

    for (const auto& [category, vec] : report.differences) {
        by_category[category].push_back(&vec);
    }
    for (CategoryCohesion& cohesion : report.per_category) {
        const auto& own = by_category[cohesion.category];
        std::vector<const std::vector<double>*> others;
        for (const auto& [category, list] : by_category) {
            if (category != cohesion.category) {
                others.insert(others.end(), list.begin(), list.end());
            }
        }
        cohesion.intra_cosine = mean_pairwise_cosine(own, own, true);
        cohesion.inter_cosine = mean_pairwise_cosine(own, others, false);
        cohesion.separated = cohesion.intra_cosine > cohesion.inter_cosine;
    }
    return report;
}

void save_cohesion_csv(const PairDifferenceReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("geometry: cannot open '" + path + "' for writing");
    }
    out << "category,intra_cosine,inter_cosine,n\n";
    char intra[64];
    char inter[64];
    for (const CategoryCohesion& c : report.per_category) {
        std::snprintf(intra, sizeof(intra), "%.6f", c.intra_cosine);
        std::snprintf(inter, sizeof(inter), "%.6f", c.inter_cosine);
        out << c.category << ',' << intra << ',' << inter << ',' << c.pair_count << '\n';
    }
    if (!out) {
        throw IoError("geometry: failed while writing '" + path + "'");
    }
}

}  // namespace gramvec
