#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace gramvec {

// Principal-component projection of a point set.
struct Projection {
    std::vector<std::vector<double>> components;  // out_dim rows of length dim
    std::vector<std::vector<double>> coords;      // n rows of length out_dim
    std::vector<double> explained_variance;       // fractions of total, non-increasing
};

// Mean-centers the points and extracts the top out_dim eigenvectors of the
// covariance by power iteration with deflation (re-orthogonalizing against
// the components already found).  Each component's sign is fixed so its
// largest-magnitude entry is positive.  Throws RankDeficiencyError, carrying
// the usable rank, when the data cannot support out_dim components.
Projection pca_project(const std::vector<std::vector<double>>& vectors, int out_dim);

// CSV with header label,category,x,y (one coordinate column per output
// dimension; the first two are always named x and y).
void save_projection_csv(const Projection& projection,
                         const std::vector<std::string>& labels,
                         const std::vector<std::string>& categories,
                         const std::string& path);

struct CategoryCohesion {
    std::string category;
    int pair_count = 0;        // usable difference vectors
    int dropped_zero = 0;      // identical pairs, excluded from the statistics
    double intra_cosine = 0.0; // mean cosine between this category's differences
    double inter_cosine = 0.0; // mean cosine against all other categories
    bool separated = false;    // intra > inter
};

struct PairDifferenceReport {
    std::vector<CategoryCohesion> per_category;  // category order of the input map
    // Unit-normalized (second - first) vectors that survived, with category.
    std::vector<std::pair<std::string, std::vector<double>>> differences;
};

// Tests whether same-relation pairs point the same way: for each category the
// mean pairwise cosine of its difference vectors (intra) against the mean
// cosine between its differences and every other category's (inter).
PairDifferenceReport pair_difference_analysis(
    const std::map<std::string, std::vector<std::pair<std::vector<double>,
                                                      std::vector<double>>>>& pairs);

// CSV with header category,intra_cosine,inter_cosine,n.
void save_cohesion_csv(const PairDifferenceReport& report, const std::string& path);

}  // namespace gramvec
