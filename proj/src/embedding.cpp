#include "gramvec/embedding.hpp"

#include <cmath>

#include "gramvec/error.hpp"

namespace gramvec {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("embedding: cosine of vectors with different widths");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void normalize_in_place(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
        return;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
}

}  // namespace gramvec
