#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gramvec {

// Maps a whitespace-joined token sequence to a fixed-width vector.  Both the
// trained encoder and static word-vector tables are adapted to this shape, so
// evaluation code never knows which one it is scoring.
using EmbeddingProvider = std::function<std::vector<double>(const std::string&)>;

// Cosine similarity; returns 0 when either vector has zero norm.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Scales to unit L2 norm in place; zero vectors are left untouched.
void normalize_in_place(std::vector<double>& v);

}  // namespace gramvec
