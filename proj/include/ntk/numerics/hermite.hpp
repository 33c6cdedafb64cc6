#pragma once

#include <vector>

namespace ntk {

// Probabilists' Hermite He_n, orthogonal under exp(-x^2/2).
// Relation to physicists' polynomials: He_n(x) = 2^{-n/2} H_n(x / sqrt(2)).
double hermite_eval(int n, double x);

// H_k(x)/sqrt(k!) for k = 0..K, written into out (resized to K+1).
void hermite_normalized_all(int K, double x, std::vector<double>& out);

}  // namespace ntk
