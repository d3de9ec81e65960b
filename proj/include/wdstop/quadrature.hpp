#pragma once

#include <vector>

namespace wdstop {

/// Nodes and weights of a Gaussian rule. Weights are normalized so they sum to
/// the total mass of the weight function named by the constructor.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// E[g(Z)] for Z ~ N(0,1); weights sum to 1.
QuadratureRule gauss_hermite(int n);

/// E[g(U)] for U ~ Gamma(a+1, 1), i.e. weight u^a e^{-u} / Gamma(a+1); a > -1.
QuadratureRule gauss_laguerre(int n, double a);

/// Integral over [-1, 1]; weights sum to 2.
QuadratureRule gauss_legendre(int n);

/// Shared 64-node Gauss-Hermite rule (built once, immutable).
const QuadratureRule& default_gauss_hermite();

}  // namespace wdstop
