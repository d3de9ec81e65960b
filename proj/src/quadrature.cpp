#include "wdstop/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "wdstop/errors.hpp"

namespace wdstop {
namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mass * (first eigenvector component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mass) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw AccuracyError("Golub-Welsch eigensolve failed", 0.0);
    const auto n = diag.size();
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        rule.weights[static_cast<std::size_t>(i)] = mass * v0 * v0;
    }
    return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw InvalidArgument("gauss_hermite: n must be positive");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(n > 1 ? n - 1 : 0);
    for (int i = 1; i < n; ++i) off(i - 1) = std::sqrt(static_cast<double>(i));
    return golub_welsch(diag, off, 1.0);
}

QuadratureRule gauss_laguerre(int n, double a) {
    if (n < 1) throw InvalidArgument("gauss_laguerre: n must be positive");
    if (!(a > -1.0)) throw InvalidArgument("gauss_laguerre: parameter must exceed -1");
    Eigen::VectorXd diag(n);
    Eigen::VectorXd off(n > 1 ? n - 1 : 0);
    for (int i = 0; i < n; ++i) diag(i) = 2.0 * i + a + 1.0;
    for (int i = 1; i < n; ++i) off(i - 1) = std::sqrt(i * (i + a));
    return golub_welsch(diag, off, 1.0);
}

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("gauss_legendre: n must be positive");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(n > 1 ? n - 1 : 0);
    for (int i = 1; i < n; ++i) off(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
    return golub_welsch(diag, off, 2.0);
}

const QuadratureRule& default_gauss_hermite() {
    static const QuadratureRule rule = gauss_hermite(64);
    return rule;
}

}  // namespace wdstop
