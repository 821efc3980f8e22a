#pragma once

#include "htsolve/config.hpp"
#include "htsolve/htensor.hpp"
#include "htsolve/operator.hpp"

#include <memory>
#include <string>

namespace htsolve {

enum class Scenario { identity, fd_laplace, diffusion_eigen, diffusion_multilevel, parametric };

/// An assembled model problem: operator (with bounds) and right-hand side on a tree.
struct Problem {
    std::string name;
    Scenario scenario = Scenario::identity;
    std::shared_ptr<const DimensionTree> tree;
    LowRankOperator op;
    HTensor rhs;
    /// Per-mode level index of every row (multilevel basis only).
    std::vector<std::vector<int>> levels;
    /// Parametric problems: spatial mode 0, parameter count d, Legendre degree cap p.
    int params = 0;
    int degree = 0;
    double theta = 0.0;

    int order() const { return op.order(); }
};

enum class RhsFlavor { rank_one, low_rank, y_independent };

RhsFlavor parse_rhs_flavor(const std::string& s);

struct DiffusionSpec {
    int d = 2;
    bool multilevel = false;
    Index n = 4;            // eigen-sine modes per direction
    int max_level = 3;      // multilevel basis levels 0..L
    double coupling = 0.4;  // ||K|| of the multilevel perturbation
    Eigen::MatrixXd M;      // diffusion matrix; identity if empty
    RhsFlavor rhs = RhsFlavor::rank_one;
    int rhs_rank = 2;
    unsigned seed = 1;
    std::string tree = "balanced";
};

/// Scenario (I): -div(M grad u) = f on the unit cube in a sine eigenbasis or a
/// synthetic multilevel basis, symmetrically scaled by (sum_i q_i)^{-1/2}.
Problem build_diffusion_I(const DiffusionSpec& spec);

struct ParametricSpec {
    Index n = 32;       // grid intervals; n - 1 spatial unknowns
    int d = 2;          // parameters (inclusions)
    double theta = 0.5; // ellipticity ratio, < 1
    int p = 6;          // Legendre degree cap per parameter
    RhsFlavor rhs = RhsFlavor::y_independent;
    std::string tree = "balanced";
};

/// Scenario (II): 1D diffusion with a(y) = 1 + sum_j y_j theta 1_{D_j} for a partition
/// D_1..D_d of (0,1), Legendre polynomial chaos in y and energy-orthonormal spatial basis.
Problem build_parametric_II(const ParametricSpec& spec);

/// Kronecker sum of 1D finite-difference Laplacians (n interior points per mode).
Problem build_fd_laplace(int d, Index n, std::string tree = "balanced");

Problem build_identity(std::vector<Index> dims, std::string tree = "balanced");

/// Build from a fixture file.
Problem load_problem(const Config& cfg);
Problem load_problem_file(const std::string& path);

std::shared_ptr<const DimensionTree> make_tree(const std::string& spec, int d);

/// Normalized Legendre coupling matrix: entries (k+1)/sqrt((2k+1)(2k+3)) off the diagonal.
Eigen::MatrixXd legendre_coupling(int p);

/// 1D piecewise-linear stiffness matrix on n uniform intervals for elementwise coefficients.
Eigen::MatrixXd fe_stiffness(const Eigen::VectorXd& coeff);

/// Direct reference solution of the assembled system.
DenseTensor dense_solve(const Problem& p, Index guard = 10'000'000);

/// Right-hand side as a flat array.
DenseTensor dense_rhs(const Problem& p);

/// Singular values of the spatial/parametric matricization (spatial mode 0 against the rest).
Eigen::VectorXd spatial_parametric_singular_values(const Problem& p, const DenseTensor& u);

} // namespace htsolve
