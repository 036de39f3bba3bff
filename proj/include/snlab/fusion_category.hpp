#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snlab/common.hpp"

namespace snlab {

using Label = int;

// One admissible (a,b,c,d) F-matrix. Rows are the left-associated channels
// (e, mu, nu) with mu in V_ab^e and nu in V_ec^d; columns are the
// right-associated channels (f, alpha, beta) with alpha in V_af^d and beta in
// V_bc^f. Both are listed in lexicographic order.
struct FBlock {
    std::vector<std::array<int, 3>> rows;
    std::vector<std::array<int, 3>> cols;
    Eigen::MatrixXcd m;

    int row_index(int e, int mu, int nu) const;
    int col_index(int f, int alpha, int beta) const;
    bool empty() const { return rows.empty(); }
};

// Skeletal unitary fusion category. Label 0 is the vacuum.
//
//   ((a b)_e c)_d = sum_f F^{abc}_d[(e,mu,nu),(f,alpha,beta)] (a (b c)_f)_d
struct FusionCategory {
    std::string name;
    std::vector<std::string> labels;
    std::vector<int> dual;
    std::vector<int> fusion;  // N[(a*rank + b)*rank + c]
    std::vector<double> qdim;
    double total_dim = 1.0;
    std::vector<int> kappa;
    std::vector<FBlock> fblocks;  // indexed by ((a*rank + b)*rank + c)*rank + d

    int rank() const { return static_cast<int>(labels.size()); }
    int N(Label a, Label b, Label c) const { return fusion[(a * rank() + b) * rank() + c]; }
    bool admissible(Label a, Label b, Label c) const { return N(a, b, c) > 0; }
    bool multiplicity_free() const;

    const FBlock& F(Label a, Label b, Label c, Label d) const;
    FBlock& F(Label a, Label b, Label c, Label d);
    // Single F-symbol; zero when the channel is inadmissible.
    cplx F(Label a, Label b, Label c, Label d, Label e, Label f,
           int mu = 0, int nu = 0, int alpha = 0, int beta = 0) const;

    Label label_index(const std::string& name) const;
};

struct ValidationReport {
    std::vector<std::string> violations;
    double max_residual = 0.0;
    std::size_t instances_checked = 0;

    bool ok() const { return violations.empty(); }
    void add(std::string msg);
    void merge(const ValidationReport& other);
};

// Allocates row/column tables and zero matrices for every admissible block.
void init_fblock_layout(FusionCategory& cat);

// Fills qdim, total_dim and kappa from fusion and F data.
void finalize_category(FusionCategory& cat, double tol = 1e-10);

ValidationReport validate_fusion_ring(const FusionCategory& cat);

struct QuantumDimensions {
    std::vector<double> d;
    double total;
};
QuantumDimensions compute_quantum_dimensions(int rank, const std::vector<int>& fusion);

ValidationReport check_pentagon(const FusionCategory& cat, double tol);
ValidationReport check_unitarity(const FusionCategory& cat, double tol);
// F is the identity whenever a, b or c is the vacuum.
ValidationReport check_vacuum_triviality(const FusionCategory& cat, double tol);
ValidationReport check_frobenius_schur(const FusionCategory& cat, double tol);
ValidationReport validate_all(const FusionCategory& cat, double tol = 1e-9);

// Per-(a,b,c) unitaries on V_ab^c. Missing keys mean identity.
using GaugeData = std::map<std::array<int, 3>, Eigen::MatrixXcd>;

FusionCategory gauge_transform(const FusionCategory& cat, const GaugeData& u, double tol = 1e-12);

int frobenius_schur(const FusionCategory& cat, Label a, double tol = 1e-10);

std::vector<std::string> builtin_names();
FusionCategory builtin(const std::string& name);

} // namespace snlab
