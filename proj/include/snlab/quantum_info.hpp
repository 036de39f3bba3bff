#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "snlab/hamiltonian.hpp"
#include "snlab/lattice.hpp"

namespace snlab {

// Entropies are in nats; eigenvalues below kEigenClip count as zero.
struct DensityMatrix {
    Eigen::MatrixXcd m;
    std::string region;

    double trace() const { return m.trace().real(); }
    // Hermitian, unit trace and no eigenvalue below -tol.
    bool valid(double tol = 1e-10) const;
};

// Splits every stable labeling into the configuration seen by a vertex
// region (labels of all edges touching it, plus its vertex multiplicities)
// and the configuration seen by the complement. Edges on the cut appear in
// both halves; the pair determines the labeling, so the map embeds the
// constrained space into a tensor product.
class FactorMap {
public:
    FactorMap(const StringNetModel& model, const Region& region);

    std::size_t region_dim() const { return region_dim_; }
    std::size_t complement_dim() const { return complement_dim_; }
    int region_index(std::size_t basis_index) const { return region_index_[basis_index]; }
    int complement_index(std::size_t basis_index) const { return complement_index_[basis_index]; }
    // Region configurations (edge labels in region_edges order, then vertex
    // multiplicities), sorted lexicographically.
    std::vector<std::vector<int>> region_configs() const;
    const std::vector<int>& region_edges() const { return region_edges_; }

    // psi as a region_dim x complement_dim matrix.
    SparseMatrix reshape(const StateVector& psi) const;
    // (O (x) 1) on each column of x, O given on region configurations.
    Eigen::MatrixXcd apply_local(const Eigen::MatrixXcd& o, const Eigen::MatrixXcd& x) const;

private:
    std::vector<int> region_edges_;
    std::vector<int> region_vertices_;
    std::vector<std::size_t> region_rep_;  // a basis index showing each region configuration
    const StringNetBasis* basis_ = nullptr;
    std::size_t region_dim_ = 0;
    std::size_t complement_dim_ = 0;
    std::vector<int> region_index_;
    std::vector<int> complement_index_;
    std::vector<std::vector<std::size_t>> by_complement_;
};

// c = Tr(P O)/Tr(P) and the spectral norm of P O P - c P for P = G G^dagger.
std::pair<double, double> ltqo_residual(const FactorMap& fm, const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& o);

// -sum lambda ln lambda over eigenvalues above the clip.
double von_neumann(const Eigen::VectorXd& eigenvalues);
double entropy(const DensityMatrix& rho);

DensityMatrix reduced_density_matrix(const FactorMap& fm, const StateVector& psi);
DensityMatrix reduced_density_matrix(const StringNetModel& model, const StateVector& psi, const Region& region);

// Eigenvalues of sum_i m_i m_i^dagger. Row/column blocks that no m_i
// connects are diagonalized separately, each from its smaller side; zero
// eigenvalues may be dropped.
Eigen::VectorXd gram_spectrum(const std::vector<SparseMatrix>& ms);

// Entropy of a pure state's reduction, from the smaller side's Gram matrix.
double region_entropy(const StringNetModel& model, const StateVector& psi, const Region& region);
// Entropy of sum_i w_i |psi_i><psi_i| reduced to a region.
double region_entropy(const StringNetModel& model, const std::vector<std::pair<double, StateVector>>& mixture,
                      const Region& region);

// I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC); regions must be disjoint.
double cmi(const StringNetModel& model, const StateVector& psi, const Region& A, const Region& B, const Region& C);
// I(A:C) = S(A) + S(C) - S(AC).
double mutual_information(const StringNetModel& model, const StateVector& psi, const Region& A, const Region& C);

// ---------------------------------------------------------------------------
// Dense multipartite matrices. dims lists the tensor factors, first factor
// most significant.

Eigen::MatrixXcd partial_trace(const Eigen::MatrixXcd& rho, const std::vector<int>& dims,
                               const std::vector<int>& keep);
// Applies f to the eigenvalues of a Hermitian matrix.
Eigen::MatrixXcd hermitian_function(const Eigen::MatrixXcd& h, double (*f)(double));
double dense_entropy(const Eigen::MatrixXcd& rho);
// I(X:Z|Y) for a tripartite dense state with dims {x, y, z}.
double dense_cmi(const Eigen::MatrixXcd& rho, int dx, int dy, int dz);
double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
// Same quantities for states given as G G^dagger, computed on the factors.
double factored_entropy(const Eigen::MatrixXcd& g);
double factored_trace_distance(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& h);

// The string-net state reduced onto several disjoint regions, written in
// the tensor product of the regions' configuration spaces (part order).
struct PartsState {
    Eigen::MatrixXcd rho;
    std::vector<int> dims;
    std::vector<std::vector<std::vector<int>>> part_configs;
};
// For each configuration of the union of the parts (FactorMap order), its
// index in the product of the parts' configuration spaces.
std::vector<Eigen::Index> parts_positions(const StringNetModel& model, const std::vector<Region>& parts,
                                          std::vector<int>* dims = nullptr);
PartsState reduce_to_parts(const StringNetModel& model, const std::vector<std::pair<double, StateVector>>& mixture,
                           const std::vector<Region>& parts);

struct MergeResult {
    Eigen::MatrixXcd tau_factor;  // tau = tau_factor tau_factor^dagger, on A B C D
    bool regularized = false;  // lambda_C had eigenvalues below the floor
    double consistency_bc = 0.0;  // |rho_BC - lambda_BC|_1
    double cmi_rho = 0.0;     // I(A:C|B)_rho
    double cmi_lambda = 0.0;  // I(B:D|C)_lambda
    double marginal_abc = 0.0;  // |tau_ABC - rho_ABC|_1
    double marginal_bcd = 0.0;  // |tau_BCD - lambda_BCD|_1
    double cmi_tau_a = 0.0;   // I(A:CD|B)_tau
    double cmi_tau_d = 0.0;   // I(AB:D|C)_tau
    Eigen::MatrixXcd tau() const { return tau_factor * tau_factor.adjoint(); }
    nlohmann::json to_json() const;
};
// tau = lambda_CD^1/2 lambda_C^-1/2 rho_ABC lambda_C^-1/2 lambda_CD^1/2 with
// identities on the missing factors. dims = {a, b, c, d}. Throws
// PreconditionError when the hypotheses fail beyond tol.
MergeResult petz_merge(const Eigen::MatrixXcd& rho_abc, const Eigen::MatrixXcd& lambda_bcd,
                       const std::vector<int>& dims, double tol);

struct UhlmannResult {
    Eigen::MatrixXcd U;  // on B (x) C
    double residual = 0.0;  // |U sigma U^dagger - rho|_1
    int left_dim = 0;       // dimension found for B_L
    int right_dim = 0;      // dimension found for B_R
};
// Unitary on BC taking sigma_ABC to rho_ABC when both decouple C from the
// purifying side of AB and share the AB marginal. dims = {a, b, c}.
UhlmannResult uhlmann_disentangler(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma,
                                   const std::vector<int>& dims, double tol);

// rho = omega_{A B_L} (x) phi_{B_R C}, sigma = omega (x) (1 (x) V_C) phi, both
// conjugated by one random unitary on B = B_L B_R.
struct UhlmannInstance {
    Eigen::MatrixXcd rho, sigma;
    std::vector<int> dims;  // {a, bl*br, c}
    int bl = 1, br = 1;
};
UhlmannInstance random_uhlmann_instance(std::uint64_t seed, int max_dim = 4);

Eigen::MatrixXcd random_unitary(int n, std::uint64_t seed);

} // namespace snlab
