#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "snlab/diagrams.hpp"
#include "snlab/lattice.hpp"

namespace snlab {

using SparseMatrix = Eigen::SparseMatrix<cplx>;
// Amplitudes over a StringNetBasis, in basis order.
using StateVector = Eigen::VectorXcd;

struct SparseOperator {
    SparseMatrix m;
    bool hermitian = false;  // set by check_hermitian

    Eigen::Index dim() const { return m.rows(); }
    StateVector apply(const StateVector& v) const { return m * v; }
    // Largest |A - A^dagger| entry; updates the flag against tol.
    double check_hermitian(double tol = 1e-12);
};

// Largest entry modulus of a sparse matrix.
double max_abs(const SparseMatrix& a);

// Everything needed to act on one lattice with one category.
struct StringNetModel {
    const FusionCategory* cat = nullptr;
    const HoneycombLattice* lat = nullptr;
    StringNetBasis basis;

    StringNetModel(const FusionCategory& c, const HoneycombLattice& l, double cap = kDefaultBasisCap);
    std::size_t dim() const { return basis.size(); }
};

// Q_I on the stable-labeling space: the identity, since every basis state
// already satisfies every branching rule.
SparseOperator vertex_projector(const StringNetModel& model, int vertex);
// Q_I on an arbitrary labeling of the full edge space: 1 or 0.
int vertex_projector_value(const FusionCategory& cat, const HoneycombLattice& lat, int vertex,
                           const std::vector<int>& labels);

// B_p^s. Matrix elements
//   <i'| B_p^s |i> = prod_k sqrt(d_{i_k} / (d_s d_{i'_k})) prod_k b_k
// with b_k from plaquette_coeffs; legs are spectators. Requires a
// multiplicity-free category and a non-degenerate plaquette.
SparseOperator plaquette_operator(const StringNetModel& model, int plaquette, Label s);
// B_p = D^-2 sum_s d_s B_p^s.
SparseOperator plaquette_projector(const StringNetModel& model, int plaquette);
// H = -sum_I Q_I - sum_p B_p.
SparseOperator build_hamiltonian(const StringNetModel& model);

enum class GroundSpaceMethod { ProjectorProduct, SubspaceIteration };

struct GroundSpaceOptions {
    GroundSpaceMethod method = GroundSpaceMethod::ProjectorProduct;
    std::uint64_t seed = 0;
    double rank_tol = kDegeneracyTol;
    int max_iterations = 2000;
    double residual_tol = 1e-9;
    // Restrict to these plaquettes (all when empty).
    std::vector<int> plaquettes;
};

struct GroundSpace {
    Eigen::MatrixXcd vectors;  // orthonormal columns
    std::vector<double> residuals;  // max_p |(B_p - 1) psi| per column
    std::vector<double> energies;   // <psi|H|psi> per column (all terms)
    int dimension() const { return static_cast<int>(vectors.cols()); }
};

// Common +1 eigenspace of the selected B_p (and every Q_I). Throws
// ConvergenceError with the residual when the iteration stalls.
GroundSpace ground_space(const StringNetModel& model, const GroundSpaceOptions& opt = {});

struct AlgebraReport {
    double product_residual = 0.0;  // max |B^s B^t - sum_u N_st^u B^u|
    double adjoint_residual = 0.0;  // max |(B^s)^dagger - B^{sbar}|
    double projector_residual = 0.0;  // max |B_p^2 - B_p|
    double hermitian_residual = 0.0;
    bool ok(double tol) const {
        return product_residual < tol && adjoint_residual < tol && projector_residual < tol &&
               hermitian_residual < tol;
    }
    nlohmann::json to_json() const;
};
AlgebraReport verify_plaquette_algebra(const StringNetModel& model, int plaquette);
// max over pairs of |[B_p, B_q]|.
double max_commutator(const StringNetModel& model);

// Vertices within `layers` plaquette layers of the region.
std::vector<int> thicken(const HoneycombLattice& lat, const std::vector<int>& vertices, int layers);
// Plaquettes whose ring lies inside the vertex set.
std::vector<int> plaquettes_inside(const HoneycombLattice& lat, const std::vector<int>& vertices);

struct LtqoReport {
    int ell = 0;
    int samples = 0;
    int projector_rank = 0;
    int local_dimension = 0;  // configurations of the observable's region
    std::vector<int> plaquettes;  // terms kept in H restricted to A(ell)
    bool covers_lattice = false;  // A(ell) holds every plaquette
    std::vector<double> residuals;  // |P O P - c P| per sample (spectral norm)
    std::vector<double> c;
    double max_residual = 0.0;
    nlohmann::json to_json() const;
};
// Random Hermitian observables on the edges of `region` (GUE, fixed seed).
LtqoReport check_ltqo(const StringNetModel& model, const Region& region, int ell, int samples,
                      std::uint64_t seed = 0);

// Basis permutation induced by shifting every cell by (dm, dn) on the
// torus: perm[i] is the index of the translated configuration.
std::vector<std::int64_t> translation_permutation(const StringNetModel& model, int dm, int dn);

// Binary state files: "SNLABSV1", basis hash (u64), dimension (u64), then
// little-endian (re, im) doubles.
void write_state(std::ostream& os, const StringNetBasis& basis, const StateVector& psi);
StateVector read_state(std::istream& is, const StringNetBasis& basis);
void write_state_file(const std::string& path, const StringNetBasis& basis, const StateVector& psi);
StateVector read_state_file(const std::string& path, const StringNetBasis& basis);
// Nonzero amplitudes with their edge labels.
nlohmann::json state_to_json(const StringNetModel& model, const StateVector& psi, double eps = 1e-14);
// Sparse triplets "row,col,re,im", one per line, column-major order.
void write_triplets(std::ostream& os, const SparseMatrix& m);
SparseMatrix read_triplets(std::istream& is, Eigen::Index rows, Eigen::Index cols);

} // namespace snlab
