#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "snlab/hamiltonian.hpp"
#include "snlab/lattice.hpp"
#include "snlab/quantum_info.hpp"

namespace snlab {

// A0: S(BC) + S(C) - S(B). A1: S(BC) + S(CD) - S(B) - S(D).
struct AxiomRecord {
    AxiomKind kind;
    int anchor = 0;
    int split = 0;
    double value = 0.0;
    bool pass = false;  // |value| < tol
};

struct AxiomReport {
    std::vector<AxiomRecord> records;
    double max_abs_value = 0.0;
    double tol = 0.0;
    AxiomWidths widths;

    bool passed() const;
    nlohmann::json to_json() const;
    // One line per placement: placement,kind,anchor,split,value,pass.
    std::string to_csv() const;
};

double axiom_value(const StringNetModel& model, const StateVector& psi, const Partition& part);

// Evaluates every placement of the listed kinds. Throws StructuralError when
// none of them fits on the lattice.
AxiomReport verify_axioms(const StringNetModel& model, const StateVector& psi, const std::vector<AxiomKind>& kinds,
                          AxiomWidths widths, double tol);

// ---------------------------------------------------------------------------

// A path of `size` vertices starting at the anchor whose vertices carry no
// pinned legs and which crosses size + 2 edges (so it is a disk). The first
// such path in depth-first order over sorted neighbours; StructuralError when
// none exists.
Region disk_path(const HoneycombLattice& lat, int anchor, int size);

struct AreaLawFit {
    int anchor = 0;
    std::vector<int> sizes;
    std::vector<int> boundary;  // crossed edges per disk
    std::vector<double> entropies;
    double alpha = 0.0;
    double gamma = 0.0;
    double residual = 0.0;  // max |S - (alpha |dX| - gamma)|
    nlohmann::json to_json() const;
};

// Least squares of S(X) = alpha |dX| - gamma over path disks of the given
// sizes. Needs at least two distinct boundary lengths (ValidationError).
AreaLawFit area_law_fit(const StringNetModel& model, const StateVector& psi, const std::vector<int>& disk_sizes,
                        int anchor = 0);

// ---------------------------------------------------------------------------

struct SectorOptions {
    int thickening = 1;
    // Plaquettes left out of the thickened Hamiltonian (holes of the region).
    std::vector<int> holes;
    std::uint64_t seed = 0;
    int samples = 2;  // random vectors per sampled state
    double cluster_tol = 1e-8;
    double support_tol = 1e-10;
    // Also run at thickening + 1 and compare block counts.
    bool check_convergence = false;
    // Fill SectorBlock::factor.
    bool keep_states = false;
};

struct SectorBlock {
    int rank = 0;
    double entropy = 0.0;
    double weight = 0.0;  // weight of the block in the reference state
    // Extreme point on the region's configurations, factor * factor^dagger
    // (keep_states).
    Eigen::MatrixXcd factor;
    Eigen::MatrixXcd state() const { return factor * factor.adjoint(); }
};

struct SectorDecomposition {
    std::vector<SectorBlock> blocks;  // sorted by entropy
    int vacuum = -1;
    int region_dim = 0;
    int support_dim = 0;
    int thickening = 0;
    std::vector<int> plaquettes;   // terms of the thickened Hamiltonian
    double orthogonality_residual = 0.0;  // max |rho_a rho_b| over a != b
    double consistency_residual = 0.0;    // block structure seen by an independent sample
    bool converged = true;
    int next_count = -1;  // block count at thickening + 1, when checked

    int count() const { return static_cast<int>(blocks.size()); }
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Reduced states on the region of random vectors projected onto the ground
// space of the plaquettes inside the thickened region (holes excluded). The
// ratio of two generic samples is constant on each orthogonal sector, so its
// eigenvalue clusters give the blocks. The reference state is the vacuum
// labeling projected by every plaquette inside the thickened region, holes
// included; the vacuum block carries its largest weight (ties go to the
// lower entropy).
SectorDecomposition information_convex_sectors(const StringNetModel& model, const Region& region,
                                               const SectorOptions& opt = {});

// S(rho_a) - S(rho_vacuum) for every block; empty for a single block.
// Throws PreconditionError when no vacuum block was identified.
std::vector<double> sector_entropy_differences(const SectorDecomposition& d);

// ---------------------------------------------------------------------------

// The zigzag loop Y(0,n) L(1,n-1) Y(1,n) ... winding once along a1 (torus
// only); 2 Lx vertices.
std::vector<int> row_cycle(const HoneycombLattice& lat, int n);

struct MergeDemo {
    std::string kind;
    std::vector<std::vector<int>> parts;  // vertex sets A, B, C, D
    std::vector<int> dims;
    MergeResult merge;
    std::vector<double> weights;  // sector weights of the target (annulus)
    double distance = 0.0;        // trace distance of tau to the target
    double tol = 0.0;
    bool pass = false;
    nlohmann::json to_json() const;
};

// A-B-C-D along a 4-vertex path disk: merges rho_ABC and rho_BCD of psi and
// compares with rho_ABCD.
MergeDemo markov_strip_merge(const StringNetModel& model, const StateVector& psi, int anchor, double tol);

// Closes a loop of L >= 8 vertices: A = v1..v(L-6), B = {v0, v(L-5)},
// C = {v(L-4), v(L-1)}, D = {v(L-3), v(L-2)}. Merges the two arcs ABC and
// BCD of psi and compares with the maximum-entropy element of the loop's
// information convex set, sum_a w_a rho_a with w_a proportional to
// exp S(rho_a). A and D need two vertices each: a single vertex between two
// held half-edges can leave its third edge determined, and the arc would
// then see a loop operator around the torus.
MergeDemo annulus_closure_merge(const StringNetModel& model, const StateVector& psi, const std::vector<int>& loop,
                                const SectorOptions& opt, double tol);

} // namespace snlab
