#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "snlab/fusion_category.hpp"

namespace snlab {

// Honeycomb geometry. Plaquette centers sit on R = m a1 + n a2 with
// a1 = (sqrt3, 0), a2 = (sqrt3/2, 3/2). Each cell R owns two vertices and
// three edges:
//
//   Y_R (sublattice A) at R + (0,-1): splits its bottom edge v_R into the
//       upper-left l_R and upper-right r_R.
//   L_R (sublattice B) at R + (0,+1): fuses its lower-left r_{R+a2-a1} and
//       lower-right l_{R+a2} into its top edge v_{R-a1+2a2}.
//
// Every edge carries its label pointing upward, so the branching rule is
// N_{left,right}^{bottom} at Y and N_{lower-left,lower-right}^{top} at L.
// On the torus the numbering is row-major: cell p = n*Lx + m, Y_p = 2p,
// L_p = 2p+1, v_p = 3p, l_p = 3p+1, r_p = 3p+2.
enum class Topology { Torus, Open };
enum class VertexKind { Y = 0, L = 1 };
enum class EdgeKind { V = 0, Left = 1, Right = 2 };
// Internal edges join two lattice vertices. Pinned legs carry the vacuum;
// free legs are dangling but keep their label as a degree of freedom.
enum class EdgeStatus { Internal, Pinned, Free };

struct LatticeVertex {
    VertexKind kind;
    int m, n;
    // Y: {bottom, upper-left, upper-right}; L: {lower-left, lower-right, top}.
    std::array<int, 3> edges;
    double x, y;
};

struct LatticeEdge {
    EdgeKind kind;
    int m, n;
    int lower;  // vertex id or -1 when outside the lattice
    int upper;
    EdgeStatus status;
};

// Ring vertices clockwise from the top: v1 = L_R, v2 = Y_{R+a2},
// v3 = L_{R+a1-a2}, v4 = Y_R, v5 = L_{R-a2}, v6 = Y_{R+a2-a1}. Ring edge
// i_k joins v_k and v_{k+1}; leg e_k is the third edge at v_k.
struct LatticePlaquette {
    int m, n;
    std::array<int, 6> vertices;
    std::array<int, 6> ring;
    std::array<int, 6> legs;
    // Ring vertices or edges repeat, or a leg coincides with a ring edge.
    bool degenerate = false;
};

class HoneycombLattice {
public:
    int Lx = 0, Ly = 0;
    Topology topology = Topology::Torus;
    std::vector<LatticeVertex> vertices;
    std::vector<LatticeEdge> edges;
    std::vector<LatticePlaquette> plaquettes;
    std::vector<std::string> flags;
    // For sublattices: ids in the lattice this one was cut from.
    std::vector<int> parent_vertex;
    std::vector<int> parent_edge;
    std::vector<int> parent_plaquette;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_plaquettes() const { return static_cast<int>(plaquettes.size()); }

    // Ids by cell coordinates (wrapped on the torus); -1 when absent.
    int vertex_at(VertexKind k, int m, int n) const;
    int edge_at(EdgeKind k, int m, int n) const;
    int plaquette_at(int m, int n) const;

    int other_end(int edge, int vertex) const;
    std::vector<int> neighbors(int vertex) const;
    // Plaquettes whose ring contains the vertex.
    std::vector<int> plaquettes_of_vertex(int vertex) const;
    bool has_flag(const std::string& f) const;

    // Displacement from vertex a to vertex b; minimum image on the torus.
    std::array<double, 2> displacement(int a, int b) const;

    // Sublattice on a vertex subset. Edges leaving the subset become legs
    // with the given status; plaquettes survive when their whole ring does.
    HoneycombLattice induced(const std::vector<int>& vertex_subset, EdgeStatus cut = EdgeStatus::Free) const;

    nlohmann::json to_json() const;

    // Filled by the builders.
    void index();

private:
    std::map<std::array<int, 3>, int> vertex_lookup_;
    std::map<std::array<int, 3>, int> edge_lookup_;
    std::map<std::array<int, 2>, int> plaquette_lookup_;
    std::array<int, 2> wrap(int m, int n) const;
};

// Throws CapExceededError when 3*Lx*Ly edges exceed what a packed
// configuration key can hold for the largest builtin rank.
HoneycombLattice build_torus(int Lx, int Ly);
// Union of the hexagons with 0 <= m < Lx, 0 <= n < Ly; dangling legs pinned.
HoneycombLattice build_open_patch(int Lx, int Ly);

// ---------------------------------------------------------------------------
// Configurations: edge labels followed by one multiplicity index per vertex,
// packed into a key whose numeric order is the lexicographic order.

using ConfigKey = unsigned __int128;

class StringNetBasis {
public:
    StringNetBasis() = default;
    StringNetBasis(int num_edges, int num_vertices, int label_bits, std::vector<int> mult_bits);

    std::size_t size() const { return keys_.size(); }
    int num_edges() const { return num_edges_; }
    int num_vertices() const { return num_vertices_; }
    const std::vector<ConfigKey>& keys() const { return keys_; }
    ConfigKey key(std::size_t i) const { return keys_[i]; }

    int label(ConfigKey k, int edge) const;
    int mult(ConfigKey k, int vertex) const;
    ConfigKey with_label(ConfigKey k, int edge, int label) const;
    ConfigKey with_mult(ConfigKey k, int vertex, int mult) const;
    std::vector<int> labels(std::size_t i) const;

    ConfigKey encode(const std::vector<int>& labels, const std::vector<int>& mults = {}) const;
    // Rank of a configuration, -1 when it is not in the basis.
    std::int64_t index_of(ConfigKey k) const;

    // FNV-1a over the layout and all keys; identifies a basis in state files.
    std::uint64_t hash() const;

    // Appends in increasing key order.
    void push_back(ConfigKey k) { keys_.push_back(k); }

private:
    int num_edges_ = 0;
    int num_vertices_ = 0;
    int label_bits_ = 1;
    std::vector<int> mult_bits_;
    std::vector<int> mult_shift_;
    int total_bits_ = 0;
    std::vector<ConfigKey> keys_;

    int edge_shift(int e) const { return total_bits_ - (e + 1) * label_bits_; }
};

inline constexpr double kDefaultBasisCap = 2e7;

// Rough size estimate from per-vertex admissible fractions.
double estimate_basis_size(const FusionCategory& cat, const HoneycombLattice& lat);

// All stable labelings: every vertex satisfies its branching rule and pinned
// legs carry the vacuum. Throws CapExceededError past the cap.
StringNetBasis enumerate_basis(const FusionCategory& cat, const HoneycombLattice& lat,
                               double cap = kDefaultBasisCap);

// Admissibility of a full labeling (used for full-space vertex projectors).
bool vertex_satisfied(const FusionCategory& cat, const HoneycombLattice& lat, int vertex,
                      const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Regions are vertex sets. A region owns the degrees of freedom at its
// vertices, i.e. every edge touching it (edges leaving it are split into
// half-edges, one per side).

struct Region {
    std::string role;
    std::vector<int> vertices;  // sorted, unique
    std::vector<int> edges;     // derived: non-pinned edges touching a vertex

    bool empty() const { return vertices.empty(); }
    bool contains(int v) const;
};

Region make_region(const HoneycombLattice& lat, std::vector<int> vertices, std::string role = "");
// Union of the ring vertices of the listed plaquettes.
Region region_from_plaquettes(const HoneycombLattice& lat, const std::vector<int>& plaquettes,
                              std::string role = "");
Region region_complement(const HoneycombLattice& lat, const Region& r);
Region region_union(const HoneycombLattice& lat, const Region& a, const Region& b, std::string role = "");
// Edges with exactly one endpoint inside the region.
int boundary_size(const HoneycombLattice& lat, const Region& r);
bool regions_disjoint(const Region& a, const Region& b);
// Connected components of the vertex-adjacency graph restricted to r.
int num_components(const HoneycombLattice& lat, const Region& r);

enum class AxiomKind { A0Bulk, A1Bulk, A0Boundary, A1Boundary };
std::string to_string(AxiomKind k);

struct AxiomWidths {
    int c = 1;  // C is the vertex ball of radius c-1 around the anchor
    int b = 1;  // plaquette layers added around C
};

struct Partition {
    AxiomKind kind;
    int anchor;
    int split;
    Region B, C, D;  // D empty for A0
};

// C is a disk around the anchor vertex and B the surrounding ring of
// plaquettes. For A1 the ring is cut into two arcs B and D; split selects
// the cut (0 <= split < num_splits). Bulk kinds need the ring to be closed
// and clear of pinned legs; boundary kinds need the anchor on the boundary.
// Throws StructuralError when the placement does not fit.
Partition make_axiom_partition(const HoneycombLattice& lat, AxiomKind kind, int anchor,
                               AxiomWidths widths = {}, int split = 0);
int num_splits(const HoneycombLattice& lat, AxiomKind kind, int anchor, AxiomWidths widths = {});
// Every anchor and split that fits.
std::vector<Partition> all_placements(const HoneycombLattice& lat, AxiomKind kind, AxiomWidths widths = {});

nlohmann::json region_to_json(const Region& r);
nlohmann::json partition_to_json(const Partition& p);

} // namespace snlab
