#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "snlab/fusion_category.hpp"

namespace snlab {

// A planar splitting tree: the root edge at the bottom splits through
// trivalent vertices into an ordered list of leaves. Vertices use the
// normalized convention, in which an (x,y)->z vertex composed with its
// adjoint gives sqrt(d_x d_y / d_z) and a closed s-loop evaluates to d_s.
struct FusionTree {
    struct Node {
        Label label = 0;
        int mult = 0;
        int left = -1;
        int right = -1;
        bool is_leaf() const { return left < 0; }
    };

    std::vector<Node> nodes;
    int root = -1;

    static FusionTree leaf(Label a);
    static FusionTree join(const FusionTree& l, const FusionTree& r, Label c, int mult = 0);
    // ((l0 l1)_{x0} l2)_{x1} ... with internal = x0.., the last entry being the
    // root, and one multiplicity per internal vertex.
    static FusionTree left_associated(const std::vector<Label>& leaves, const std::vector<Label>& internal,
                                      const std::vector<int>& mults = {});

    std::vector<Label> leaves() const;
    Label root_label() const { return nodes[root].label; }
    std::size_t num_leaves() const;
    bool admissible(const FusionCategory& cat) const;

    // Preorder token encoding used as the TreeVector key.
    std::vector<int> key() const;
    static FusionTree from_key(const std::vector<int>& key);
    std::string to_string(const FusionCategory& cat) const;
};

// Sparse linear combination of trees sharing leaves and root.
class TreeVector {
public:
    TreeVector() = default;
    explicit TreeVector(const FusionTree& t, cplx amp = 1.0) { add(t, amp); }

    void add(const FusionTree& t, cplx amp);
    void add_key(const std::vector<int>& key, cplx amp);
    cplx amplitude(const FusionTree& t) const;
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    const std::map<std::vector<int>, cplx>& terms() const { return terms_; }
    void prune(double eps = 1e-14);
    TreeVector& operator*=(cplx s);
    TreeVector& operator+=(const TreeVector& o);

    double max_abs_diff(const TreeVector& o) const;
    nlohmann::json to_json(const FusionCategory& cat) const;

private:
    std::map<std::vector<int>, cplx> terms_;
};

enum class MoveDirection { LeftToRight, RightToLeft };
enum class Route { ViaLeftAssociated, ViaRightAssociated };
enum class BendDirection { Up, Down };

// position is a node path from the root: a string over {'L','R'}.
// LeftToRight maps ((a b)_e c)_d at that node to (a (b c)_f)_d using F;
// RightToLeft is the inverse and uses F^dagger.
TreeVector f_move(const FusionCategory& cat, const TreeVector& v, const std::string& position, MoveDirection dir);

TreeVector to_left_associated(const FusionCategory& cat, const TreeVector& v);
TreeVector to_right_associated(const FusionCategory& cat, const TreeVector& v);
// Re-brackets so that leaves p and p+1 hang from a common vertex.
TreeVector make_siblings(const FusionCategory& cat, const TreeVector& v, std::size_t p,
                         Route route = Route::ViaLeftAssociated);

// Replaces leaf p (label a) by the vertex a -> (x, y).
TreeVector split_leaf(const FusionCategory& cat, const TreeVector& v, std::size_t p, Label x, Label y, int mult = 0);
// Replaces leaf p (label a) by every tree of sub, whose root must be a.
TreeVector substitute_leaf(const TreeVector& v, std::size_t p, const TreeVector& sub);
// Applies the fusion vertex (a, b) -> c on leaves p, p+1.
TreeVector fuse_leaves(const FusionCategory& cat, const TreeVector& v, std::size_t p, Label c, int mult = 0,
                       Route route = Route::ViaLeftAssociated);

TreeVector insert_vacuum_leaf(const TreeVector& v, std::size_t p);
TreeVector remove_vacuum_leaf(const TreeVector& v, std::size_t p);
// Creates an (s, sbar) pair in front of leaf p (p may equal the leaf count).
TreeVector cup(const FusionCategory& cat, const TreeVector& v, std::size_t p, Label s);
// Closes a dual pair at leaves p, p+1.
TreeVector cap(const FusionCategory& cat, const TreeVector& v, std::size_t p, Route route = Route::ViaLeftAssociated);

// Bends the leftmost (leaf = 0) or rightmost (leaf = n-1) leg. Up turns the
// root leg c into a new outer leaf cbar over a vacuum root; Down turns an
// outer leaf a of a vacuum-rooted tree into the root leg abar.
TreeVector bend(const FusionCategory& cat, const TreeVector& v, std::size_t leaf, BendDirection dir);

// Completeness relation on two adjacent strands: the identity written as
// sum_c sqrt(d_c/(d_a d_b)) split o fuse. Returns v re-expressed with the
// pair as siblings.
struct CompletenessTerm {
    Label c;
    int mult;
    double coeff;
};
std::vector<CompletenessTerm> completeness_terms(const FusionCategory& cat, Label a, Label b);
TreeVector fuse_pair(const FusionCategory& cat, const TreeVector& v, std::size_t p);

// Gram form of the normalized basis: the scalar multiple of id_root obtained
// by stacking t1^dagger on t2.
cplx inner_product(const FusionCategory& cat, const FusionTree& t1, const FusionTree& t2);
cplx inner_product(const FusionCategory& cat, const TreeVector& v1, const TreeVector& v2);

// Removes a closed s/sbar loop sitting on leaves p, p+1 in the vacuum
// channel, with factor d_s. Throws if the pair is not a bubble.
TreeVector pop_bubble(const FusionCategory& cat, const TreeVector& v, std::size_t p);

// For v in Hom(1, a (x) b): zero unless b = abar.
TreeVector vacuum_collapse(const FusionCategory& cat, const TreeVector& v);

// Labels around hexagon vertex k (1..6): leg e_k, ring edges i_{k-1} and i_k
// (i_0 = i_6) before and after the s-loop is fused in.
struct HexVertexLabels {
    Label e;
    Label i_prev;
    Label i_cur;
    Label ip_prev;
    Label ip_cur;
};

// Coefficient c_k such that the vertex decorated by the s-loop segments
// equals c_k times the bare normalized vertex with the new ring labels.
// Requires a multiplicity-free category.
cplx vertex_reduction_coeff(const FusionCategory& cat, Label s, int k, const HexVertexLabels& lab,
                            Route route = Route::ViaLeftAssociated);

// b_k in the convention where the plaquette matrix element is
// prod_k sqrt(d_{i_k}/(d_s d_{i'_k})) prod_k b_k. 1x1 for admissible labels,
// 0x0 otherwise.
Eigen::MatrixXcd plaquette_coeffs(const FusionCategory& cat, Label s, int k, const HexVertexLabels& lab);

// Memoized vertex_reduction_coeff keyed by (s, k, labels).
class PlaquetteCoeffCache {
public:
    explicit PlaquetteCoeffCache(const FusionCategory& cat) : cat_(cat) {}
    cplx get(Label s, int k, const HexVertexLabels& lab);

private:
    const FusionCategory& cat_;
    std::map<std::array<int, 7>, cplx> memo_;
};

} // namespace snlab
