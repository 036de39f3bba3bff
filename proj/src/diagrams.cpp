#include "snlab/diagrams.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <utility>

namespace snlab {

namespace {

using Term = std::pair<FusionTree, cplx>;

void collect_leaves(const FusionTree& t, int n, std::vector<int>& out) {
    const auto& nd = t.nodes[n];
    if (nd.is_leaf()) {
        out.push_back(n);
        return;
    }
    collect_leaves(t, nd.left, out);
    collect_leaves(t, nd.right, out);
}

std::vector<int> leaf_nodes(const FusionTree& t) {
    std::vector<int> out;
    collect_leaves(t, t.root, out);
    return out;
}

void emit_key(const FusionTree& t, int n, std::vector<int>& out) {
    const auto& nd = t.nodes[n];
    if (nd.is_leaf()) {
        out.push_back(nd.label);
        return;
    }
    out.push_back(-1 - nd.label);
    out.push_back(nd.mult);
    emit_key(t, nd.left, out);
    emit_key(t, nd.right, out);
}

int parse_key(const std::vector<int>& key, std::size_t& pos, FusionTree& t) {
    if (pos >= key.size()) throw StructuralError("truncated tree key");
    const int tok = key[pos++];
    const int idx = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    if (tok >= 0) {
        t.nodes[idx].label = tok;
        return idx;
    }
    t.nodes[idx].label = -1 - tok;
    t.nodes[idx].mult = key.at(pos++);
    const int l = parse_key(key, pos, t);
    const int r = parse_key(key, pos, t);
    t.nodes[idx].left = l;
    t.nodes[idx].right = r;
    return idx;
}

int copy_subtree(const FusionTree& src, int n, FusionTree& dst) {
    const int idx = static_cast<int>(dst.nodes.size());
    dst.nodes.push_back(src.nodes[n]);
    if (!src.nodes[n].is_leaf()) {
        const int l = copy_subtree(src, src.nodes[n].left, dst);
        const int r = copy_subtree(src, src.nodes[n].right, dst);
        dst.nodes[idx].left = l;
        dst.nodes[idx].right = r;
    }
    return idx;
}

int node_at_path(const FusionTree& t, const std::string& path) {
    int n = t.root;
    for (char ch : path) {
        const auto& nd = t.nodes[n];
        if (nd.is_leaf()) throw StructuralError("tree path '" + path + "' runs past a leaf");
        if (ch == 'L') n = nd.left;
        else if (ch == 'R') n = nd.right;
        else throw StructuralError("tree path must consist of L and R");
    }
    return n;
}

std::vector<Term> expand(const TreeVector& v) {
    std::vector<Term> out;
    out.reserve(v.size());
    for (const auto& [k, a] : v.terms()) out.emplace_back(FusionTree::from_key(k), a);
    return out;
}

TreeVector map_terms(const TreeVector& v, const std::function<void(const FusionTree&, cplx, TreeVector&)>& fn) {
    TreeVector out;
    for (const auto& [k, a] : v.terms()) fn(FusionTree::from_key(k), a, out);
    out.prune();
    return out;
}

// Applies one F-move at node n, returning the resulting terms with their
// coefficients. Returns an empty list if the move is not applicable.
std::vector<Term> move_at(const FusionCategory& cat, const FusionTree& t, int n, MoveDirection dir) {
    std::vector<Term> out;
    const auto X = t.nodes[n];
    if (X.is_leaf()) return out;
    if (dir == MoveDirection::LeftToRight) {
        const int y = X.left;
        const auto Y = t.nodes[y];
        if (Y.is_leaf()) return out;
        const int an = Y.left, bn = Y.right, cn = X.right;
        const Label a = t.nodes[an].label, b = t.nodes[bn].label, c = t.nodes[cn].label;
        const Label d = X.label, e = Y.label;
        const FBlock& blk = cat.F(a, b, c, d);
        const int row = blk.row_index(e, Y.mult, X.mult);
        if (row < 0) return out;
        for (std::size_t j = 0; j < blk.cols.size(); ++j) {
            const cplx coef = blk.m(row, j);
            if (coef == 0.0) continue;
            const auto [f, al, be] = blk.cols[j];
            FusionTree u = t;
            u.nodes[y] = {f, be, bn, cn};
            u.nodes[n] = {d, al, an, y};
            out.emplace_back(std::move(u), coef);
        }
    } else {
        const int y = X.right;
        const auto Y = t.nodes[y];
        if (Y.is_leaf()) return out;
        const int an = X.left, bn = Y.left, cn = Y.right;
        const Label a = t.nodes[an].label, b = t.nodes[bn].label, c = t.nodes[cn].label;
        const Label d = X.label, f = Y.label;
        const FBlock& blk = cat.F(a, b, c, d);
        const int col = blk.col_index(f, X.mult, Y.mult);
        if (col < 0) return out;
        for (std::size_t i = 0; i < blk.rows.size(); ++i) {
            const cplx coef = std::conj(blk.m(i, col));
            if (coef == 0.0) continue;
            const auto [e, mu, nu] = blk.rows[i];
            FusionTree u = t;
            u.nodes[y] = {e, mu, an, bn};
            u.nodes[n] = {d, nu, y, cn};
            out.emplace_back(std::move(u), coef);
        }
    }
    return out;
}

// First node (preorder) whose right child is internal, or -1.
int first_right_internal(const FusionTree& t, int n) {
    const auto& nd = t.nodes[n];
    if (nd.is_leaf()) return -1;
    if (!t.nodes[nd.right].is_leaf()) return n;
    const int l = first_right_internal(t, nd.left);
    return l;
}

int first_left_internal(const FusionTree& t, int n) {
    const auto& nd = t.nodes[n];
    if (nd.is_leaf()) return -1;
    if (!t.nodes[nd.left].is_leaf()) return n;
    return first_left_internal(t, nd.right);
}

TreeVector canonicalize(const FusionCategory& cat, const TreeVector& v, bool left) {
    TreeVector out;
    std::vector<Term> work = expand(v);
    while (!work.empty()) {
        Term cur = std::move(work.back());
        work.pop_back();
        const int n = left ? first_right_internal(cur.first, cur.first.root)
                           : first_left_internal(cur.first, cur.first.root);
        if (n < 0) {
            out.add(cur.first, cur.second);
            continue;
        }
        for (auto& [u, c] : move_at(cat, cur.first, n, left ? MoveDirection::RightToLeft : MoveDirection::LeftToRight))
            work.emplace_back(std::move(u), cur.second * c);
    }
    out.prune();
    return out;
}

// Parent node of leaves p and p+1 if they are siblings, else -1.
int sibling_parent(const FusionTree& t, std::size_t p) {
    const auto lv = leaf_nodes(t);
    if (p + 1 >= lv.size()) return -1;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& nd = t.nodes[i];
        if (!nd.is_leaf() && nd.left == lv[p] && nd.right == lv[p + 1]) return static_cast<int>(i);
    }
    return -1;
}

void check_leaf_index(const FusionTree& t, std::size_t p, std::size_t extra = 0) {
    if (p + extra >= t.num_leaves()) throw StructuralError("leaf locator out of range");
}

} // namespace

FusionTree FusionTree::leaf(Label a) {
    FusionTree t;
    t.nodes.push_back({a, 0, -1, -1});
    t.root = 0;
    return t;
}

FusionTree FusionTree::join(const FusionTree& l, const FusionTree& r, Label c, int mult) {
    FusionTree t;
    t.nodes.push_back({c, mult, -1, -1});
    t.root = 0;
    const int li = copy_subtree(l, l.root, t);
    const int ri = copy_subtree(r, r.root, t);
    t.nodes[0].left = li;
    t.nodes[0].right = ri;
    return t;
}

FusionTree FusionTree::left_associated(const std::vector<Label>& leaves, const std::vector<Label>& internal,
                                       const std::vector<int>& mults) {
    if (leaves.empty()) throw StructuralError("tree needs at least one leaf");
    if (internal.size() + 1 != leaves.size())
        throw StructuralError("left-associated tree needs one internal label per vertex");
    if (!mults.empty() && mults.size() != internal.size()) throw StructuralError("multiplicity list length mismatch");
    FusionTree t = leaf(leaves[0]);
    for (std::size_t i = 1; i < leaves.size(); ++i)
        t = join(t, leaf(leaves[i]), internal[i - 1], mults.empty() ? 0 : mults[i - 1]);
    return t;
}

std::vector<Label> FusionTree::leaves() const {
    std::vector<Label> out;
    for (int n : leaf_nodes(*this)) out.push_back(nodes[n].label);
    return out;
}

std::size_t FusionTree::num_leaves() const { return leaf_nodes(*this).size(); }

bool FusionTree::admissible(const FusionCategory& cat) const {
    std::function<bool(int)> ok = [&](int n) {
        const auto& nd = nodes[n];
        if (nd.is_leaf()) return true;
        const int N = cat.N(nodes[nd.left].label, nodes[nd.right].label, nd.label);
        return nd.mult < N && ok(nd.left) && ok(nd.right);
    };
    return ok(root);
}

std::vector<int> FusionTree::key() const {
    std::vector<int> out;
    emit_key(*this, root, out);
    return out;
}

FusionTree FusionTree::from_key(const std::vector<int>& key) {
    FusionTree t;
    std::size_t pos = 0;
    t.root = parse_key(key, pos, t);
    if (pos != key.size()) throw StructuralError("trailing tokens in tree key");
    return t;
}

std::string FusionTree::to_string(const FusionCategory& cat) const {
    std::function<std::string(int)> rec = [&](int n) -> std::string {
        const auto& nd = nodes[n];
        if (nd.is_leaf()) return cat.labels[nd.label];
        std::string s = "(" + rec(nd.left) + " " + rec(nd.right) + ")_" + cat.labels[nd.label];
        if (nd.mult) s += "#" + std::to_string(nd.mult);
        return s;
    };
    return rec(root);
}

void TreeVector::add(const FusionTree& t, cplx amp) { add_key(t.key(), amp); }

void TreeVector::add_key(const std::vector<int>& key, cplx amp) {
    if (amp == 0.0) return;
    terms_[key] += amp;
}

cplx TreeVector::amplitude(const FusionTree& t) const {
    auto it = terms_.find(t.key());
    return it == terms_.end() ? cplx(0.0) : it->second;
}

void TreeVector::prune(double eps) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) < eps) it = terms_.erase(it);
        else ++it;
    }
}

TreeVector& TreeVector::operator*=(cplx s) {
    for (auto& kv : terms_) kv.second *= s;
    return *this;
}

TreeVector& TreeVector::operator+=(const TreeVector& o) {
    for (const auto& [k, a] : o.terms_) add_key(k, a);
    return *this;
}

double TreeVector::max_abs_diff(const TreeVector& o) const {
    double worst = 0.0;
    for (const auto& [k, a] : terms_) {
        auto it = o.terms_.find(k);
        worst = std::max(worst, std::abs(a - (it == o.terms_.end() ? cplx(0.0) : it->second)));
    }
    for (const auto& [k, a] : o.terms_)
        if (!terms_.count(k)) worst = std::max(worst, std::abs(a));
    return worst;
}

nlohmann::json TreeVector::to_json(const FusionCategory& cat) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, a] : terms_)
        arr.push_back({{"tree", FusionTree::from_key(k).to_string(cat)}, {"re", a.real()}, {"im", a.imag()}});
    return arr;
}

TreeVector f_move(const FusionCategory& cat, const TreeVector& v, const std::string& position, MoveDirection dir) {
    return map_terms(v, [&](const FusionTree& t, cplx a, TreeVector& out) {
        const int n = node_at_path(t, position);
        const auto& X = t.nodes[n];
        const bool ok = !X.is_leaf() &&
                        !t.nodes[dir == MoveDirection::LeftToRight ? X.left : X.right].is_leaf();
        if (!ok) throw StructuralError("no F-move available at position '" + position + "'");
        for (auto& [u, c] : move_at(cat, t, n, dir)) out.add(u, a * c);
    });
}

TreeVector to_left_associated(const FusionCategory& cat, const TreeVector& v) { return canonicalize(cat, v, true); }

TreeVector to_right_associated(const FusionCategory& cat, const TreeVector& v) { return canonicalize(cat, v, false); }

TreeVector make_siblings(const FusionCategory& cat, const TreeVector& v, std::size_t p, Route route) {
    if (v.empty()) return v;
    const std::size_t n = FusionTree::from_key(v.terms().begin()->first).num_leaves();
    if (p + 1 >= n) throw StructuralError("leaf pair locator out of range");
    if (route == Route::ViaLeftAssociated) {
        TreeVector c = to_left_associated(cat, v);
        if (p == 0) return c;
        return f_move(cat, c, std::string(n - 2 - p, 'L'), MoveDirection::LeftToRight);
    }
    TreeVector c = to_right_associated(cat, v);
    if (p + 2 == n) return c;
    return f_move(cat, c, std::string(p, 'R'), MoveDirection::RightToLeft);
}

TreeVector split_leaf(const FusionCategory& cat, const TreeVector& v, std::size_t p, Label x, Label y, int mult) {
    return map_terms(v, [&](const FusionTree& t, cplx a, TreeVector& out) {
        check_leaf_index(t, p);
        const int ln = leaf_nodes(t)[p];
        const Label c = t.nodes[ln].label;
        if (mult >= cat.N(x, y, c)) return;
        FusionTree u = t;
        const int li = static_cast<int>(u.nodes.size());
        u.nodes.push_back({x, 0, -1, -1});
        u.nodes.push_back({y, 0, -1, -1});
        u.nodes[ln] = {c, mult, li, li + 1};
        out.add(u, a);
    });
}

TreeVector substitute_leaf(const TreeVector& v, std::size_t p, const TreeVector& sub) {
    TreeVector out;
    for (const auto& [k, a] : v.terms()) {
        const FusionTree t = FusionTree::from_key(k);
        check_leaf_index(t, p);
        const int ln = leaf_nodes(t)[p];
        for (const auto& [sk, sa] : sub.terms()) {
            const FusionTree s = FusionTree::from_key(sk);
            if (s.root_label() != t.nodes[ln].label) throw StructuralError("substituted tree root does not match leaf");
            FusionTree u = t;
            const int r = copy_subtree(s, s.root, u);
            u.nodes[ln] = u.nodes[r];
            out.add(u, a * sa);
        }
    }
    out.prune();
    return out;
}

TreeVector fuse_leaves(const FusionCategory& cat, const TreeVector& v, std::size_t p, Label c, int mult, Route route) {
    const TreeVector s = make_siblings(cat, v, p, route);
    return map_terms(s, [&](const FusionTree& t, cplx a, TreeVector& out) {
        const int P = sibling_parent(t, p);
        if (P < 0) throw StructuralError("leaves are not siblings after re-bracketing");
        const auto& nd = t.nodes[P];
        if (nd.label != c || nd.mult != mult) return;
        const double f = std::sqrt(cat.qdim[t.nodes[nd.left].label] * cat.qdim[t.nodes[nd.right].label] / cat.qdim[c]);
        FusionTree u = t;
        u.nodes[P] = {c, 0, -1, -1};
        out.add(u, a * f);
    });
}

TreeVector insert_vacuum_leaf(const TreeVector& v, std::size_t p) {
    return map_terms(v, [&](const FusionTree& t, cplx a, TreeVector& out) {
        const auto lv = leaf_nodes(t);
        if (p > lv.size()) throw StructuralError("leaf locator out of range");
        const bool at_end = p == lv.size();
        const int ln = lv[at_end ? p - 1 : p];
        FusionTree u = t;
        const Label x = t.nodes[ln].label;
        const int li = static_cast<int>(u.nodes.size());
        u.nodes.push_back({x, 0, -1, -1});
        u.nodes.push_back({0, 0, -1, -1});
        if (at_end) u.nodes[ln] = {x, 0, li, li + 1};
        else u.nodes[ln] = {x, 0, li + 1, li};
        out.add(u, a);
    });
}

TreeVector remove_vacuum_leaf(const TreeVector& v, std::size_t p) {
    return map_terms(v, [&](const FusionTree& t, cplx a, TreeVector& out) {
        check_leaf_index(t, p);
        const int ln = leaf_nodes(t)[p];
        if (t.nodes[ln].label != 0) throw StructuralError("leaf to remove is not the vacuum");
        if (ln == t.root) {
            out.add(t, a);
            return;
        }
        int parent = -1;
        for (std::size_t i = 0; i < t.nodes.size(); ++i)
            if (!t.nodes[i].is_leaf() && (t.nodes[i].left == ln || t.nodes[i].right == ln)) parent = static_cast<int>(i);
        FusionTree u = t;
        const int other = t.nodes[parent].left == ln ? t.nodes[parent].right : t.nodes[parent].left;
        u.nodes[parent] = u.nodes[other];
        out.add(u, a);
    });
}

TreeVector cup(const FusionCategory& cat, const TreeVector& v, std::size_t p, Label s) {
    return split_leaf(cat, insert_vacuum_leaf(v, p), p, s, cat.dual[s]);
}

TreeVector cap(const FusionCategory& cat, const TreeVector& v, std::size_t p, Route route) {
    if (v.empty()) return v;
    const auto lv = FusionTree::from_key(v.terms().begin()->first).leaves();
    if (p + 1 >= lv.size()) throw StructuralError("cap locator out of range");
    if (cat.dual[lv[p]] != lv[p + 1]) throw StructuralError("cap needs a dual pair of strands");
    return remove_vacuum_leaf(fuse_leaves(cat, v, p, 0, 0, route), p);
}

TreeVector bend(const FusionCategory& cat, const TreeVector& v, std::size_t leaf, BendDirection dir) {
    if (v.empty()) return v;
    const std::size_t n = FusionTree::from_key(v.terms().begin()->first).num_leaves();
    const bool left = leaf == 0;
    if (!left && leaf + 1 != n) throw StructuralError("bend requires an outermost leaf");
    if (dir == BendDirection::Up) {
        return map_terms(v, [&](const FusionTree& t, cplx a, TreeVector& out) {
            const FusionTree nb = FusionTree::leaf(cat.dual[t.root_label()]);
            out.add(left ? FusionTree::join(nb, t, 0) : FusionTree::join(t, nb, 0), a);
        });
    }
    TreeVector attached;
    for (const auto& [k, a] : v.terms()) {
        const FusionTree t = FusionTree::from_key(k);
        if (t.root_label() != 0) throw StructuralError("bending down needs a vacuum root");
        const Label x = t.leaves()[leaf];
        const FusionTree nb = FusionTree::leaf(cat.dual[x]);
        attached.add(left ? FusionTree::join(nb, t, cat.dual[x]) : FusionTree::join(t, nb, cat.dual[x]), a);
    }
    return cap(cat, attached, left ? 0 : n - 1);
}

std::vector<CompletenessTerm> completeness_terms(const FusionCategory& cat, Label a, Label b) {
    std::vector<CompletenessTerm> out;
    for (Label c = 0; c < cat.rank(); ++c)
        for (int m = 0; m < cat.N(a, b, c); ++m)
            out.push_back({c, m, std::sqrt(cat.qdim[c] / (cat.qdim[a] * cat.qdim[b]))});
    return out;
}

TreeVector fuse_pair(const FusionCategory& cat, const TreeVector& v, std::size_t p) {
    if (v.empty()) return v;
    const auto lv = FusionTree::from_key(v.terms().begin()->first).leaves();
    if (p + 1 >= lv.size()) throw StructuralError("leaf pair locator out of range");
    TreeVector out;
    for (const auto& term : completeness_terms(cat, lv[p], lv[p + 1])) {
        TreeVector piece = split_leaf(cat, fuse_leaves(cat, v, p, term.c, term.mult), p, lv[p], lv[p + 1], term.mult);
        piece *= term.coeff;
        out += piece;
    }
    out.prune();
    return out;
}

cplx inner_product(const FusionCategory& cat, const TreeVector& v1, const TreeVector& v2) {
    if (v1.empty() || v2.empty()) return 0.0;
    const FusionTree r1 = FusionTree::from_key(v1.terms().begin()->first);
    const FusionTree r2 = FusionTree::from_key(v2.terms().begin()->first);
    if (r1.leaves() != r2.leaves() || r1.root_label() != r2.root_label())
        throw StructuralError("inner product of trees with different boundaries");
    double norm = 1.0 / cat.qdim[r1.root_label()];
    for (Label x : r1.leaves()) norm *= cat.qdim[x];
    norm = std::sqrt(norm);
    const TreeVector a = to_left_associated(cat, v1), b = to_left_associated(cat, v2);
    cplx acc = 0.0;
    for (const auto& [k, x] : a.terms()) {
        auto it = b.terms().find(k);
        if (it != b.terms().end()) acc += std::conj(x) * it->second;
    }
    return acc * norm;
}

cplx inner_product(const FusionCategory& cat, const FusionTree& t1, const FusionTree& t2) {
    return inner_product(cat, TreeVector(t1), TreeVector(t2));
}

TreeVector pop_bubble(const FusionCategory& cat, const TreeVector& v, std::size_t p) {
    const TreeVector s = make_siblings(cat, v, p);
    for (const auto& [k, a] : s.terms()) {
        const FusionTree t = FusionTree::from_key(k);
        const int P = sibling_parent(t, p);
        if (P < 0 || t.nodes[P].label != 0) throw StructuralError("locator does not address a closed bubble");
    }
    return cap(cat, s, p);
}

TreeVector vacuum_collapse(const FusionCategory& cat, const TreeVector& v) {
    if (v.empty()) return v;
    const FusionTree t = FusionTree::from_key(v.terms().begin()->first);
    const auto lv = t.leaves();
    if (t.root_label() != 0 || lv.size() != 2) throw StructuralError("vacuum collapse needs Hom(1, a b)");
    if (cat.N(lv[0], lv[1], 0) == 0) return {};
    return v;
}

cplx vertex_reduction_coeff(const FusionCategory& cat, Label s, int k, const HexVertexLabels& lab, Route route) {
    if (!cat.multiplicity_free()) throw StructuralError("vertex reduction implemented for multiplicity-free categories");
    const Label sb = cat.dual[s];
    const auto& d = cat.qdim;
    auto N = [&](Label a, Label b, Label c) { return cat.N(a, b, c) > 0; };
    using FT = FusionTree;
    TreeVector v;
    switch (k) {
    case 1: {
        // (i6, i1) -> e1 with w = i6', y = i1' split from above.
        const Label i6 = lab.i_prev, i1 = lab.i_cur, w = lab.ip_prev, y = lab.ip_cur, e1 = lab.e;
        if (!N(i6, i1, e1) || !N(w, y, e1) || !N(i6, s, w) || !N(sb, i1, y)) return 0.0;
        v = TreeVector(FT::join(FT::leaf(w), FT::leaf(y), e1));
        v = split_leaf(cat, v, 1, sb, i1);
        v = split_leaf(cat, v, 0, i6, s);
        v = cap(cat, v, 1, route);
        v = fuse_leaves(cat, v, 0, e1, 0, route);
        return v.amplitude(FT::leaf(e1)) / std::sqrt(d[w] * d[y] / d[e1]);
    }
    case 2: {
        // i2 -> (i1, e2) with x = i2' below and y = i1' above.
        const Label i1 = lab.i_prev, i2 = lab.i_cur, y = lab.ip_prev, x = lab.ip_cur, e2 = lab.e;
        if (!N(i1, e2, i2) || !N(y, e2, x) || !N(sb, i2, x) || !N(sb, i1, y)) return 0.0;
        v = TreeVector(FT::leaf(x));
        v = split_leaf(cat, v, 0, sb, i2);
        v = split_leaf(cat, v, 1, i1, e2);
        v = fuse_leaves(cat, v, 0, y, 0, route);
        return v.amplitude(FT::join(FT::leaf(y), FT::leaf(e2), x));
    }
    case 3: {
        // (i3, e3) -> i2 with z = i3' below and x = i2' above.
        const Label i2 = lab.i_prev, i3 = lab.i_cur, x = lab.ip_prev, z = lab.ip_cur, e3 = lab.e;
        if (!N(i3, e3, i2) || !N(z, e3, x) || !N(sb, i3, z) || !N(sb, i2, x)) return 0.0;
        v = TreeVector(FT::join(FT::leaf(z), FT::leaf(e3), x));
        v = split_leaf(cat, v, 0, sb, i3);
        v = fuse_leaves(cat, v, 1, i2, 0, route);
        v = fuse_leaves(cat, v, 0, x, 0, route);
        return v.amplitude(FT::leaf(x)) / std::sqrt(d[z] * d[e3] / d[x]);
    }
    case 4: {
        // e4 -> (i4, i3) with the loop turning below the ring.
        const Label i3 = lab.i_prev, i4 = lab.i_cur, z = lab.ip_prev, u = lab.ip_cur, e4 = lab.e;
        if (!N(i4, i3, e4) || !N(u, z, e4) || !N(i4, s, u) || !N(sb, i3, z)) return 0.0;
        v = TreeVector(FT::leaf(e4));
        v = split_leaf(cat, v, 0, i4, i3);
        v = cup(cat, v, 1, s);
        v = fuse_leaves(cat, v, 0, u, 0, route);
        v = fuse_leaves(cat, v, 1, z, 0, route);
        return v.amplitude(FT::join(FT::leaf(u), FT::leaf(z), e4));
    }
    case 5: {
        // (e5, i4) -> i5 with u = i4' below and v = i5' above.
        const Label i4 = lab.i_prev, i5 = lab.i_cur, u = lab.ip_prev, vv = lab.ip_cur, e5 = lab.e;
        if (!N(e5, i4, i5) || !N(e5, u, vv) || !N(i4, s, u) || !N(i5, s, vv)) return 0.0;
        v = TreeVector(FT::join(FT::leaf(e5), FT::leaf(u), vv));
        v = split_leaf(cat, v, 1, i4, s);
        v = fuse_leaves(cat, v, 0, i5, 0, route);
        v = fuse_leaves(cat, v, 0, vv, 0, route);
        return v.amplitude(FT::leaf(vv)) / std::sqrt(d[e5] * d[u] / d[vv]);
    }
    case 6: {
        // i5 -> (e6, i6) with v = i5' below and w = i6' above.
        const Label i5 = lab.i_prev, i6 = lab.i_cur, vv = lab.ip_prev, w = lab.ip_cur, e6 = lab.e;
        if (!N(e6, i6, i5) || !N(e6, w, vv) || !N(i5, s, vv) || !N(i6, s, w)) return 0.0;
        v = TreeVector(FT::leaf(vv));
        v = split_leaf(cat, v, 0, i5, s);
        v = split_leaf(cat, v, 0, e6, i6);
        v = fuse_leaves(cat, v, 1, w, 0, route);
        return v.amplitude(FT::join(FT::leaf(e6), FT::leaf(w), vv));
    }
    default:
        throw StructuralError("hexagon vertex index must be 1..6");
    }
}

Eigen::MatrixXcd plaquette_coeffs(const FusionCategory& cat, Label s, int k, const HexVertexLabels& lab) {
    const cplx c = vertex_reduction_coeff(cat, s, k, lab);
    if (c == 0.0) return Eigen::MatrixXcd(0, 0);
    const auto& d = cat.qdim;
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = c * std::sqrt(d[lab.ip_prev] / d[lab.i_prev]) * std::sqrt(d[lab.ip_cur] / d[lab.i_cur]);
    return m;
}

cplx PlaquetteCoeffCache::get(Label s, int k, const HexVertexLabels& lab) {
    const std::array<int, 7> key{s, k, lab.e, lab.i_prev, lab.i_cur, lab.ip_prev, lab.ip_cur};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const cplx c = vertex_reduction_coeff(cat_, s, k, lab);
    memo_.emplace(key, c);
    return c;
}

} // namespace snlab
