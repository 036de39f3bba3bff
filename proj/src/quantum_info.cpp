#include "snlab/quantum_info.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace snlab {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct BlockEigen {
    VectorXd values;    // ascending
    MatrixXcd vectors;  // matching columns, when requested
};

// Eigenpairs of the Hermitian part of h, solved separately on each
// connected component of its nonzero pattern (entries above 1e-15 of the
// largest). Reduced string-net states split into many such blocks.
BlockEigen block_eigen(const MatrixXcd& h, bool with_vectors) {
    const Eigen::Index n = h.rows();
    BlockEigen out;
    const MatrixXcd sym = (h + h.adjoint()) / 2.0;
    const int mode = with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    const double cut = n ? 1e-15 * sym.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    auto find = [&](Eigen::Index x) {
        while (parent[static_cast<std::size_t>(x)] != x)
            x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        return x;
    };
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            if (std::abs(sym(i, j)) > cut) parent[static_cast<std::size_t>(find(i))] = find(j);
    std::map<Eigen::Index, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) groups[find(i)].push_back(i);
    if (groups.size() <= 1) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym, mode);
        out.values = es.eigenvalues();
        if (with_vectors) out.vectors = es.eigenvectors();
        return out;
    }
    std::vector<std::pair<double, Eigen::Index>> order;  // (value, column in cols)
    std::vector<VectorXcd> cols;
    std::vector<const std::vector<Eigen::Index>*> owner;
    for (const auto& [root, idx] : groups) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym(idx, idx), mode);
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            order.emplace_back(es.eigenvalues()[k], static_cast<Eigen::Index>(order.size()));
            if (with_vectors) {
                cols.push_back(es.eigenvectors().col(k));
                owner.push_back(&idx);
            }
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    out.values.resize(n);
    if (with_vectors) out.vectors = MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values[k] = order[static_cast<std::size_t>(k)].first;
        if (!with_vectors) continue;
        const auto src = static_cast<std::size_t>(order[static_cast<std::size_t>(k)].second);
        const auto& idx = *owner[src];
        for (std::size_t t = 0; t < idx.size(); ++t) out.vectors(idx[t], k) = cols[src][static_cast<Eigen::Index>(t)];
    }
    return out;
}

VectorXd hermitian_eigenvalues(const MatrixXcd& h) {
    if (h.rows() == 0) return VectorXd();
    return block_eigen(h, false).values;
}

// Packs the configuration a basis state shows on (edges, vertices) into one
// key, lexicographic in the entry order. Falls back to ranking the entry
// vectors when they do not fit in 128 bits.
// Keys of the basis states listed in rows (all of them when rows is null),
// in that order.
std::vector<ConfigKey> config_keys(const StringNetBasis& basis, int rank, const std::vector<int>& edges,
                                   const std::vector<int>& vertices, const std::vector<std::size_t>* rows = nullptr) {
    const std::size_t n = rows ? rows->size() : basis.size();
    auto row = [&](std::size_t i) { return basis.key(rows ? (*rows)[i] : i); };
    int top = std::max(rank - 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (int v : vertices) top = std::max(top, basis.mult(row(i), v));
    int width = 1;
    while ((1 << width) <= top) ++width;
    const std::size_t entries = edges.size() + vertices.size();
    std::vector<ConfigKey> keys(n);
    if (entries * static_cast<std::size_t>(width) <= 128) {
        for (std::size_t i = 0; i < n; ++i) {
            ConfigKey k = 0, b = row(i);
            for (int e : edges) k = (k << width) | static_cast<ConfigKey>(basis.label(b, e));
            for (int v : vertices) k = (k << width) | static_cast<ConfigKey>(basis.mult(b, v));
            keys[i] = k;
        }
        return keys;
    }
    std::vector<std::vector<int>> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        ConfigKey b = row(i);
        all[i].reserve(entries);
        for (int e : edges) all[i].push_back(basis.label(b, e));
        for (int v : vertices) all[i].push_back(basis.mult(b, v));
    }
    std::map<std::vector<int>, ConfigKey> rank_of;
    for (const auto& c : all) rank_of.emplace(c, 0);
    ConfigKey next = 0;
    for (auto& [c, r] : rank_of) r = next++;
    for (std::size_t i = 0; i < n; ++i) keys[i] = rank_of.at(all[i]);
    return keys;
}

// Dense ranks of keys in increasing order; returns the number of distinct keys.
std::size_t rank_keys(const std::vector<ConfigKey>& keys, std::vector<int>& index) {
    std::vector<ConfigKey> sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    index.resize(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
        index[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
    return sorted.size();
}

MatrixXcd gaussian(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    MatrixXcd z(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) {
            double re = nd(rng);
            double im = nd(rng);
            z(i, j) = cplx(re, im);
        }
    return z;
}

MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
    MatrixXcd z = gaussian(n, n, rng);
    Eigen::HouseholderQR<MatrixXcd> qr(z);
    MatrixXcd q = qr.householderQ();
    MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        cplx d = r(j, j);
        if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

MatrixXcd random_state(int n, int rank, std::mt19937_64& rng) {
    MatrixXcd g = gaussian(n, rank, rng);
    MatrixXcd rho = g * g.adjoint();
    return rho / rho.trace().real();
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

MatrixXcd identity(Eigen::Index n) { return MatrixXcd::Identity(n, n); }

// Closest unitary in Frobenius norm.
MatrixXcd polar_unitary(const MatrixXcd& m) {
    Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

} // namespace

// ---------------------------------------------------------------------------

bool DensityMatrix::valid(double tol) const {
    if (m.rows() != m.cols() || m.rows() == 0) return false;
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(m.trace() - cplx(1.0, 0.0)) > tol) return false;
    return hermitian_eigenvalues(m).minCoeff() >= -tol;
}

FactorMap::FactorMap(const StringNetModel& model, const Region& region) {
    const HoneycombLattice& lat = *model.lat;
    for (int v : region.vertices)
        if (v < 0 || v >= lat.num_vertices())
            throw StructuralError("region vertex " + std::to_string(v) + " is not on the lattice");
    Region rest = region_complement(lat, region);
    region_edges_ = region.edges;
    region_vertices_ = region.vertices;
    basis_ = &model.basis;
    const int rank = model.cat->rank();
    region_dim_ = rank_keys(config_keys(model.basis, rank, region.edges, region.vertices), region_index_);
    complement_dim_ = rank_keys(config_keys(model.basis, rank, rest.edges, rest.vertices), complement_index_);
    region_rep_.assign(region_dim_, 0);
    for (std::size_t i = model.basis.size(); i-- > 0;) region_rep_[region_index_[i]] = i;
    by_complement_.assign(complement_dim_, {});
    for (std::size_t i = 0; i < model.basis.size(); ++i) by_complement_[complement_index_[i]].push_back(i);
}

std::vector<std::vector<int>> FactorMap::region_configs() const {
    std::vector<std::vector<int>> out(region_dim_);
    for (std::size_t r = 0; r < region_dim_; ++r) {
        ConfigKey k = basis_->key(region_rep_[r]);
        for (int e : region_edges_) out[r].push_back(basis_->label(k, e));
        for (int v : region_vertices_) out[r].push_back(basis_->mult(k, v));
    }
    return out;
}

SparseMatrix FactorMap::reshape(const StateVector& psi) const {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        if (psi[i] != cplx(0.0, 0.0)) trip.emplace_back(region_index_[i], complement_index_[i], psi[i]);
    SparseMatrix m(static_cast<Eigen::Index>(region_dim()), static_cast<Eigen::Index>(complement_dim()));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

MatrixXcd FactorMap::apply_local(const MatrixXcd& o, const MatrixXcd& x) const {
    MatrixXcd y = MatrixXcd::Zero(x.rows(), x.cols());
    for (const auto& group : by_complement_)
        for (std::size_t i : group)
            for (std::size_t j : group)
                y.row(static_cast<Eigen::Index>(i)) +=
                    o(region_index_[i], region_index_[j]) * x.row(static_cast<Eigen::Index>(j));
    return y;
}

std::pair<double, double> ltqo_residual(const FactorMap& fm, const MatrixXcd& g, const MatrixXcd& o) {
    MatrixXcd m = g.adjoint() * fm.apply_local(o, g);
    double c = m.trace().real() / static_cast<double>(m.rows());
    MatrixXcd d = m - c * identity(m.rows());
    VectorXd ev = hermitian_eigenvalues(d);
    double res = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
    // The compression of a Hermitian O stays Hermitian; any skew part is error.
    res = std::max(res, (d - d.adjoint()).cwiseAbs().maxCoeff());
    return {c, res};
}

double von_neumann(const VectorXd& eigenvalues) {
    double s = 0.0;
    for (double l : eigenvalues)
        if (l > kEigenClip) s -= l * std::log(l);
    return s;
}

double entropy(const DensityMatrix& rho) { return dense_entropy(rho.m); }

DensityMatrix reduced_density_matrix(const FactorMap& fm, const StateVector& psi) {
    SparseMatrix m = fm.reshape(psi);
    SparseMatrix r = m * SparseMatrix(m.adjoint());
    return {MatrixXcd(r), ""};
}

DensityMatrix reduced_density_matrix(const StringNetModel& model, const StateVector& psi, const Region& region) {
    DensityMatrix out = reduced_density_matrix(FactorMap(model, region), psi);
    out.region = region.role;
    return out;
}

Eigen::VectorXd gram_spectrum(const std::vector<SparseMatrix>& ms) {
    if (ms.empty()) return VectorXd();
    const Eigen::Index rows = ms[0].rows(), cols = ms[0].cols();
    // Union-find over rows (0..rows-1) and columns (rows..rows+cols-1).
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(rows + cols));
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<Eigen::Index>(i);
    auto find = [&](Eigen::Index x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& m : ms)
        for (Eigen::Index c = 0; c < m.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(m, c); it; ++it) parent[find(it.row())] = find(rows + c);
    std::map<Eigen::Index, std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> blocks;
    for (Eigen::Index r = 0; r < rows; ++r) blocks[find(r)].first.push_back(r);
    for (Eigen::Index c = 0; c < cols; ++c) blocks[find(rows + c)].second.push_back(c);
    std::vector<double> ev;
    for (const auto& [root, rc] : blocks) {
        const auto& [rs, cs] = rc;
        if (rs.empty() || cs.empty()) continue;
        std::vector<Eigen::Index> rpos(static_cast<std::size_t>(rows), -1), cpos;
        std::map<Eigen::Index, Eigen::Index> cmap;
        for (std::size_t i = 0; i < rs.size(); ++i) rpos[rs[i]] = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < cs.size(); ++j) cmap[cs[j]] = static_cast<Eigen::Index>(j);
        const auto nr = static_cast<Eigen::Index>(rs.size()), nc = static_cast<Eigen::Index>(cs.size());
        // Stack the blocks of every m_i side by side: [m_1 | m_2 | ...].
        MatrixXcd k = MatrixXcd::Zero(nr, nc * static_cast<Eigen::Index>(ms.size()));
        for (std::size_t t = 0; t < ms.size(); ++t)
            for (Eigen::Index c : cs)
                for (SparseMatrix::InnerIterator it(ms[t], c); it; ++it)
                    k(rpos[it.row()], static_cast<Eigen::Index>(t) * nc + cmap[c]) = it.value();
        MatrixXcd g = k.rows() <= k.cols() ? MatrixXcd(k * k.adjoint()) : MatrixXcd(k.adjoint() * k);
        VectorXd e = hermitian_eigenvalues(g);
        ev.insert(ev.end(), e.data(), e.data() + e.size());
    }
    return Eigen::Map<VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
}

namespace {

// sqrt(w_i) psi_i reshaped into region x complement, indexed only over the
// configurations some psi_i touches.
std::vector<SparseMatrix> support_reshape(const StringNetModel& model, const Region& region,
                                          const std::vector<std::pair<double, StateVector>>& mixture) {
    const HoneycombLattice& lat = *model.lat;
    for (int v : region.vertices)
        if (v < 0 || v >= lat.num_vertices())
            throw StructuralError("region vertex " + std::to_string(v) + " is not on the lattice");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < model.dim(); ++i)
        for (const auto& [w, psi] : mixture)
            if (w != 0.0 && psi[static_cast<Eigen::Index>(i)] != cplx(0.0, 0.0)) {
                rows.push_back(i);
                break;
            }
    const Region rest = region_complement(lat, region);
    const int rank = model.cat->rank();
    std::vector<int> ri, ci;
    const std::size_t rd = rank_keys(config_keys(model.basis, rank, region.edges, region.vertices, &rows), ri);
    const std::size_t cd = rank_keys(config_keys(model.basis, rank, rest.edges, rest.vertices, &rows), ci);
    std::vector<SparseMatrix> out;
    for (const auto& [w, psi] : mixture) {
        std::vector<Eigen::Triplet<cplx>> trip;
        for (std::size_t j = 0; j < rows.size(); ++j) {
            const cplx a = psi[static_cast<Eigen::Index>(rows[j])];
            if (a != cplx(0.0, 0.0)) trip.emplace_back(ri[j], ci[j], std::sqrt(w) * a);
        }
        SparseMatrix m(static_cast<Eigen::Index>(rd), static_cast<Eigen::Index>(cd));
        m.setFromTriplets(trip.begin(), trip.end());
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace

double region_entropy(const StringNetModel& model, const StateVector& psi, const Region& region) {
    return von_neumann(gram_spectrum(support_reshape(model, region, {{1.0, psi}})));
}

double region_entropy(const StringNetModel& model, const std::vector<std::pair<double, StateVector>>& mixture,
                      const Region& region) {
    return von_neumann(gram_spectrum(support_reshape(model, region, mixture)));
}

namespace {

void require_disjoint(const Region& a, const Region& b) {
    if (!regions_disjoint(a, b)) throw ValidationError("regions overlap");
}

} // namespace

double cmi(const StringNetModel& model, const StateVector& psi, const Region& A, const Region& B, const Region& C) {
    require_disjoint(A, B);
    require_disjoint(B, C);
    require_disjoint(A, C);
    const HoneycombLattice& lat = *model.lat;
    Region ab = region_union(lat, A, B);
    Region bc = region_union(lat, B, C);
    Region abc = region_union(lat, ab, C);
    return region_entropy(model, psi, ab) + region_entropy(model, psi, bc) - region_entropy(model, psi, B) -
           region_entropy(model, psi, abc);
}

double mutual_information(const StringNetModel& model, const StateVector& psi, const Region& A, const Region& C) {
    require_disjoint(A, C);
    Region ac = region_union(*model.lat, A, C);
    return region_entropy(model, psi, A) + region_entropy(model, psi, C) - region_entropy(model, psi, ac);
}

// ---------------------------------------------------------------------------

MatrixXcd partial_trace(const MatrixXcd& rho, const std::vector<int>& dims, const std::vector<int>& keep) {
    const int n = static_cast<int>(dims.size());
    Eigen::Index total = 1;
    for (int d : dims) total *= d;
    if (rho.rows() != total || rho.cols() != total) throw ValidationError("partial_trace: dimension mismatch");
    std::vector<Eigen::Index> stride(n, 1);
    for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];
    std::vector<bool> kept(n, false);
    for (int k : keep) {
        if (k < 0 || k >= n) throw ValidationError("partial_trace: bad subsystem");
        kept[k] = true;
    }
    // Offsets of every kept (resp. traced) multi-index, in subsystem order.
    auto offsets = [&](bool want) {
        std::vector<Eigen::Index> off{0};
        for (int i = 0; i < n; ++i) {
            if (kept[i] != want) continue;
            std::vector<Eigen::Index> next;
            next.reserve(off.size() * dims[i]);
            for (Eigen::Index o : off)
                for (int x = 0; x < dims[i]; ++x) next.push_back(o + x * stride[i]);
            off = std::move(next);
        }
        return off;
    };
    std::vector<Eigen::Index> ko = offsets(true), to = offsets(false);
    auto kd = static_cast<Eigen::Index>(ko.size());
    MatrixXcd out = MatrixXcd::Zero(kd, kd);
    for (Eigen::Index c = 0; c < kd; ++c)
        for (Eigen::Index r = 0; r < kd; ++r) {
            cplx s(0.0, 0.0);
            for (Eigen::Index t : to) s += rho(ko[r] + t, ko[c] + t);
            out(r, c) = s;
        }
    return out;
}

MatrixXcd hermitian_function(const MatrixXcd& h, double (*f)(double)) {
    const BlockEigen es = block_eigen(h, true);
    VectorXd ev = es.values;
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = f(ev[i]);
    return es.vectors * ev.asDiagonal() * es.vectors.adjoint();
}

double dense_entropy(const MatrixXcd& rho) { return von_neumann(hermitian_eigenvalues(rho)); }

double dense_cmi(const MatrixXcd& rho, int dx, int dy, int dz) {
    std::vector<int> dims{dx, dy, dz};
    return dense_entropy(partial_trace(rho, dims, {0, 1})) + dense_entropy(partial_trace(rho, dims, {1, 2})) -
           dense_entropy(partial_trace(rho, dims, {1})) - dense_entropy(rho);
}

double factored_entropy(const MatrixXcd& g) {
    MatrixXcd gram = g.rows() <= g.cols() ? MatrixXcd(g * g.adjoint()) : MatrixXcd(g.adjoint() * g);
    return von_neumann(hermitian_eigenvalues(gram));
}

double factored_trace_distance(const MatrixXcd& g, const MatrixXcd& h) {
    if (g.rows() != h.rows()) throw ValidationError("factored_trace_distance: shape mismatch");
    // GG^dagger - HH^dagger lives on the column space of M = [G H]. With
    // M^dagger M = V S^2 V^dagger, Q = M V S^-1 is an orthonormal basis of
    // it and Q^dagger M = S V^dagger.
    MatrixXcd both(g.rows(), g.cols() + h.cols());
    both << g, h;
    MatrixXcd mm = both.adjoint() * both;
    const BlockEigen es = block_eigen(mm, true);
    const VectorXd& ev = es.values;
    const double top = ev.size() ? ev.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] > kEigenClip * std::max(1.0, top)) keep.push_back(i);
    MatrixXcd qm(static_cast<Eigen::Index>(keep.size()), both.cols());  // Q^dagger M
    for (std::size_t i = 0; i < keep.size(); ++i)
        qm.row(static_cast<Eigen::Index>(i)) = std::sqrt(ev[keep[i]]) * es.vectors.col(keep[i]).adjoint();
    MatrixXcd gq = qm.leftCols(g.cols()), hq = qm.rightCols(h.cols());
    return 0.5 * hermitian_eigenvalues(gq * gq.adjoint() - hq * hq.adjoint()).cwiseAbs().sum();
}

double trace_distance(const MatrixXcd& a, const MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("trace_distance: shape mismatch");
    return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

std::vector<Eigen::Index> parts_positions(const StringNetModel& model, const std::vector<Region>& parts,
                                          std::vector<int>* dims) {
    const HoneycombLattice& lat = *model.lat;
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j) require_disjoint(parts[i], parts[j]);
    Region all = make_region(lat, {});
    for (const Region& p : parts) all = region_union(lat, all, p);
    FactorMap whole(model, all);
    std::vector<FactorMap> pm;
    std::vector<int> d;
    for (const Region& p : parts) {
        pm.emplace_back(model, p);
        d.push_back(static_cast<int>(pm.back().region_dim()));
    }
    std::vector<Eigen::Index> pos(whole.region_dim(), -1);
    for (std::size_t i = 0; i < model.dim(); ++i) {
        Eigen::Index t = 0;
        for (std::size_t k = 0; k < pm.size(); ++k) t = t * d[k] + pm[k].region_index(i);
        pos[whole.region_index(i)] = t;
    }
    if (dims) *dims = d;
    return pos;
}

PartsState reduce_to_parts(const StringNetModel& model, const std::vector<std::pair<double, StateVector>>& mixture,
                           const std::vector<Region>& parts) {
    const HoneycombLattice& lat = *model.lat;
    PartsState out;
    std::vector<Eigen::Index> pos = parts_positions(model, parts, &out.dims);
    for (const Region& p : parts) out.part_configs.push_back(FactorMap(model, p).region_configs());
    Region all = make_region(lat, {});
    for (const Region& p : parts) all = region_union(lat, all, p);
    FactorMap whole(model, all);
    Eigen::Index total = 1;
    for (int d : out.dims) total *= d;
    MatrixXcd ru = MatrixXcd::Zero(static_cast<Eigen::Index>(whole.region_dim()),
                                   static_cast<Eigen::Index>(whole.region_dim()));
    for (const auto& [w, psi] : mixture) {
        SparseMatrix m = whole.reshape(psi);
        ru += w * MatrixXcd(m * SparseMatrix(m.adjoint()));
    }
    out.rho = MatrixXcd::Zero(total, total);
    for (Eigen::Index c = 0; c < ru.cols(); ++c)
        for (Eigen::Index r = 0; r < ru.rows(); ++r) out.rho(pos[r], pos[c]) = ru(r, c);
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json MergeResult::to_json() const {
    return {{"regularized", regularized},     {"consistency_bc", consistency_bc}, {"cmi_rho", cmi_rho},
            {"cmi_lambda", cmi_lambda},       {"marginal_abc", marginal_abc},     {"marginal_bcd", marginal_bcd},
            {"cmi_tau_a_cd_given_b", cmi_tau_a}, {"cmi_tau_ab_d_given_c", cmi_tau_d}};
}

namespace {
void top_eigen(const MatrixXcd& h, VectorXd& vals, MatrixXcd& vecs);
} // namespace

MergeResult petz_merge(const MatrixXcd& rho_abc, const MatrixXcd& lambda_bcd, const std::vector<int>& dims,
                       double tol) {
    if (dims.size() != 4) throw ValidationError("petz_merge: dims must be {a, b, c, d}");
    const Eigen::Index a = dims[0], b = dims[1], c = dims[2], d = dims[3];
    if (rho_abc.rows() != a * b * c || lambda_bcd.rows() != b * c * d)
        throw ValidationError("petz_merge: input dimensions do not match dims");
    MergeResult res;
    VectorXd lam;
    MatrixXcd vecs;
    top_eigen(rho_abc, lam, vecs);
    const double s_abc = von_neumann(lam), s_bcd = dense_entropy(lambda_bcd);
    MatrixXcd rho_bc = partial_trace(rho_abc, {dims[0], dims[1], dims[2]}, {1, 2});
    MatrixXcd lam_bc = partial_trace(lambda_bcd, {dims[1], dims[2], dims[3]}, {0, 1});
    res.consistency_bc = trace_distance(rho_bc, lam_bc);
    res.cmi_rho = dense_entropy(partial_trace(rho_abc, {dims[0], dims[1], dims[2]}, {0, 1})) + dense_entropy(rho_bc) -
                  dense_entropy(partial_trace(rho_bc, {dims[1], dims[2]}, {0})) - s_abc;
    MatrixXcd lcd = partial_trace(lambda_bcd, {dims[1], dims[2], dims[3]}, {1, 2});
    MatrixXcd lc = partial_trace(lcd, {dims[2], dims[3]}, {0});
    res.cmi_lambda = dense_entropy(lam_bc) + dense_entropy(lcd) - dense_entropy(lc) - s_bcd;
    if (res.consistency_bc > tol || res.cmi_rho > tol || res.cmi_lambda > tol) {
        std::ostringstream os;
        os << "petz_merge hypotheses fail: |rho_BC - lambda_BC| = " << res.consistency_bc
           << ", I(A:C|B)_rho = " << res.cmi_rho << ", I(B:D|C)_lambda = " << res.cmi_lambda;
        throw PreconditionError(os.str());
    }

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es((lc + lc.adjoint()) / 2.0);
    VectorXd inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        if (inv[i] > kEigenClip) {
            inv[i] = 1.0 / std::sqrt(inv[i]);
        } else {
            inv[i] = 0.0;
            res.regularized = true;
        }
    }
    MatrixXcd lc_inv_sqrt = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
    MatrixXcd lcd_sqrt = hermitian_function(lcd, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });

    // tau = F F^dagger with F = (1_AB (x) K)(rho_ABC^1/2 (x) 1_D) and
    // K = lambda_CD^1/2 (lambda_C^-1/2 (x) 1_D); rho_ABC^1/2 is kept as the
    // rectangular factor h over its support.
    const MatrixXcd k = lcd_sqrt * kron(lc_inv_sqrt, identity(d));
    const Eigen::Index r = lam.size();
    const MatrixXcd h = vecs * lam.cwiseSqrt().asDiagonal();  // abc x r
    // kd[dd] = columns of K whose D index is dd (cd x c).
    std::vector<MatrixXcd> kd(static_cast<std::size_t>(d), MatrixXcd(c * d, c));
    for (Eigen::Index dd = 0; dd < d; ++dd)
        for (Eigen::Index c1 = 0; c1 < c; ++c1) kd[dd].col(c1) = k.col(c1 * d + dd);

    // Gram matrix F^dagger F, column (j, dd) at j * d + dd, from
    // R[c1][c2] = sum_ab h_(ab c1)^dagger h_(ab c2) and Q = K^dagger K.
    const MatrixXcd q = k.adjoint() * k;
    std::vector<MatrixXcd> hc(static_cast<std::size_t>(c), MatrixXcd(a * b, r));
    for (Eigen::Index c1 = 0; c1 < c; ++c1)
        for (Eigen::Index ab = 0; ab < a * b; ++ab) hc[c1].row(ab) = h.row(ab * c + c1);
    MatrixXcd gram = MatrixXcd::Zero(r * d, r * d);
    for (Eigen::Index c1 = 0; c1 < c; ++c1) {
        for (Eigen::Index c2 = 0; c2 < c; ++c2) {
            MatrixXcd rc = hc[c1].adjoint() * hc[c2];
            for (Eigen::Index d1 = 0; d1 < d; ++d1)
                for (Eigen::Index d2 = 0; d2 < d; ++d2) {
                    const cplx w = q(c1 * d + d1, c2 * d + d2);
                    if (w == cplx(0.0)) continue;
                    for (Eigen::Index j2 = 0; j2 < r; ++j2)
                        for (Eigen::Index j1 = 0; j1 < r; ++j1) gram(j1 * d + d1, j2 * d + d2) += w * rc(j1, j2);
                }
        }
    }
    const BlockEigen gs = block_eigen(gram, true);
    const double s_all = von_neumann(gs.values);
    std::vector<Eigen::Index> keep;
    const double gmax = gs.values.size() ? gs.values.maxCoeff() : 0.0;
    for (Eigen::Index i = gs.values.size() - 1; i >= 0; --i)
        if (gs.values[i] > kEigenClip * std::max(1.0, gmax)) keep.push_back(i);
    MatrixXcd u(r * d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) u.col(static_cast<Eigen::Index>(i)) = gs.vectors.col(keep[i]);

    // Compressed factor F u, assembled block by block: rows (ab, cd).
    res.tau_factor = MatrixXcd::Zero(a * b * c * d, u.cols());
    for (Eigen::Index dd = 0; dd < d; ++dd) {
        MatrixXcd ud(r, u.cols());
        for (Eigen::Index j = 0; j < r; ++j) ud.row(j) = u.row(j * d + dd);
        MatrixXcd hu = h * ud;  // abc x kept
        for (Eigen::Index ab = 0; ab < a * b; ++ab)
            res.tau_factor.middleRows(ab * c * d, c * d) += kd[dd] * hu.middleRows(ab * c, c);
    }

    // tau_ABC = (1_AB (x) E)(rho_ABC) with E(X) = Tr_D K (X (x) 1_D) K^dagger,
    // applied to every C block through its c^2 x c^2 matrix.
    MatrixXcd super = MatrixXcd::Zero(c * c, c * c);
    for (Eigen::Index dd = 0; dd < d; ++dd)
        for (Eigen::Index d1 = 0; d1 < d; ++d1) {
            MatrixXcd kk(c, c);  // <d1| K |dd> on C
            for (Eigen::Index i = 0; i < c; ++i)
                for (Eigen::Index j = 0; j < c; ++j) kk(i, j) = k(i * d + d1, j * d + dd);
            // vec(M X N^dagger) = (conj(N) (x) M) vec(X) in column-major vec.
            super += kron(kk.conjugate(), kk);
        }
    MatrixXcd tau_abc(a * b * c, a * b * c);
    for (Eigen::Index x = 0; x < a * b; ++x)
        for (Eigen::Index y = 0; y < a * b; ++y) {
            MatrixXcd blk = rho_abc.block(x * c, y * c, c, c);
            Eigen::Map<Eigen::VectorXcd> v(blk.data(), c * c);
            VectorXcd out = super * v;
            tau_abc.block(x * c, y * c, c, c) = Eigen::Map<MatrixXcd>(out.data(), c, c);
        }
    // tau_BCD = (1_B (x) K)(rho_BC (x) 1_D)(1_B (x) K)^dagger.
    MatrixXcd tau_bcd(b * c * d, b * c * d);
    for (Eigen::Index x = 0; x < b; ++x)
        for (Eigen::Index y = 0; y < b; ++y)
            tau_bcd.block(x * c * d, y * c * d, c * d, c * d) =
                k * kron(rho_bc.block(x * c, y * c, c, c), identity(d)) * k.adjoint();

    res.marginal_abc = trace_distance(tau_abc, rho_abc);
    res.marginal_bcd = trace_distance(tau_bcd, lambda_bcd);
    MatrixXcd tau_cd = partial_trace(tau_bcd, {dims[1], dims[2], dims[3]}, {1, 2});
    res.cmi_tau_a = dense_entropy(partial_trace(tau_abc, {dims[0], dims[1], dims[2]}, {0, 1})) +
                    dense_entropy(tau_bcd) -
                    dense_entropy(partial_trace(tau_bcd, {dims[1], dims[2], dims[3]}, {0})) - s_all;
    res.cmi_tau_d = dense_entropy(tau_abc) + dense_entropy(tau_cd) -
                    dense_entropy(partial_trace(tau_cd, {dims[2], dims[3]}, {0})) - s_all;
    return res;
}

// ---------------------------------------------------------------------------

namespace {

// Structure of a state on ABC whose C is decoupled from the purifying side
// X = A D of a purification: psi = J (Phi_{X L} (x) chi_{R' C}) with J an
// isometry from L (x) R' into B.
struct Factorized {
    VectorXd p, q;    // Schmidt weights of X|L and C|R', descending
    MatrixXcd j;      // b x (nL * r), column i * r + k
    MatrixXcd omega;  // state on A (x) L
    VectorXcd chi;    // on R' (x) C
    double gram_residual = 0.0;
    double reconstruction_residual = 0.0;
};

// Eigenpairs above the clip, largest first.
void top_eigen(const MatrixXcd& h, VectorXd& vals, MatrixXcd& vecs) {
    const BlockEigen es = block_eigen(h, true);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = es.values.size() - 1; i >= 0; --i)
        if (es.values[i] > kEigenClip) idx.push_back(i);
    vals.resize(static_cast<Eigen::Index>(idx.size()));
    vecs.resize(h.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t t = 0; t < idx.size(); ++t) {
        vals[static_cast<Eigen::Index>(t)] = es.values[idx[t]];
        vecs.col(static_cast<Eigen::Index>(t)) = es.vectors.col(idx[t]);
    }
}

Factorized factorize(const MatrixXcd& rho, int a, int b, int c) {
    VectorXd lam;
    MatrixXcd v;
    top_eigen(rho, lam, v);
    const auto nd = static_cast<int>(lam.size());
    // psi[a][b][c][d]
    auto at = [&](int ia, int ib, int ic, int id) -> cplx {
        return v((ia * b + ib) * c + ic, id) * std::sqrt(lam[id]);
    };
    MatrixXcd rx = MatrixXcd::Zero(a * nd, a * nd);
    MatrixXcd rc = MatrixXcd::Zero(c, c);
    for (int ia = 0; ia < a; ++ia)
        for (int id = 0; id < nd; ++id)
            for (int ja = 0; ja < a; ++ja)
                for (int jd = 0; jd < nd; ++jd) {
                    cplx s(0.0, 0.0);
                    for (int ib = 0; ib < b; ++ib)
                        for (int ic = 0; ic < c; ++ic) s += at(ia, ib, ic, id) * std::conj(at(ja, ib, ic, jd));
                    rx(ia * nd + id, ja * nd + jd) = s;
                }
    for (int ic = 0; ic < c; ++ic)
        for (int jc = 0; jc < c; ++jc) {
            cplx s(0.0, 0.0);
            for (int ia = 0; ia < a; ++ia)
                for (int ib = 0; ib < b; ++ib)
                    for (int id = 0; id < nd; ++id) s += at(ia, ib, ic, id) * std::conj(at(ia, ib, jc, id));
            rc(ic, jc) = s;
        }
    Factorized f;
    MatrixXcd x, ck;
    top_eigen(rx, f.p, x);
    top_eigen(rc, f.q, ck);
    const auto nl = static_cast<int>(f.p.size());
    const auto r = static_cast<int>(f.q.size());
    f.j = MatrixXcd::Zero(b, nl * r);
    for (int i = 0; i < nl; ++i)
        for (int k = 0; k < r; ++k) {
            double norm = std::sqrt(f.p[i] * f.q[k]);
            for (int ib = 0; ib < b; ++ib) {
                cplx s(0.0, 0.0);
                for (int ia = 0; ia < a; ++ia)
                    for (int id = 0; id < nd; ++id)
                        for (int ic = 0; ic < c; ++ic)
                            s += std::conj(x(ia * nd + id, i)) * std::conj(ck(ic, k)) * at(ia, ib, ic, id);
                f.j(ib, i * r + k) = s / norm;
            }
        }
    f.gram_residual = nl > 0 && r > 0 ? (f.j.adjoint() * f.j - identity(nl * r)).cwiseAbs().maxCoeff() : 0.0;
    double rec = 0.0;
    for (int ia = 0; ia < a; ++ia)
        for (int ib = 0; ib < b; ++ib)
            for (int ic = 0; ic < c; ++ic)
                for (int id = 0; id < nd; ++id) {
                    cplx s(0.0, 0.0);
                    for (int i = 0; i < nl; ++i)
                        for (int k = 0; k < r; ++k)
                            s += std::sqrt(f.p[i] * f.q[k]) * x(ia * nd + id, i) * ck(ic, k) * f.j(ib, i * r + k);
                    rec = std::max(rec, std::abs(s - at(ia, ib, ic, id)));
                }
    f.reconstruction_residual = rec;

    f.omega = MatrixXcd::Zero(a * nl, a * nl);
    for (int ia = 0; ia < a; ++ia)
        for (int i = 0; i < nl; ++i)
            for (int ja = 0; ja < a; ++ja)
                for (int j = 0; j < nl; ++j) {
                    cplx s(0.0, 0.0);
                    for (int id = 0; id < nd; ++id) s += x(ia * nd + id, i) * std::conj(x(ja * nd + id, j));
                    f.omega(ia * nl + i, ja * nl + j) = std::sqrt(f.p[i] * f.p[j]) * s;
                }
    f.chi = VectorXcd::Zero(r * c);
    for (int k = 0; k < r; ++k)
        for (int ic = 0; ic < c; ++ic) f.chi[k * c + ic] = std::sqrt(f.q[k]) * ck(ic, k);
    return f;
}

double apply_w_residual(const MatrixXcd& w, const MatrixXcd& from, const MatrixXcd& to, int a) {
    MatrixXcd big = kron(identity(a), w);
    return (big * from * big.adjoint() - to).cwiseAbs().maxCoeff();
}

// Unitary W on L, block diagonal over groups of equal Schmidt weight, with
// (1_A (x) W) from (1_A (x) W)^dagger = to.
MatrixXcd align_left(const MatrixXcd& from, const MatrixXcd& to, const VectorXd& p, int a) {
    const auto nl = static_cast<int>(p.size());
    std::vector<int> group(nl, 0);
    for (int i = 1; i < nl; ++i) group[i] = group[i - 1] + (std::abs(p[i] - p[i - 1]) > kDegeneracyTol ? 1 : 0);
    auto block = [&](const MatrixXcd& m, int i, int j) { return MatrixXcd(m(Eigen::seqN(i, a, nl), Eigen::seqN(j, a, nl))); };

    // Relative phases between nondegenerate indices, spread along a BFS tree
    // of the pairs whose A-blocks do not vanish.
    double scale = std::max(from.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<cplx> phase(nl, cplx(1.0, 0.0));
    std::vector<bool> seen(nl, false);
    for (int root = 0; root < nl; ++root) {
        if (seen[root]) continue;
        seen[root] = true;
        std::vector<int> queue{root};
        for (std::size_t h = 0; h < queue.size(); ++h) {
            int i = queue[h];
            bool single_i = (i == 0 || group[i] != group[i - 1]) && (i + 1 == nl || group[i + 1] != group[i]);
            if (!single_i) continue;
            for (int j = 0; j < nl; ++j) {
                if (seen[j]) continue;
                bool single_j = (j == 0 || group[j] != group[j - 1]) && (j + 1 == nl || group[j + 1] != group[j]);
                if (!single_j) continue;
                cplx ov = (block(from, i, j).adjoint() * block(to, i, j)).trace();
                if (std::abs(ov) < 1e-9 * scale * scale) continue;
                // to_ij = phase_i conj(phase_j) from_ij
                phase[j] = phase[i] * std::conj(ov / std::abs(ov));
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    MatrixXcd w = MatrixXcd::Zero(nl, nl);
    for (int i = 0; i < nl; ++i) w(i, i) = phase[i];
    if (apply_w_residual(w, from, to, a) < 1e-12) return w;

    // Degenerate weights leave a block unitary; refine by repeated polar
    // steps on Re Tr(to W from W^dagger).
    for (int it = 0; it < 2000; ++it) {
        MatrixXcd big = kron(identity(a), w);
        MatrixXcd g = partial_trace(to * big * from, {a, nl}, {1});
        MatrixXcd next = MatrixXcd::Zero(nl, nl);
        for (int s = 0; s < nl;) {
            int e = s;
            while (e < nl && group[e] == group[s]) ++e;
            next.block(s, s, e - s, e - s) = polar_unitary(g.block(s, s, e - s, e - s));
            s = e;
        }
        w = next;
        if (apply_w_residual(w, from, to, a) < 1e-12) break;
    }
    return w;
}

// Unitary with u -> v up to a global phase of v.
MatrixXcd householder_map(const VectorXcd& u, const VectorXcd& v) {
    const Eigen::Index n = u.size();
    cplx ov = v.dot(u);  // <v|u>
    VectorXcd vp = v;
    if (std::abs(ov) > 0) vp *= ov / std::abs(ov);
    VectorXcd w = u - vp;
    double nw = w.squaredNorm();
    if (nw < 1e-30) return identity(n);
    return identity(n) - 2.0 * w * w.adjoint() / nw;
}

} // namespace

UhlmannResult uhlmann_disentangler(const MatrixXcd& rho, const MatrixXcd& sigma, const std::vector<int>& dims,
                                   double tol) {
    if (dims.size() != 3) throw ValidationError("uhlmann_disentangler: dims must be {a, b, c}");
    const int a = dims[0], b = dims[1], c = dims[2];
    if (rho.rows() != a * b * c || sigma.rows() != a * b * c)
        throw ValidationError("uhlmann_disentangler: state dimensions do not match dims");

    double ab_gap = trace_distance(partial_trace(rho, dims, {0, 1}), partial_trace(sigma, dims, {0, 1}));
    auto decoupling = [&](const MatrixXcd& s) {
        return dense_entropy(partial_trace(s, dims, {1, 2})) + dense_entropy(partial_trace(s, dims, {2})) -
               dense_entropy(partial_trace(s, dims, {1}));
    };
    double dr = decoupling(rho), ds = decoupling(sigma);
    if (ab_gap > tol || std::abs(dr) > tol || std::abs(ds) > tol) {
        std::ostringstream os;
        os << "uhlmann_disentangler hypotheses fail: |rho_AB - sigma_AB| = " << ab_gap
           << ", (S(BC)+S(C)-S(B))_rho = " << dr << ", (S(BC)+S(C)-S(B))_sigma = " << ds;
        throw PreconditionError(os.str());
    }

    Factorized fr = factorize(rho, a, b, c);
    Factorized fs = factorize(sigma, a, b, c);
    const double structural = 1e-6;
    if (fr.gram_residual > structural || fs.gram_residual > structural || fr.reconstruction_residual > structural ||
        fs.reconstruction_residual > structural) {
        std::ostringstream os;
        os << "uhlmann_disentangler: B does not split as B_L B_R (isometry residuals " << fr.gram_residual << ", "
           << fs.gram_residual << "; reconstruction " << fr.reconstruction_residual << ", "
           << fs.reconstruction_residual << ")";
        throw PreconditionError(os.str());
    }
    if (fr.p.size() != fs.p.size() || fr.q.size() != fs.q.size() ||
        (fr.p - fs.p).cwiseAbs().maxCoeff() > std::sqrt(tol)) {
        throw PreconditionError(
            "uhlmann_disentangler: B_L spectra differ between rho and sigma, so no unitary on BC relates them");
    }
    const auto nl = static_cast<int>(fr.p.size());
    const auto r = static_cast<int>(fr.q.size());

    MatrixXcd w = align_left(fs.omega, fr.omega, fr.p, a);
    MatrixXcd u = householder_map(fs.chi, fr.chi);
    MatrixXcd jr = kron(fr.j, identity(c));
    MatrixXcd js = kron(fs.j, identity(c));
    MatrixXcd v = jr * kron(w, u) * js.adjoint();
    MatrixXcd outside = identity(b) - fr.j * fr.j.adjoint();
    v += kron(outside, identity(c));
    v = polar_unitary(v);

    UhlmannResult res;
    res.U = v;
    res.left_dim = nl;
    res.right_dim = r;
    MatrixXcd full = kron(identity(a), v);
    res.residual = trace_distance(full * sigma * full.adjoint(), rho);
    if (res.residual > 10.0 * tol) {
        std::ostringstream os;
        os << "uhlmann_disentangler: constructed unitary misses by trace distance " << res.residual;
        throw PreconditionError(os.str());
    }
    return res;
}

MatrixXcd random_unitary(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_unitary(n, rng);
}

UhlmannInstance random_uhlmann_instance(std::uint64_t seed, int max_dim) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dd(1, max_dim);
    const int a = dd(rng), bl = dd(rng), br = dd(rng), c = dd(rng);
    std::uniform_int_distribution<int> rk(1, a * bl);
    MatrixXcd omega = random_state(a * bl, rk(rng), rng);
    VectorXcd phi = gaussian(br * c, 1, rng).col(0);
    phi.normalize();
    MatrixXcd vc = random_unitary(c, rng);
    VectorXcd phi2 = kron(identity(br), vc) * phi;
    MatrixXcd hidden = random_unitary(bl * br, rng);

    // omega_{A B_L} (x) phi_{B_R C} is already in A B_L B_R C order.
    MatrixXcd mix = kron(kron(identity(a), hidden), identity(c));
    UhlmannInstance inst;
    inst.rho = mix * kron(omega, phi * phi.adjoint()) * mix.adjoint();
    inst.sigma = mix * kron(omega, phi2 * phi2.adjoint()) * mix.adjoint();
    inst.dims = {a, bl * br, c};
    inst.bl = bl;
    inst.br = br;
    return inst;
}

} // namespace snlab
