#include "snlab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "snlab/quantum_info.hpp"

namespace snlab {

double max_abs(const SparseMatrix& a) {
    double mx = 0.0;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
    return mx;
}

double SparseOperator::check_hermitian(double tol) {
    SparseMatrix adj = m.adjoint();
    double r = max_abs(m - adj);
    hermitian = r <= tol;
    return r;
}

StringNetModel::StringNetModel(const FusionCategory& c, const HoneycombLattice& l, double cap)
    : cat(&c), lat(&l), basis(enumerate_basis(c, l, cap)) {}

namespace {

SparseMatrix identity(Eigen::Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

} // namespace

SparseOperator vertex_projector(const StringNetModel& model, int vertex) {
    if (vertex < 0 || vertex >= model.lat->num_vertices()) throw StructuralError("vertex id out of range");
    return {identity(static_cast<Eigen::Index>(model.dim())), true};
}

int vertex_projector_value(const FusionCategory& cat, const HoneycombLattice& lat, int vertex,
                           const std::vector<int>& labels) {
    return vertex_satisfied(cat, lat, vertex, labels) ? 1 : 0;
}

SparseOperator plaquette_operator(const StringNetModel& model, int plaquette, Label s) {
    const FusionCategory& cat = *model.cat;
    const HoneycombLattice& lat = *model.lat;
    const StringNetBasis& basis = model.basis;
    if (plaquette < 0 || plaquette >= lat.num_plaquettes()) throw StructuralError("plaquette id out of range");
    if (s < 0 || s >= cat.rank()) throw StructuralError("label out of range: " + std::to_string(s));
    const LatticePlaquette& p = lat.plaquettes[plaquette];
    if (p.degenerate) throw StructuralError("plaquette operator undefined on a degenerate (self-wrapping) plaquette");
    if (!cat.multiplicity_free()) throw PreconditionError("plaquette operators require a multiplicity-free category");

    const int r = cat.rank();
    const auto& d = cat.qdim;
    const Label sb = cat.dual[s];
    std::vector<std::vector<Label>> cand(r);
    for (int i = 0; i < r; ++i)
        for (int c = 0; c < r; ++c)
            if (cat.N(i, s, c) || cat.N(s, i, c) || cat.N(i, sb, c) || cat.N(sb, i, c)) cand[i].push_back(c);

    PlaquetteCoeffCache cache(cat);
    std::vector<Eigen::Triplet<cplx>> trip;
    std::array<Label, 6> in{}, leg{}, out{};

    // b_k for ring vertex k0 (0-based), using ring edges k0-1 and k0.
    auto b = [&](int k0) -> cplx {
        const int prev = (k0 + 5) % 6;
        HexVertexLabels lab{leg[k0], in[prev], in[k0], out[prev], out[k0]};
        cplx c = cache.get(s, k0 + 1, lab);
        if (c == 0.0) return 0.0;
        return c * std::sqrt(d[out[prev]] / d[in[prev]]) * std::sqrt(d[out[k0]] / d[in[k0]]);
    };

    for (std::size_t j = 0; j < basis.size(); ++j) {
        const ConfigKey key = basis.key(j);
        for (int k = 0; k < 6; ++k) {
            in[k] = basis.label(key, p.ring[k]);
            leg[k] = basis.label(key, p.legs[k]);
        }
        std::function<void(int, cplx)> rec = [&](int k0, cplx amp) {
            if (k0 == 6) {
                amp *= b(0);
                if (amp == 0.0) return;
                ConfigKey nk = key;
                for (int k = 0; k < 6; ++k) nk = basis.with_label(nk, p.ring[k], out[k]);
                std::int64_t row = basis.index_of(nk);
                if (row < 0) throw StructuralError("plaquette move left the stable-labeling space");
                trip.emplace_back(static_cast<int>(row), static_cast<int>(j), amp);
                return;
            }
            for (Label c : cand[in[k0]]) {
                out[k0] = c;
                cplx a = amp * std::sqrt(d[in[k0]] / (d[s] * d[c]));
                if (k0 > 0) a *= b(k0);
                if (a != 0.0) rec(k0 + 1, a);
            }
        };
        rec(0, 1.0);
    }
    const auto n = static_cast<Eigen::Index>(basis.size());
    SparseOperator op;
    op.m.resize(n, n);
    op.m.setFromTriplets(trip.begin(), trip.end());
    op.m.prune(cplx(0.0), 1e-14);
    return op;
}

SparseOperator plaquette_projector(const StringNetModel& model, int plaquette) {
    const FusionCategory& cat = *model.cat;
    const auto n = static_cast<Eigen::Index>(model.dim());
    SparseMatrix sum(n, n);
    for (Label s = 0; s < cat.rank(); ++s)
        sum += plaquette_operator(model, plaquette, s).m * cplx(cat.qdim[s] / (cat.total_dim * cat.total_dim));
    sum.prune(cplx(0.0), 1e-14);
    SparseOperator op{sum, false};
    op.check_hermitian(1e-10);
    return op;
}

SparseOperator build_hamiltonian(const StringNetModel& model) {
    const auto n = static_cast<Eigen::Index>(model.dim());
    SparseMatrix h = identity(n) * cplx(-static_cast<double>(model.lat->num_vertices()));
    for (int p = 0; p < model.lat->num_plaquettes(); ++p) h -= plaquette_projector(model, p).m;
    SparseOperator op{h, false};
    op.check_hermitian(1e-10);
    return op;
}

namespace {

Eigen::MatrixXcd random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd x(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
            double re = g(rng);
            double im = g(rng);
            x(r, c) = cplx(re, im);
        }
    return x;
}

// Orthonormal basis of the column span, dropping Gram eigenvalues below
// tol * largest.
Eigen::MatrixXcd orthonormal_span(const Eigen::MatrixXcd& x, double tol) {
    if (x.cols() == 0) return x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x.adjoint() * x);
    const auto& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    if (top <= 1e-300) return Eigen::MatrixXcd(x.rows(), 0);
    std::vector<int> keep;
    for (int i = static_cast<int>(ev.size()) - 1; i >= 0; --i)
        if (ev(i) > tol * top) keep.push_back(i);
    Eigen::MatrixXcd q(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        q.col(static_cast<Eigen::Index>(c)) = x * es.eigenvectors().col(keep[c]) / std::sqrt(ev(keep[c]));
    return q;
}

// Orthonormalizes an almost orthonormal set, keeping its column phases.
Eigen::MatrixXcd reorthonormalize(const Eigen::MatrixXcd& q) {
    if (q.cols() == 0) return q;
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(q);
    Eigen::MatrixXcd thin = qr.householderQ() * Eigen::MatrixXcd::Identity(q.rows(), q.cols());
    // Fix the phase so that thin spans q with a positive-diagonal R.
    Eigen::MatrixXcd rdiag = thin.adjoint() * q;
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
        cplx ph = rdiag(c, c);
        if (std::abs(ph) > 0) thin.col(c) *= ph / std::abs(ph);
    }
    return thin;
}

} // namespace

GroundSpace ground_space(const StringNetModel& model, const GroundSpaceOptions& opt) {
    const HoneycombLattice& lat = *model.lat;
    std::vector<int> plist = opt.plaquettes;
    if (plist.empty())
        for (int p = 0; p < lat.num_plaquettes(); ++p) plist.push_back(p);
    std::vector<SparseMatrix> proj;
    for (int p : plist) proj.push_back(plaquette_projector(model, p).m);
    const auto n = static_cast<Eigen::Index>(model.dim());
    std::mt19937_64 rng(opt.seed);

    auto apply_all = [&](Eigen::MatrixXcd x) {
        for (const auto& bp : proj) x = bp * x;
        return x;
    };

    Eigen::MatrixXcd q;
    if (opt.method == GroundSpaceMethod::ProjectorProduct) {
        Eigen::Index k = std::min<Eigen::Index>(8, n);
        while (true) {
            Eigen::MatrixXcd x = apply_all(random_block(n, k, rng));
            q = orthonormal_span(x, opt.rank_tol);
            if (q.cols() < k || k == n) break;
            k = std::min<Eigen::Index>(2 * k, n);
        }
        // One more application cleans the leakage left by rounding.
        q = reorthonormalize(apply_all(q));
    } else {
        SparseMatrix sum(n, n);
        for (const auto& bp : proj) sum += bp;
        const double target = static_cast<double>(proj.size());
        Eigen::Index k = std::min<Eigen::Index>(8, n);
        while (true) {
            Eigen::MatrixXcd x = reorthonormalize(random_block(n, k, rng));
            double resid = 1.0;
            int it = 0;
            Eigen::MatrixXcd ritz;
            Eigen::VectorXd vals;
            for (; it < opt.max_iterations; ++it) {
                x = reorthonormalize((sum * x) / target);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x.adjoint() * (sum * x));
                vals = es.eigenvalues();
                ritz = x * es.eigenvectors();
                resid = 0.0;
                for (Eigen::Index c = 0; c < k; ++c)
                    if (vals(c) > target - 0.5)
                        resid = std::max(resid, (sum * ritz.col(c) - vals(c) * ritz.col(c)).norm());
                if (it > 2 && resid < opt.residual_tol * 1e-2) break;
            }
            if (it == opt.max_iterations)
                throw ConvergenceError("subspace iteration did not converge; residual " + std::to_string(resid));
            std::vector<Eigen::Index> keep;
            for (Eigen::Index c = k - 1; c >= 0; --c)
                if (std::abs(vals(c) - target) < 1e-6) keep.push_back(c);
            if (static_cast<Eigen::Index>(keep.size()) < k || k == n) {
                q.resize(n, static_cast<Eigen::Index>(keep.size()));
                for (std::size_t c = 0; c < keep.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = ritz.col(keep[c]);
                q = reorthonormalize(q);
                break;
            }
            k = std::min<Eigen::Index>(2 * k, n);
        }
    }

    GroundSpace gs;
    gs.vectors = q;
    SparseMatrix h = build_hamiltonian(model).m;
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
        double r = 0.0;
        for (const auto& bp : proj) r = std::max(r, (bp * q.col(c) - q.col(c)).norm());
        if (r > opt.residual_tol)
            throw ConvergenceError("ground vector " + std::to_string(c) + " has residual " + std::to_string(r));
        gs.residuals.push_back(r);
        gs.energies.push_back(q.col(c).dot(h * q.col(c)).real());
    }
    return gs;
}

nlohmann::json AlgebraReport::to_json() const {
    return {{"product_residual", product_residual},
            {"adjoint_residual", adjoint_residual},
            {"projector_residual", projector_residual},
            {"hermitian_residual", hermitian_residual}};
}

AlgebraReport verify_plaquette_algebra(const StringNetModel& model, int plaquette) {
    const FusionCategory& cat = *model.cat;
    const int r = cat.rank();
    std::vector<SparseMatrix> B;
    for (Label s = 0; s < r; ++s) B.push_back(plaquette_operator(model, plaquette, s).m);
    AlgebraReport rep;
    for (Label s = 0; s < r; ++s) {
        SparseMatrix adj = B[s].adjoint();
        rep.adjoint_residual = std::max(rep.adjoint_residual, max_abs(adj - B[cat.dual[s]]));
        for (Label t = 0; t < r; ++t) {
            SparseMatrix lhs = B[s] * B[t];
            for (Label u = 0; u < r; ++u)
                if (cat.N(s, t, u)) lhs -= B[u] * cplx(cat.N(s, t, u));
            rep.product_residual = std::max(rep.product_residual, max_abs(lhs));
        }
    }
    SparseOperator bp = plaquette_projector(model, plaquette);
    rep.hermitian_residual = bp.check_hermitian();
    SparseMatrix sq = bp.m * bp.m;
    rep.projector_residual = max_abs(sq - bp.m);
    return rep;
}

double max_commutator(const StringNetModel& model) {
    std::vector<SparseMatrix> bp;
    for (int p = 0; p < model.lat->num_plaquettes(); ++p) bp.push_back(plaquette_projector(model, p).m);
    double mx = 0.0;
    for (std::size_t p = 0; p < bp.size(); ++p)
        for (std::size_t q = p + 1; q < bp.size(); ++q) {
            SparseMatrix a = bp[p] * bp[q];
            SparseMatrix b = bp[q] * bp[p];
            mx = std::max(mx, max_abs(a - b));
        }
    return mx;
}

std::vector<int> thicken(const HoneycombLattice& lat, const std::vector<int>& vertices, int layers) {
    std::set<int> cur(vertices.begin(), vertices.end());
    for (int l = 0; l < layers; ++l) {
        std::set<int> next = cur;
        for (int v : cur)
            for (int p : lat.plaquettes_of_vertex(v))
                next.insert(lat.plaquettes[p].vertices.begin(), lat.plaquettes[p].vertices.end());
        cur = next;
    }
    return {cur.begin(), cur.end()};
}

std::vector<int> plaquettes_inside(const HoneycombLattice& lat, const std::vector<int>& vertices) {
    std::set<int> vs(vertices.begin(), vertices.end());
    std::vector<int> out;
    for (int p = 0; p < lat.num_plaquettes(); ++p) {
        bool in = true;
        for (int v : lat.plaquettes[p].vertices) in &= vs.count(v) > 0;
        if (in) out.push_back(p);
    }
    return out;
}

nlohmann::json LtqoReport::to_json() const {
    return {{"ell", ell},
            {"samples", samples},
            {"projector_rank", projector_rank},
            {"local_dimension", local_dimension},
            {"plaquettes", plaquettes},
            {"covers_lattice", covers_lattice},
            {"residuals", residuals},
            {"c", c},
            {"max_residual", max_residual}};
}

LtqoReport check_ltqo(const StringNetModel& model, const Region& region, int ell, int samples, std::uint64_t seed) {
    const HoneycombLattice& lat = *model.lat;
    if (ell < 0) throw StructuralError("ell must be non-negative");
    LtqoReport rep;
    rep.ell = ell;
    rep.samples = samples;
    std::vector<int> big = thicken(lat, region.vertices, ell);
    rep.plaquettes = plaquettes_inside(lat, big);
    rep.covers_lattice = static_cast<int>(rep.plaquettes.size()) == lat.num_plaquettes();

    Eigen::MatrixXcd g;
    if (rep.plaquettes.empty()) {
        g = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(model.dim()), static_cast<Eigen::Index>(model.dim()));
    } else {
        GroundSpaceOptions opt;
        opt.plaquettes = rep.plaquettes;
        opt.seed = seed;
        g = ground_space(model, opt).vectors;
    }
    rep.projector_rank = static_cast<int>(g.cols());

    FactorMap fm(model, region);
    rep.local_dimension = static_cast<int>(fm.region_dim());
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int t = 0; t < samples; ++t) {
        Eigen::MatrixXcd z = random_block(rep.local_dimension, rep.local_dimension, rng);
        Eigen::MatrixXcd o = (z + z.adjoint()) / 2.0;
        auto [c, res] = ltqo_residual(fm, g, o);
        rep.c.push_back(c);
        rep.residuals.push_back(res);
        rep.max_residual = std::max(rep.max_residual, res);
    }
    return rep;
}

std::vector<std::int64_t> translation_permutation(const StringNetModel& model, int dm, int dn) {
    const HoneycombLattice& lat = *model.lat;
    if (lat.topology != Topology::Torus) throw StructuralError("translations are defined on the torus only");
    const StringNetBasis& basis = model.basis;
    std::vector<int> emap(lat.num_edges()), vmap(lat.num_vertices());
    for (int e = 0; e < lat.num_edges(); ++e)
        emap[e] = lat.edge_at(lat.edges[e].kind, lat.edges[e].m + dm, lat.edges[e].n + dn);
    for (int v = 0; v < lat.num_vertices(); ++v)
        vmap[v] = lat.vertex_at(lat.vertices[v].kind, lat.vertices[v].m + dm, lat.vertices[v].n + dn);
    std::vector<std::int64_t> perm(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        ConfigKey k = basis.key(i), nk = 0;
        for (int e = 0; e < lat.num_edges(); ++e) nk = basis.with_label(nk, emap[e], basis.label(k, e));
        for (int v = 0; v < lat.num_vertices(); ++v) nk = basis.with_mult(nk, vmap[v], basis.mult(k, v));
        perm[i] = basis.index_of(nk);
        if (perm[i] < 0) throw StructuralError("translation left the basis");
    }
    return perm;
}

namespace {

constexpr char kStateMagic[8] = {'S', 'N', 'L', 'A', 'B', 'S', 'V', '1'};

void put_u64(std::ostream& os, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated state file");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t x;
    std::memcpy(&x, &v, 8);
    put_u64(os, x);
}

double get_f64(std::istream& is) {
    std::uint64_t x = get_u64(is);
    double v;
    std::memcpy(&v, &x, 8);
    return v;
}

} // namespace

void write_state(std::ostream& os, const StringNetBasis& basis, const StateVector& psi) {
    if (static_cast<std::size_t>(psi.size()) != basis.size()) throw StructuralError("state dimension mismatch");
    os.write(kStateMagic, 8);
    put_u64(os, basis.hash());
    put_u64(os, basis.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        put_f64(os, psi(i).real());
        put_f64(os, psi(i).imag());
    }
    if (!os) throw IoError("failed to write state");
}

StateVector read_state(std::istream& is, const StringNetBasis& basis) {
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kStateMagic, 8) != 0) throw IoError("not a state file");
    if (get_u64(is) != basis.hash()) throw IoError("state file belongs to a different basis");
    std::uint64_t n = get_u64(is);
    if (n != basis.size()) throw IoError("state file dimension mismatch");
    StateVector psi(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
        double re = get_f64(is);
        double im = get_f64(is);
        psi(static_cast<Eigen::Index>(i)) = cplx(re, im);
    }
    return psi;
}

void write_state_file(const std::string& path, const StringNetBasis& basis, const StateVector& psi) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_state(os, basis, psi);
}

StateVector read_state_file(const std::string& path, const StringNetBasis& basis) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return read_state(is, basis);
}

nlohmann::json state_to_json(const StringNetModel& model, const StateVector& psi, double eps) {
    nlohmann::json amps = nlohmann::json::array();
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        if (std::abs(psi(i)) <= eps) continue;
        amps.push_back({{"index", i},
                        {"labels", model.basis.labels(static_cast<std::size_t>(i))},
                        {"re", psi(i).real()},
                        {"im", psi(i).imag()}});
    }
    return {{"dimension", psi.size()}, {"basis_hash", model.basis.hash()}, {"amplitudes", amps}};
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
    os << std::setprecision(17);
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            os << it.row() << ',' << it.col() << ',' << it.value().real() << ',' << it.value().imag() << '\n';
}

SparseMatrix read_triplets(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    std::vector<Eigen::Triplet<cplx>> trip;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        long long r, c;
        double re, im;
        if (!(ls >> r >> c >> re >> im)) throw IoError("malformed triplet line: " + line);
        if (r < 0 || c < 0 || r >= rows || c >= cols) throw IoError("triplet index out of range: " + line);
        trip.emplace_back(static_cast<int>(r), static_cast<int>(c), cplx(re, im));
    }
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

} // namespace snlab
