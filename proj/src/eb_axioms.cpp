#include "snlab/eb_axioms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace snlab {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// Entropies of one pure state, memoized by vertex set.
class EntropyCache {
public:
    EntropyCache(const StringNetModel& model, const StateVector& psi) : model_(model), psi_(psi) {}

    double operator()(const Region& r) {
        if (r.empty()) return 0.0;
        auto it = cache_.find(r.vertices);
        if (it != cache_.end()) return it->second;
        double s = region_entropy(model_, psi_, r);
        cache_.emplace(r.vertices, s);
        return s;
    }

private:
    const StringNetModel& model_;
    const StateVector& psi_;
    std::map<std::vector<int>, double> cache_;
};

double axiom_value(EntropyCache& s, const StringNetModel& model, const Partition& part) {
    const HoneycombLattice& lat = *model.lat;
    Region bc = region_union(lat, part.B, part.C);
    switch (part.kind) {
    case AxiomKind::A0Bulk:
    case AxiomKind::A0Boundary:
        return s(bc) + s(part.C) - s(part.B);
    case AxiomKind::A1Bulk:
    case AxiomKind::A1Boundary:
        return s(bc) + s(region_union(lat, part.C, part.D)) - s(part.B) - s(part.D);
    }
    return 0.0;
}

bool has_pinned_leg(const HoneycombLattice& lat, int v) {
    for (int e : lat.vertices[v].edges)
        if (lat.edges[e].status == EdgeStatus::Pinned) return true;
    return false;
}

// Ordered vertices of the path behind disk_path.
std::vector<int> find_path(const HoneycombLattice& lat, int anchor, int size) {
    if (anchor < 0 || anchor >= lat.num_vertices())
        throw StructuralError("anchor " + std::to_string(anchor) + " is not a lattice vertex");
    if (size < 1) throw ValidationError("disk size must be positive");
    std::vector<int> path{anchor};
    if (has_pinned_leg(lat, anchor)) throw StructuralError("anchor " + std::to_string(anchor) + " has a pinned leg");
    std::function<bool()> grow = [&]() {
        if (static_cast<int>(path.size()) == size)
            return boundary_size(lat, make_region(lat, path)) == size + 2;
        std::vector<int> nb = lat.neighbors(path.back());
        std::sort(nb.begin(), nb.end());
        for (int v : nb) {
            if (std::find(path.begin(), path.end(), v) != path.end() || has_pinned_leg(lat, v)) continue;
            path.push_back(v);
            if (grow()) return true;
            path.pop_back();
        }
        return false;
    };
    if (!grow())
        throw StructuralError("no disk path of " + std::to_string(size) + " vertices at anchor " +
                              std::to_string(anchor));
    return path;
}

VectorXcd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double re = g(rng);
        double im = g(rng);
        v[i] = cplx(re, im);
    }
    return v;
}

// psi psi^dagger reduced to the region, as a sparse matrix.
SparseMatrix reduce_sparse(const FactorMap& fm, const StateVector& psi) {
    SparseMatrix m = fm.reshape(psi);
    return SparseMatrix(m * SparseMatrix(m.adjoint()));
}

// Region configurations grouped by the labels of the edges the complement
// also holds. Reduced states never couple two groups.
struct CutGroups {
    std::vector<std::vector<int>> members;  // region indices per group
    std::vector<int> group_of, local_of;

    CutGroups(const HoneycombLattice& lat, const FactorMap& fm, const Region& region) {
        const std::set<int> inside(region.vertices.begin(), region.vertices.end());
        std::vector<std::size_t> cut;
        const auto& edges = fm.region_edges();
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const LatticeEdge& e = lat.edges[static_cast<std::size_t>(edges[i])];
            for (int v : {e.lower, e.upper})
                if (v >= 0 && !inside.count(v)) {
                    cut.push_back(i);
                    break;
                }
        }
        const auto configs = fm.region_configs();
        std::map<std::vector<int>, int> index;
        group_of.resize(configs.size());
        local_of.resize(configs.size());
        for (std::size_t r = 0; r < configs.size(); ++r) {
            std::vector<int> key;
            for (std::size_t i : cut) key.push_back(configs[r][i]);
            auto [it, fresh] = index.emplace(key, static_cast<int>(members.size()));
            if (fresh) members.emplace_back();
            group_of[r] = it->second;
            local_of[r] = static_cast<int>(members[static_cast<std::size_t>(it->second)].size());
            members[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(r));
        }
    }

    std::vector<MatrixXcd> split(const SparseMatrix& rho) const {
        std::vector<MatrixXcd> out;
        for (const auto& m : members) {
            const auto d = static_cast<Eigen::Index>(m.size());
            out.push_back(MatrixXcd::Zero(d, d));
        }
        for (Eigen::Index c = 0; c < rho.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(rho, c); it; ++it) {
                const auto r = static_cast<std::size_t>(it.row()), cc = static_cast<std::size_t>(it.col());
                if (group_of[r] != group_of[cc]) continue;  // structurally zero
                out[static_cast<std::size_t>(group_of[r])](local_of[r], local_of[cc]) = it.value();
            }
        return out;
    }
};

// One cut group in the eigenbasis w of the ratio rho2 / rho1 on the support
// of rho1: lw = w^dagger Lambda w, m3 and m0 the ratios of the third sample
// and of the reference.
struct GroupFrame {
    VectorXd lam;
    MatrixXcd k, w, lw, m3, m0;
    VectorXd mu;
};

SectorDecomposition decompose(const StringNetModel& model, const Region& region, const SectorOptions& opt,
                              int thickening) {
    const HoneycombLattice& lat = *model.lat;
    if (region.empty()) throw ValidationError("information convex set of an empty region");
    if (thickening < 0) throw ValidationError("thickening must be non-negative");
    std::vector<int> plus = thicken(lat, region.vertices, thickening);
    std::vector<int> inside = plaquettes_inside(lat, plus);
    std::set<int> holes(opt.holes.begin(), opt.holes.end());
    SectorDecomposition out;
    out.thickening = thickening;
    for (int p : inside)
        if (!holes.count(p)) out.plaquettes.push_back(p);

    std::vector<SparseMatrix> terms, all_terms;
    for (int p : inside) {
        all_terms.push_back(plaquette_projector(model, p).m);
        if (!holes.count(p)) terms.push_back(all_terms.back());
    }
    const auto n = static_cast<Eigen::Index>(model.dim());
    FactorMap fm(model, region);
    const CutGroups groups(lat, fm, region);
    out.region_dim = static_cast<int>(fm.region_dim());
    std::mt19937_64 rng(opt.seed);
    const int samples = std::max(opt.samples, 1);
    auto sample = [&]() {
        SparseMatrix rho(out.region_dim, out.region_dim);
        for (int k = 0; k < samples; ++k) {
            VectorXcd x = random_vector(n, rng);
            for (const auto& bp : terms) x = bp * x;
            const double nrm = x.norm();
            if (nrm < 1e-12) throw StructuralError("the thickened Hamiltonian has no zero-energy state");
            rho += reduce_sparse(fm, x / nrm) / static_cast<double>(samples);
        }
        return groups.split(rho);
    };
    const std::vector<MatrixXcd> rho1 = sample(), rho2 = sample(), rho3 = sample();

    // Reference: the vacuum labeling projected by every plaquette inside,
    // holes included.
    VectorXcd ref = VectorXcd::Zero(n);
    ref[0] = 1.0;
    for (const auto& bp : all_terms) ref = bp * ref;
    const std::vector<MatrixXcd> rho0 = groups.split(reduce_sparse(fm, ref / ref.norm()));

    const std::size_t ng = groups.members.size();
    std::vector<Eigen::SelfAdjointEigenSolver<MatrixXcd>> eig1(ng);
    double top = 0.0;
    for (std::size_t g = 0; g < ng; ++g) {
        eig1[g].compute((rho1[g] + rho1[g].adjoint()) / 2.0);
        if (eig1[g].eigenvalues().size()) top = std::max(top, eig1[g].eigenvalues().maxCoeff());
    }

    // Eigenvalues of every group's ratio, labeled (group, column).
    std::vector<GroupFrame> frames(ng);
    std::vector<std::tuple<double, std::size_t, Eigen::Index>> spectrum;
    for (std::size_t g = 0; g < ng; ++g) {
        GroupFrame& f = frames[g];
        const VectorXd& ev = eig1[g].eigenvalues();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
            if (ev[i] > opt.support_tol * top && ev[i] > kEigenClip) keep.push_back(i);
        if (keep.empty()) continue;
        const auto s = static_cast<Eigen::Index>(keep.size());
        f.lam.resize(s);
        f.k.resize(ev.size(), s);
        for (Eigen::Index j = 0; j < s; ++j) {
            f.lam[j] = ev[keep[static_cast<std::size_t>(j)]];
            f.k.col(j) = eig1[g].eigenvectors().col(keep[static_cast<std::size_t>(j)]);
        }
        const VectorXd inv_sqrt = f.lam.cwiseSqrt().cwiseInverse();
        auto ratio = [&](const MatrixXcd& rho) {
            MatrixXcd m = inv_sqrt.asDiagonal() * (f.k.adjoint() * rho * f.k) * inv_sqrt.asDiagonal();
            return MatrixXcd((m + m.adjoint()) / 2.0);
        };
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(ratio(rho2[g]));
        f.mu = es.eigenvalues();
        f.w = es.eigenvectors();
        f.lw = f.w.adjoint() * (f.lam.asDiagonal() * f.w).eval();
        f.m3 = f.w.adjoint() * ratio(rho3[g]) * f.w;
        f.m0 = f.w.adjoint() * ratio(rho0[g]) * f.w;
        out.support_dim += static_cast<int>(s);
        for (Eigen::Index i = 0; i < s; ++i) spectrum.emplace_back(f.mu[i], g, i);
    }
    std::sort(spectrum.begin(), spectrum.end());

    std::vector<std::vector<int>> cluster_of(ng);
    for (std::size_t g = 0; g < ng; ++g) cluster_of[g].assign(static_cast<std::size_t>(frames[g].mu.size()), -1);
    int nc = 0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double mu = std::get<0>(spectrum[i]);
        if (i == 0 || mu - std::get<0>(spectrum[i - 1]) >
                          opt.cluster_tol * std::max(1.0, std::abs(std::get<0>(spectrum[i - 1]))))
            ++nc;
        cluster_of[std::get<1>(spectrum[i])][static_cast<std::size_t>(std::get<2>(spectrum[i]))] = nc - 1;
    }

    // Columns of each cluster inside each group.
    std::vector<std::vector<std::vector<Eigen::Index>>> cols(static_cast<std::size_t>(nc),
                                                             std::vector<std::vector<Eigen::Index>>(ng));
    std::vector<cplx> mean3(static_cast<std::size_t>(nc), 0.0);
    std::vector<int> rank(static_cast<std::size_t>(nc), 0);
    for (std::size_t g = 0; g < ng; ++g)
        for (std::size_t i = 0; i < cluster_of[g].size(); ++i) {
            const auto a = static_cast<std::size_t>(cluster_of[g][i]);
            cols[a][g].push_back(static_cast<Eigen::Index>(i));
            mean3[a] += frames[g].m3(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
            ++rank[a];
        }
    for (int a = 0; a < nc; ++a) mean3[static_cast<std::size_t>(a)] /= static_cast<double>(rank[static_cast<std::size_t>(a)]);

    // Block spans are orthogonal when lw vanishes between clusters; an
    // independent sample is constant on each cluster when m3 is.
    for (std::size_t g = 0; g < ng; ++g) {
        const GroupFrame& f = frames[g];
        for (Eigen::Index i = 0; i < f.mu.size(); ++i)
            for (Eigen::Index j = 0; j < f.mu.size(); ++j) {
                const int ci = cluster_of[g][static_cast<std::size_t>(i)];
                const int cj = cluster_of[g][static_cast<std::size_t>(j)];
                if (ci != cj) {
                    out.orthogonality_residual = std::max(out.orthogonality_residual, std::abs(f.lw(i, j)));
                    out.consistency_residual = std::max(out.consistency_residual, std::abs(f.m3(i, j)));
                } else {
                    const cplx d = i == j ? f.m3(i, i) - mean3[static_cast<std::size_t>(ci)] : f.m3(i, j);
                    out.consistency_residual = std::max(out.consistency_residual, std::abs(d));
                }
            }
    }

    // The weight of the reference on block a is tr(m0_aa lw_aa).
    double captured = 0.0;
    for (int a = 0; a < nc; ++a) {
        const auto& ca = cols[static_cast<std::size_t>(a)];
        SectorBlock blk;
        blk.rank = rank[static_cast<std::size_t>(a)];
        std::vector<double> spec;
        double p = 0.0;
        for (std::size_t g = 0; g < ng; ++g) {
            if (ca[g].empty()) continue;
            const GroupFrame& f = frames[g];
            const MatrixXcd small = f.lw(ca[g], ca[g]);
            p += small.trace().real();
            blk.weight += (f.m0(ca[g], ca[g]) * small).trace().real();
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es((small + small.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
            for (double l : es.eigenvalues()) spec.push_back(l);
        }
        VectorXd ev = Eigen::Map<VectorXd>(spec.data(), static_cast<Eigen::Index>(spec.size())) / p;
        blk.entropy = von_neumann(ev);
        if (opt.keep_states) {
            MatrixXcd span = MatrixXcd::Zero(out.region_dim, blk.rank);
            Eigen::Index col = 0;
            for (std::size_t g = 0; g < ng; ++g) {
                if (ca[g].empty()) continue;
                const GroupFrame& f = frames[g];
                const MatrixXcd local = f.k * f.lam.cwiseSqrt().asDiagonal() * f.w(Eigen::all, ca[g]);
                const auto& rows = groups.members[g];
                for (std::size_t r = 0; r < rows.size(); ++r)
                    span.block(rows[r], col, 1, local.cols()) = local.row(static_cast<Eigen::Index>(r));
                col += local.cols();
            }
            blk.factor = span / std::sqrt(p);
        }
        captured += blk.weight;
        out.blocks.push_back(std::move(blk));
    }
    std::stable_sort(out.blocks.begin(), out.blocks.end(), [](const SectorBlock& a, const SectorBlock& b) {
        if (a.entropy != b.entropy) return a.entropy < b.entropy;
        return a.weight > b.weight;
    });
    constexpr double kTie = 1e-8;
    double best = kTie;
    for (std::size_t a = 0; a < out.blocks.size(); ++a) {
        if (out.blocks[a].weight > best + kTie) {
            best = out.blocks[a].weight;
            out.vacuum = static_cast<int>(a);
        }
    }
    if (std::abs(captured - 1.0) > 1e-6) out.vacuum = -1;
    return out;
}

void check_loop(const HoneycombLattice& lat, const std::vector<int>& loop) {
    if (loop.size() < 6) throw ValidationError("a loop needs at least 6 vertices");
    std::set<int> distinct(loop.begin(), loop.end());
    if (distinct.size() != loop.size()) throw StructuralError("loop repeats a vertex");
    for (std::size_t i = 0; i < loop.size(); ++i) {
        std::vector<int> nb = lat.neighbors(loop[i]);
        if (std::find(nb.begin(), nb.end(), loop[(i + 1) % loop.size()]) == nb.end())
            throw StructuralError("loop vertices " + std::to_string(loop[i]) + " and " +
                                  std::to_string(loop[(i + 1) % loop.size()]) + " are not adjacent");
    }
}

} // namespace

// ---------------------------------------------------------------------------

bool AxiomReport::passed() const {
    return std::all_of(records.begin(), records.end(), [](const AxiomRecord& r) { return r.pass; });
}

nlohmann::json AxiomReport::to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records)
        recs.push_back({{"kind", to_string(r.kind)},
                        {"anchor", r.anchor},
                        {"split", r.split},
                        {"value", r.value},
                        {"pass", r.pass}});
    return {{"widths", {{"c", widths.c}, {"b", widths.b}}},
            {"tol", tol},
            {"placements", records.size()},
            {"max_abs_value", max_abs_value},
            {"pass", passed()},
            {"records", recs}};
}

std::string AxiomReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "placement,kind,anchor,split,value,pass\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        os << i << ',' << to_string(r.kind) << ',' << r.anchor << ',' << r.split << ',' << r.value << ','
           << (r.pass ? "true" : "false") << '\n';
    }
    return os.str();
}

double axiom_value(const StringNetModel& model, const StateVector& psi, const Partition& part) {
    EntropyCache s(model, psi);
    return axiom_value(s, model, part);
}

AxiomReport verify_axioms(const StringNetModel& model, const StateVector& psi, const std::vector<AxiomKind>& kinds,
                          AxiomWidths widths, double tol) {
    if (psi.size() != static_cast<Eigen::Index>(model.dim()))
        throw ValidationError("state dimension does not match the basis");
    AxiomReport rep;
    rep.tol = tol;
    rep.widths = widths;
    EntropyCache s(model, psi);
    for (AxiomKind kind : kinds) {
        for (const Partition& part : all_placements(*model.lat, kind, widths)) {
            AxiomRecord r;
            r.kind = kind;
            r.anchor = part.anchor;
            r.split = part.split;
            r.value = axiom_value(s, model, part);
            r.pass = std::abs(r.value) < tol;
            rep.max_abs_value = std::max(rep.max_abs_value, std::abs(r.value));
            rep.records.push_back(r);
        }
    }
    if (rep.records.empty()) throw StructuralError("no axiom placement fits on this lattice");
    return rep;
}

// ---------------------------------------------------------------------------

Region disk_path(const HoneycombLattice& lat, int anchor, int size) {
    return make_region(lat, find_path(lat, anchor, size), "disk");
}

nlohmann::json AreaLawFit::to_json() const {
    return {{"anchor", anchor},       {"sizes", sizes}, {"boundary", boundary}, {"entropies", entropies},
            {"alpha", alpha},         {"gamma", gamma}, {"residual", residual}};
}

AreaLawFit area_law_fit(const StringNetModel& model, const StateVector& psi, const std::vector<int>& disk_sizes,
                        int anchor) {
    std::set<int> distinct(disk_sizes.begin(), disk_sizes.end());
    if (distinct.size() < 2) throw ValidationError("area law fit needs at least two distinct disk sizes");
    AreaLawFit fit;
    fit.anchor = anchor;
    for (int size : distinct) {
        Region disk = disk_path(*model.lat, anchor, size);
        fit.sizes.push_back(size);
        fit.boundary.push_back(boundary_size(*model.lat, disk));
        fit.entropies.push_back(region_entropy(model, psi, disk));
    }
    // Normal equations for S = alpha n - gamma.
    const double m = static_cast<double>(fit.sizes.size());
    double sn = 0.0, snn = 0.0, ss = 0.0, sns = 0.0;
    for (std::size_t i = 0; i < fit.sizes.size(); ++i) {
        const double x = fit.boundary[i];
        sn += x;
        snn += x * x;
        ss += fit.entropies[i];
        sns += x * fit.entropies[i];
    }
    const double det = m * snn - sn * sn;
    fit.alpha = (m * sns - sn * ss) / det;
    fit.gamma = -(ss - fit.alpha * sn) / m;
    for (std::size_t i = 0; i < fit.sizes.size(); ++i)
        fit.residual =
            std::max(fit.residual, std::abs(fit.entropies[i] - (fit.alpha * fit.boundary[i] - fit.gamma)));
    return fit;
}

// ---------------------------------------------------------------------------

nlohmann::json SectorDecomposition::to_json() const {
    nlohmann::json b = nlohmann::json::array();
    for (const auto& blk : blocks)
        b.push_back({{"rank", blk.rank}, {"entropy", blk.entropy}, {"weight", blk.weight}});
    nlohmann::json out = {{"count", count()},
                          {"vacuum", vacuum},
                          {"region_dim", region_dim},
                          {"support_dim", support_dim},
                          {"thickening", thickening},
                          {"plaquettes", plaquettes},
                          {"orthogonality_residual", orthogonality_residual},
                          {"consistency_residual", consistency_residual},
                          {"converged", converged},
                          {"blocks", b}};
    if (next_count >= 0) out["next_count"] = next_count;
    if (vacuum >= 0) out["entropy_differences"] = sector_entropy_differences(*this);
    return out;
}

std::string SectorDecomposition::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "block,rank,entropy,weight,vacuum\n";
    for (std::size_t a = 0; a < blocks.size(); ++a)
        os << a << ',' << blocks[a].rank << ',' << blocks[a].entropy << ',' << blocks[a].weight << ','
           << (static_cast<int>(a) == vacuum ? "true" : "false") << '\n';
    return os.str();
}

SectorDecomposition information_convex_sectors(const StringNetModel& model, const Region& region,
                                               const SectorOptions& opt) {
    SectorDecomposition d = decompose(model, region, opt, opt.thickening);
    if (opt.check_convergence) {
        d.next_count = decompose(model, region, opt, opt.thickening + 1).count();
        d.converged = d.next_count == d.count();
    }
    return d;
}

std::vector<double> sector_entropy_differences(const SectorDecomposition& d) {
    if (d.blocks.size() <= 1) return {};
    if (d.vacuum < 0 || d.vacuum >= d.count())
        throw PreconditionError("no block matches the reference state; vacuum sector not identifiable");
    std::vector<double> out;
    for (const auto& blk : d.blocks) out.push_back(blk.entropy - d.blocks[static_cast<std::size_t>(d.vacuum)].entropy);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<int> row_cycle(const HoneycombLattice& lat, int n) {
    if (lat.topology != Topology::Torus) throw StructuralError("row_cycle needs a torus");
    std::vector<int> out;
    for (int m = 0; m < lat.Lx; ++m) {
        out.push_back(lat.vertex_at(VertexKind::Y, m, n));
        out.push_back(lat.vertex_at(VertexKind::L, m + 1, n - 1));
    }
    check_loop(lat, out);
    return out;
}

nlohmann::json MergeDemo::to_json() const {
    return {{"kind", kind},         {"parts", parts},       {"dims", dims},   {"merge", merge.to_json()},
            {"weights", weights},   {"distance", distance}, {"tol", tol},     {"pass", pass}};
}

MergeDemo markov_strip_merge(const StringNetModel& model, const StateVector& psi, int anchor, double tol) {
    const HoneycombLattice& lat = *model.lat;
    std::vector<int> path = find_path(lat, anchor, 4);
    MergeDemo demo;
    demo.kind = "markov_strip";
    demo.tol = tol;
    std::vector<Region> parts;
    for (int v : path) {
        parts.push_back(make_region(lat, {v}));
        demo.parts.push_back({v});
    }
    const std::vector<std::pair<double, StateVector>> mix{{1.0, psi}};
    PartsState abc = reduce_to_parts(model, mix, {parts[0], parts[1], parts[2]});
    PartsState bcd = reduce_to_parts(model, mix, {parts[1], parts[2], parts[3]});
    PartsState abcd = reduce_to_parts(model, mix, parts);
    demo.dims = abcd.dims;
    demo.merge = petz_merge(abc.rho, bcd.rho, demo.dims, tol);
    demo.distance = trace_distance(demo.merge.tau(), abcd.rho);
    demo.pass = demo.distance < tol;
    return demo;
}

MergeDemo annulus_closure_merge(const StringNetModel& model, const StateVector& psi, const std::vector<int>& loop,
                                const SectorOptions& opt, double tol) {
    const HoneycombLattice& lat = *model.lat;
    check_loop(lat, loop);
    if (loop.size() < 8) throw ValidationError("annulus closure needs a loop of at least 8 vertices");
    const auto len = static_cast<std::ptrdiff_t>(loop.size());
    std::vector<int> a(loop.begin() + 1, loop.begin() + (len - 5));
    std::vector<std::vector<int>> vs{a,
                                     {loop[0], loop[len - 5]},
                                     {loop[len - 4], loop[len - 1]},
                                     {loop[len - 3], loop[len - 2]}};
    MergeDemo demo;
    demo.kind = "annulus_closure";
    demo.tol = tol;
    std::vector<Region> parts;
    for (auto& v : vs) {
        std::sort(v.begin(), v.end());
        parts.push_back(make_region(lat, v));
        demo.parts.push_back(v);
    }
    const std::vector<std::pair<double, StateVector>> mix{{1.0, psi}};
    PartsState abc = reduce_to_parts(model, mix, {parts[0], parts[1], parts[2]});
    PartsState bcd = reduce_to_parts(model, mix, {parts[1], parts[2], parts[3]});
    std::vector<Eigen::Index> pos = parts_positions(model, parts, &demo.dims);
    demo.merge = petz_merge(abc.rho, bcd.rho, demo.dims, tol);

    // Maximum-entropy element: maximizing H(w) + sum_a w_a S(rho_a) over
    // the orthogonal extreme points gives w_a proportional to exp S(rho_a).
    SectorOptions keep = opt;
    keep.keep_states = true;
    SectorDecomposition sec = information_convex_sectors(model, make_region(lat, loop), keep);
    double smax = 0.0;
    for (const auto& blk : sec.blocks) smax = std::max(smax, blk.entropy);
    double z = 0.0;
    for (const auto& blk : sec.blocks) z += std::exp(blk.entropy - smax);
    // The blocks are orthogonal, so the weighted factors side by side
    // factor the mixture.
    Eigen::Index cols = 0;
    for (const auto& blk : sec.blocks) cols += blk.factor.cols();
    MatrixXcd h = MatrixXcd::Zero(demo.merge.tau_factor.rows(), cols);
    Eigen::Index col = 0;
    for (const auto& blk : sec.blocks) {
        demo.weights.push_back(std::exp(blk.entropy - smax) / z);
        const MatrixXcd f = std::sqrt(demo.weights.back()) * blk.factor;
        for (Eigen::Index i = 0; i < f.rows(); ++i) h.block(pos[static_cast<std::size_t>(i)], col, 1, f.cols()) = f.row(i);
        col += f.cols();
    }
    demo.distance = factored_trace_distance(demo.merge.tau_factor, h);
    demo.pass = demo.distance < tol;
    return demo;
}

} // namespace snlab
