#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "snlab/category_io.hpp"
#include "snlab/eb_axioms.hpp"

using namespace snlab;

namespace {

const double kLn2 = std::log(2.0);
const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

// prod_q B_q applied to the vacuum labeling, with (1 - B_p) in place of B_p
// for every p in `flux`.
StateVector projected_vacuum(const StringNetModel& model, const std::vector<int>& flux = {}) {
    StateVector x = StateVector::Zero(static_cast<Eigen::Index>(model.dim()));
    x[0] = 1.0;
    for (int q = 0; q < model.lat->num_plaquettes(); ++q) {
        const SparseMatrix b = plaquette_projector(model, q).m;
        if (std::find(flux.begin(), flux.end(), q) != flux.end())
            x = x - b * x;
        else
            x = b * x;
    }
    return x / x.norm();
}

FusionCategory trivial_category() {
    nlohmann::json doc{{"name", "trivial"},
                       {"labels", {"1"}},
                       {"dual", {0}},
                       {"fusion", {{0, 0, 0, 1}}},
                       {"F", {{{"a", 0}, {"b", 0}, {"c", 0}, {"d", 0}, {"e", 0}, {"f", 0}, {"re", 1.0}}}}};
    return category_from_json(doc);
}

// Eigenvalues of the dense reduced density matrix, summed directly.
double dense_region_entropy(const StringNetModel& model, const StateVector& psi, const std::vector<int>& vertices) {
    const DensityMatrix rho = reduced_density_matrix(model, psi, make_region(*model.lat, vertices));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.m);
    double s = 0.0;
    for (double l : es.eigenvalues())
        if (l > 1e-14) s -= l * std::log(l);
    return s;
}

std::vector<int> joined(std::vector<int> a, const std::vector<int>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

double max_abs(const AxiomReport& r) {
    double m = 0.0;
    for (const auto& rec : r.records) m = std::max(m, std::abs(rec.value));
    return m;
}

std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST(Axioms, Z2TorusGroundStateBulk) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    const AxiomReport r = verify_axioms(model, psi, {AxiomKind::A0Bulk, AxiomKind::A1Bulk}, {}, 1e-9);
    EXPECT_TRUE(r.passed());
    EXPECT_LT(r.max_abs_value, 1e-9);
    EXPECT_DOUBLE_EQ(r.max_abs_value, max_abs(r));
    EXPECT_GT(r.records.size(), 18u);
    EXPECT_EQ(r.to_json()["records"].size(), r.records.size());
}

TEST(Axioms, ValueMatchesDenseEntropies) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    const Partition a1 = make_axiom_partition(lat, AxiomKind::A1Bulk, 4, {}, 1);
    auto s = [&](const std::vector<int>& v) { return dense_region_entropy(model, psi, v); };
    const double oracle = s(joined(a1.B.vertices, a1.C.vertices)) + s(joined(a1.C.vertices, a1.D.vertices)) -
                          s(a1.B.vertices) - s(a1.D.vertices);
    EXPECT_NEAR(axiom_value(model, psi, a1), oracle, 1e-10);

    const Partition a0 = make_axiom_partition(lat, AxiomKind::A0Bulk, 7);
    const double oracle0 = s(joined(a0.B.vertices, a0.C.vertices)) + s(a0.C.vertices) - s(a0.B.vertices);
    EXPECT_NEAR(axiom_value(model, psi, a0), oracle0, 1e-10);
}

TEST(Axioms, OpenPatchBoundary) {
    const HoneycombLattice lat = build_open_patch(3, 3);
    for (const char* name : {"vec_z2", "fibonacci"}) {
        const FusionCategory cat = builtin(name);
        const StringNetModel model(cat, lat);
        const StateVector psi = projected_vacuum(model);
        const AxiomReport r = verify_axioms(model, psi, {AxiomKind::A0Boundary, AxiomKind::A1Boundary}, {}, 1e-9);
        EXPECT_FALSE(r.records.empty()) << name;
        EXPECT_LT(r.max_abs_value, 1e-9) << name;
    }
}

TEST(Axioms, ProductStateHasNoEntropy) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("semion");
    const StringNetModel model(cat, lat);
    StateVector e0 = StateVector::Zero(static_cast<Eigen::Index>(model.dim()));
    e0[0] = 1.0;
    const AxiomReport r = verify_axioms(model, e0, {AxiomKind::A0Bulk, AxiomKind::A1Bulk}, {}, 1e-12);
    EXPECT_EQ(r.max_abs_value, 0.0);
}

TEST(Axioms, NoPlacementThrows) {
    const HoneycombLattice lat = build_torus(2, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    EXPECT_THROW(verify_axioms(model, psi, {AxiomKind::A0Bulk}, {}, 1e-9), StructuralError);
}

TEST(Axioms, FibonacciFluxViolatesA1) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("fibonacci");
    const StringNetModel model(cat, lat);
    const StateVector gs = projected_vacuum(model);
    EXPECT_LT(verify_axioms(model, gs, {AxiomKind::A1Bulk}, {}, 1e-8).max_abs_value, 1e-8);

    const StateVector flux = projected_vacuum(model, {0});
    const AxiomReport a1 = verify_axioms(model, flux, {AxiomKind::A1Bulk}, {}, 1e-8);
    EXPECT_GT(a1.max_abs_value, 0.1);
    EXPECT_FALSE(a1.passed());
    const AxiomReport a0 = verify_axioms(model, flux, {AxiomKind::A0Bulk}, {}, 1e-8);
    EXPECT_LT(a0.max_abs_value, 1e-8);
}

TEST(Axioms, Z2FluxVanishesOnTorus) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    StateVector x = StateVector::Zero(static_cast<Eigen::Index>(model.dim()));
    x[0] = 1.0;
    for (int q = 0; q < lat.num_plaquettes(); ++q) {
        const SparseMatrix b = plaquette_projector(model, q).m;
        x = q == 0 ? StateVector(x - b * x) : StateVector(b * x);
    }
    EXPECT_LT(x.norm(), 1e-12);
}

// ---------------------------------------------------------------------------

TEST(DiskPath, IsADisk) {
    const HoneycombLattice lat = build_torus(3, 3);
    for (int size = 1; size <= 5; ++size) {
        const Region r = disk_path(lat, 2, size);
        EXPECT_EQ(static_cast<int>(r.vertices.size()), size);
        EXPECT_EQ(boundary_size(lat, r), size + 2);
        EXPECT_EQ(num_components(lat, r), 1);
    }
    EXPECT_THROW(disk_path(build_open_patch(1, 1), 0, 6), StructuralError);
}

TEST(AreaLaw, Z2TopologicalEntropy) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    const AreaLawFit fit = area_law_fit(model, psi, {1, 2, 3, 4});
    EXPECT_NEAR(fit.gamma, kLn2, 1e-6);
    EXPECT_NEAR(fit.alpha, kLn2, 1e-6);
    EXPECT_LT(fit.residual, 1e-8);
    for (std::size_t i = 0; i < fit.sizes.size(); ++i)
        EXPECT_NEAR(fit.entropies[i], (fit.boundary[i] - 1) * kLn2, 1e-9);
    for (int anchor : {5, 11}) EXPECT_NEAR(area_law_fit(model, psi, {1, 2, 3, 4}, anchor).gamma, fit.gamma, 1e-9);
}

TEST(AreaLaw, FibonacciTopologicalEntropy) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("fibonacci");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    const AreaLawFit fit = area_law_fit(model, psi, {1, 2, 3, 4});
    EXPECT_NEAR(fit.gamma, std::log(1.0 + kPhi * kPhi), 1e-5);
    EXPECT_LT(fit.residual, 1e-8);
    EXPECT_NEAR(area_law_fit(model, psi, {1, 2, 3}, 9).gamma, fit.gamma, 1e-8);
}

TEST(AreaLaw, TrivialCategory) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = trivial_category();
    const StringNetModel model(cat, lat);
    ASSERT_EQ(model.dim(), 1u);
    const AreaLawFit fit = area_law_fit(model, projected_vacuum(model), {1, 2, 3});
    EXPECT_NEAR(fit.gamma, 0.0, 1e-12);
    EXPECT_NEAR(fit.alpha, 0.0, 1e-12);
}

TEST(AreaLaw, NeedsTwoSizes) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    EXPECT_THROW(area_law_fit(model, psi, {2}), ValidationError);
    EXPECT_THROW(area_law_fit(model, psi, {2, 2}), ValidationError);
}

// ---------------------------------------------------------------------------

TEST(RowCycle, WindsOnce) {
    const HoneycombLattice lat = build_torus(4, 3);
    const std::vector<int> loop = row_cycle(lat, 1);
    ASSERT_EQ(loop.size(), 8u);
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const auto nb = lat.neighbors(loop[i]);
        EXPECT_NE(std::find(nb.begin(), nb.end(), loop[(i + 1) % loop.size()]), nb.end());
    }
    EXPECT_THROW(row_cycle(build_open_patch(3, 3), 0), StructuralError);
}

TEST(Sectors, Z2LoopHasFourSectors) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    SectorOptions opt;
    opt.check_convergence = true;
    for (int row : {0, 1}) {
        const SectorDecomposition d = information_convex_sectors(model, make_region(lat, row_cycle(lat, row)), opt);
        ASSERT_EQ(d.count(), 4) << row;
        EXPECT_TRUE(d.converged);
        EXPECT_EQ(d.next_count, 4);
        EXPECT_LT(d.orthogonality_residual, 1e-8);
        EXPECT_GE(d.vacuum, 0);
        double total = 0.0;
        int ranks = 0;
        for (const auto& b : d.blocks) {
            total += b.weight;
            ranks += b.rank;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        EXPECT_EQ(ranks, d.support_dim);
        for (double diff : sector_entropy_differences(d)) EXPECT_NEAR(diff, 0.0, 1e-8);
    }
}

TEST(Sectors, FibonacciLoopQuantumDimensions) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("fibonacci");
    const StringNetModel model(cat, lat);
    const std::vector<int> loop = row_cycle(lat, 0);
    const SectorDecomposition d = information_convex_sectors(model, make_region(lat, loop));
    ASSERT_EQ(d.count(), 4);
    const double lnphi = std::log(kPhi);
    const std::vector<double> expected{0.0, 2 * lnphi, 2 * lnphi, 4 * lnphi};
    const std::vector<double> diffs = sorted(sector_entropy_differences(d));
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(diffs[i], expected[i], 1e-7);

    // One extra vertex next to the loop deforms the annulus without changing it.
    std::vector<int> bumped = loop;
    for (int v : lat.neighbors(loop[0]))
        if (std::find(loop.begin(), loop.end(), v) == loop.end()) {
            bumped.push_back(v);
            break;
        }
    const std::vector<double> deformed = sorted(sector_entropy_differences(
        information_convex_sectors(model, make_region(lat, bumped))));
    ASSERT_EQ(deformed.size(), diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) EXPECT_NEAR(deformed[i], diffs[i], 1e-7);
}

TEST(Sectors, DiskHasOneSector) {
    const HoneycombLattice lat = build_open_patch(3, 3);
    const Region disk = region_from_plaquettes(lat, {lat.plaquette_at(1, 1)});
    for (const auto& name : builtin_names()) {
        const FusionCategory cat = builtin(name);
        const StringNetModel model(cat, lat);
        const SectorDecomposition d = information_convex_sectors(model, disk);
        EXPECT_EQ(d.count(), 1) << name;
        EXPECT_EQ(d.vacuum, 0) << name;
        EXPECT_EQ(d.blocks[0].rank, d.support_dim) << name;
        EXPECT_TRUE(sector_entropy_differences(d).empty()) << name;
    }
}

TEST(Sectors, HalfAnnulusHasTwoSectors) {
    const HoneycombLattice lat = build_open_patch(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const int hole = lat.plaquette_at(1, 0);
    std::vector<int> around;
    for (int v : lat.plaquettes[hole].vertices)
        for (int q : lat.plaquettes_of_vertex(v))
            if (q != hole && std::find(around.begin(), around.end(), q) == around.end()) around.push_back(q);
    SectorOptions opt;
    opt.holes = {hole};
    const SectorDecomposition d = information_convex_sectors(model, region_from_plaquettes(lat, around), opt);
    EXPECT_EQ(d.count(), 2);
    EXPECT_EQ(d.to_json()["blocks"].size(), 2u);
}

TEST(Sectors, DifferencesNeedVacuum) {
    SectorDecomposition d;
    d.blocks.resize(2);
    d.vacuum = -1;
    EXPECT_THROW(sector_entropy_differences(d), PreconditionError);
    d.blocks.resize(1);
    EXPECT_TRUE(sector_entropy_differences(d).empty());
}

// ---------------------------------------------------------------------------

TEST(Merge, MarkovStrip) {
    const HoneycombLattice lat = build_torus(3, 3);
    for (const char* name : {"vec_z2", "fibonacci"}) {
        const FusionCategory cat = builtin(name);
        const StringNetModel model(cat, lat);
        const StateVector psi = projected_vacuum(model);
        const MergeDemo m = markov_strip_merge(model, psi, 0, 1e-9);
        EXPECT_TRUE(m.pass) << name;
        EXPECT_LT(m.distance, 1e-9) << name;
        EXPECT_LT(m.merge.cmi_rho, 1e-9) << name;
        EXPECT_EQ(m.parts.size(), 4u);
    }
}

TEST(Merge, AnnulusClosure) {
    const HoneycombLattice lat = build_torus(4, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    const MergeDemo m = annulus_closure_merge(model, psi, row_cycle(lat, 0), {}, 1e-8);
    EXPECT_TRUE(m.pass);
    EXPECT_LT(m.distance, 1e-8);
    ASSERT_EQ(m.weights.size(), 4u);
    for (double w : m.weights) EXPECT_NEAR(w, 0.25, 1e-9);
    EXPECT_EQ(m.dims, (std::vector<int>{8, 16, 16, 8}));
}

TEST(Merge, AnnulusNeedsEightVertices) {
    const HoneycombLattice lat = build_torus(3, 3);
    const FusionCategory cat = builtin("vec_z2");
    const StringNetModel model(cat, lat);
    const StateVector psi = projected_vacuum(model);
    EXPECT_THROW(annulus_closure_merge(model, psi, row_cycle(lat, 0), {}, 1e-8), ValidationError);
}
