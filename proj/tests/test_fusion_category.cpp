#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "snlab/category_io.hpp"
#include "snlab/fusion_category.hpp"

using namespace snlab;

namespace {

const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

// Scalar pentagon in the multiplicity-free form
//   F^{fcd}_u[g,l] F^{abl}_u[f,k] = sum_h F^{abc}_g[f,h] F^{ahd}_u[g,k] F^{bcd}_k[h,l]
// written independently of check_pentagon's path composition.
double scalar_pentagon_residual(const FusionCategory& cat) {
    const int r = cat.rank();
    double worst = 0.0;
    for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
    for (int c = 0; c < r; ++c)
    for (int d = 0; d < r; ++d)
    for (int u = 0; u < r; ++u)
    for (int f = 0; f < r; ++f)
    for (int g = 0; g < r; ++g)
    for (int k = 0; k < r; ++k)
    for (int l = 0; l < r; ++l) {
        if (!cat.N(a, b, f) || !cat.N(f, c, g) || !cat.N(g, d, u)) continue;
        if (!cat.N(c, d, l) || !cat.N(b, l, k) || !cat.N(a, k, u)) continue;
        const cplx lhs = cat.F(f, c, d, u, g, l) * cat.F(a, b, l, u, f, k);
        cplx rhs = 0.0;
        for (int h = 0; h < r; ++h)
            rhs += cat.F(a, b, c, g, f, h) * cat.F(a, h, d, u, g, k) * cat.F(b, c, d, k, h, l);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("snlab_test_" + name)).string();
}

} // namespace

TEST(FusionRing, BuiltinsAreValid) {
    for (const auto& name : builtin_names()) {
        const FusionCategory cat = builtin(name);
        EXPECT_TRUE(validate_fusion_ring(cat).ok()) << name;
        EXPECT_TRUE(cat.multiplicity_free()) << name;
    }
}

TEST(FusionRing, BrokenUnitLawReported) {
    FusionCategory cat = builtin("vec_z2");
    cat.fusion[(0 * 2 + 1) * 2 + 1] = 0;  // N_1s^s = 0
    const auto rep = validate_fusion_ring(cat);
    ASSERT_FALSE(rep.ok());
    bool unit = false;
    for (const auto& v : rep.violations) unit = unit || v.find("unit law") != std::string::npos;
    EXPECT_TRUE(unit);
}

TEST(FusionRing, MalformedShapeIsStructural) {
    FusionCategory cat = builtin("vec_z2");
    cat.fusion.pop_back();
    EXPECT_THROW(validate_fusion_ring(cat), StructuralError);
}

TEST(QuantumDimensions, KnownValues) {
    auto z2 = builtin("vec_z2");
    EXPECT_DOUBLE_EQ(z2.qdim[1], 1.0);
    EXPECT_NEAR(z2.total_dim, std::sqrt(2.0), 1e-14);

    // Largest root of x^2 - x - 1, the characteristic polynomial of [[0,1],[1,1]].
    auto fib = builtin("fibonacci");
    EXPECT_NEAR(fib.qdim[1], (1.0 + std::sqrt(1.0 + 4.0)) / 2.0, 1e-13);

    auto ising = builtin("ising");
    EXPECT_NEAR(ising.qdim[1], std::sqrt(2.0), 1e-13);
    EXPECT_NEAR(ising.qdim[2], 1.0, 1e-13);
    EXPECT_NEAR(ising.total_dim, 2.0, 1e-13);
}

TEST(QuantumDimensions, PerronFrobeniusConsistency) {
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        const int r = cat.rank();
        EXPECT_EQ(cat.qdim[0], 1.0);
        for (int a = 0; a < r; ++a) {
            EXPECT_EQ(cat.dual[cat.dual[a]], a);
            EXPECT_EQ(cat.qdim[a], cat.qdim[cat.dual[a]]) << name;
            for (int b = 0; b < r; ++b) {
                double s = 0.0;
                for (int c = 0; c < r; ++c) s += cat.N(a, b, c) * cat.qdim[c];
                EXPECT_NEAR(cat.qdim[a] * cat.qdim[b], s, 1e-12) << name;
            }
        }
    }
}

TEST(Pentagon, AllBuiltinsPass) {
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        const auto rep = check_pentagon(cat, 1e-9);
        EXPECT_TRUE(rep.ok()) << name;
        EXPECT_LT(rep.max_residual, 1e-9) << name;
        EXPECT_GT(rep.instances_checked, 0u);
        EXPECT_LT(scalar_pentagon_residual(cat), 1e-9) << name;
    }
}

TEST(Pentagon, TrivialAssociatorHasZeroResidual) {
    EXPECT_EQ(check_pentagon(builtin("vec_z2"), 1e-9).max_residual, 0.0);
}

TEST(Pentagon, PerturbedFibonacciFails) {
    auto cat = builtin("fibonacci");
    cat.F(1, 1, 1, 1).m(1, 1) = 1.0 / kPhi;
    const auto rep = check_pentagon(cat, 1e-9);
    EXPECT_FALSE(rep.ok());
    EXPECT_GE(rep.max_residual, 0.1);
    EXPECT_GE(scalar_pentagon_residual(cat), 0.1);
}

TEST(Pentagon, FibonacciEntriesMatchGoldenRatio) {
    const auto cat = builtin("fibonacci");
    EXPECT_NEAR(cat.F(1, 1, 1, 1, 0, 0).real(), 1.0 / kPhi, 1e-15);
    EXPECT_NEAR(cat.F(1, 1, 1, 1, 0, 1).real(), 1.0 / std::sqrt(kPhi), 1e-15);
    EXPECT_NEAR(cat.F(1, 1, 1, 1, 1, 1).real(), -1.0 / kPhi, 1e-15);
}

TEST(Unitarity, IsingAndZ3Pass) {
    EXPECT_TRUE(check_unitarity(builtin("ising"), 1e-12).ok());
    EXPECT_TRUE(check_unitarity(builtin("vec_z3"), 1e-12).ok());
}

TEST(Unitarity, ScaledBlockFails) {
    auto cat = builtin("ising");
    cat.F(1, 1, 1, 1).m *= 2.0;
    const auto rep = check_unitarity(cat, 1e-9);
    EXPECT_FALSE(rep.ok());
    EXPECT_NEAR(rep.max_residual, 3.0, 1e-12);
}

TEST(VacuumTriviality, BuiltinsPass) {
    for (const auto& name : builtin_names()) EXPECT_TRUE(check_vacuum_triviality(builtin(name), 1e-12).ok()) << name;
}

TEST(FrobeniusSchur, KnownIndicators) {
    EXPECT_EQ(frobenius_schur(builtin("vec_z2"), 1), 1);
    EXPECT_EQ(frobenius_schur(builtin("semion"), 1), -1);
    EXPECT_EQ(frobenius_schur(builtin("fibonacci"), 1), 1);
    EXPECT_EQ(frobenius_schur(builtin("ising"), 1), 1);
    const auto z4 = builtin("vec_z4");
    for (int a = 0; a < 4; ++a) EXPECT_EQ(z4.kappa[a], 1);
}

TEST(FrobeniusSchur, NonRealIndicatorRejected) {
    auto cat = builtin("vec_z2");
    cat.F(1, 1, 1, 1).m(0, 0) = cplx(0.0, 1.0);
    EXPECT_THROW(frobenius_schur(cat, 1), ValidationError);
}

TEST(Gauge, IdentityLeavesDataUnchanged) {
    const auto cat = builtin("ising");
    const auto out = gauge_transform(cat, {});
    for (std::size_t i = 0; i < cat.fblocks.size(); ++i) EXPECT_EQ(out.fblocks[i].m, cat.fblocks[i].m);
}

TEST(Gauge, FibonacciVertexSigns) {
    const auto fib = builtin("fibonacci");
    Eigen::MatrixXcd minus = -Eigen::MatrixXcd::Identity(1, 1);

    // Flipping the tau tau -> tau vertex enters every F^{ttt}_t entry twice.
    const auto same = gauge_transform(fib, {{{1, 1, 1}, minus}});
    EXPECT_LT((same.F(1, 1, 1, 1).m - fib.F(1, 1, 1, 1).m).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE(check_pentagon(same, 1e-9).ok());

    // Flipping tau tau -> 1 enters once on the off-diagonal entries.
    const auto flipped = gauge_transform(fib, {{{1, 1, 0}, minus}});
    EXPECT_NEAR(flipped.F(1, 1, 1, 1, 0, 1).real(), -fib.F(1, 1, 1, 1, 0, 1).real(), 1e-15);
    EXPECT_NEAR(flipped.F(1, 1, 1, 1, 1, 0).real(), -fib.F(1, 1, 1, 1, 1, 0).real(), 1e-15);
    EXPECT_NEAR(flipped.F(1, 1, 1, 1, 0, 0).real(), fib.F(1, 1, 1, 1, 0, 0).real(), 1e-15);
    EXPECT_TRUE(check_pentagon(flipped, 1e-9).ok());
    EXPECT_EQ(frobenius_schur(flipped, 1), 1);
}

TEST(Gauge, Z2PhaseCancels) {
    const auto z2 = builtin("vec_z2");
    Eigen::MatrixXcd ph(1, 1);
    ph(0, 0) = std::polar(1.0, 0.7);
    const auto out = gauge_transform(z2, {{{1, 1, 0}, ph}});
    EXPECT_LT(std::abs(out.F(1, 1, 1, 1, 0, 0) - 1.0), 1e-15);
    EXPECT_EQ(check_pentagon(out, 1e-12).max_residual, 0.0);
}

TEST(Gauge, RandomPhasesPreserveInvariants) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        GaugeData u;
        const int r = cat.rank();
        for (int a = 1; a < r; ++a)
            for (int b = 1; b < r; ++b)
                for (int c = 0; c < r; ++c)
                    if (cat.N(a, b, c)) {
                        Eigen::MatrixXcd m(1, 1);
                        m(0, 0) = std::polar(1.0, ang(rng));
                        u[{a, b, c}] = m;
                    }
        // Keep the pairing vertices symmetric so the indicator gauge survives.
        for (int a = 1; a < r; ++a) u[{cat.dual[a], a, 0}] = u[{a, cat.dual[a], 0}];
        const auto out = gauge_transform(cat, u);
        EXPECT_LT(check_pentagon(out, 1e-9).max_residual, 1e-9) << name;
        EXPECT_TRUE(check_unitarity(out, 1e-12).ok()) << name;
        for (int a = 0; a < r; ++a) EXPECT_EQ(frobenius_schur(out, a), cat.kappa[a]) << name;
    }
}

TEST(Gauge, RejectsBadInput) {
    const auto fib = builtin("fibonacci");
    Eigen::MatrixXcd two = 2.0 * Eigen::MatrixXcd::Identity(1, 1);
    EXPECT_THROW(gauge_transform(fib, {{{1, 1, 1}, two}}), ValidationError);
    Eigen::MatrixXcd minus = -Eigen::MatrixXcd::Identity(1, 1);
    EXPECT_THROW(gauge_transform(fib, {{{0, 1, 1}, minus}}), ValidationError);
}

TEST(Builtins, UnknownNameThrows) { EXPECT_THROW(builtin("bogus"), StructuralError); }

TEST(Builtins, PassAllValidators) {
    for (const auto& name : builtin_names()) {
        const auto rep = validate_all(builtin(name));
        EXPECT_TRUE(rep.ok()) << name;
    }
    EXPECT_EQ(builtin("vec_z2").rank(), 2);
    EXPECT_EQ(builtin("ising").rank(), 3);
}

TEST(Expression, Evaluates) {
    EXPECT_DOUBLE_EQ(evaluate_expression("1/sqrt(phi)"), 1.0 / std::sqrt(kPhi));
    EXPECT_DOUBLE_EQ(evaluate_expression("-(sqrt(5)-1)/2"), -(std::sqrt(5.0) - 1.0) / 2.0);
    EXPECT_DOUBLE_EQ(evaluate_expression("2^3^2"), 512.0);
    EXPECT_DOUBLE_EQ(evaluate_expression(" 1e-3 * 4 "), 4e-3);
    EXPECT_THROW(evaluate_expression("sqrt(2"), IoError);
    EXPECT_THROW(evaluate_expression("foo"), IoError);
}

TEST(CategoryIo, RoundTripIsExact) {
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        const auto path = temp_path(name + ".json");
        save_category(cat, path);
        const auto back = load_category(path);
        EXPECT_EQ(back.labels, cat.labels);
        EXPECT_EQ(back.fusion, cat.fusion);
        EXPECT_EQ(back.qdim, cat.qdim);
        EXPECT_EQ(back.kappa, cat.kappa);
        for (std::size_t i = 0; i < cat.fblocks.size(); ++i) EXPECT_EQ(back.fblocks[i].m, cat.fblocks[i].m);
        std::remove(path.c_str());
    }
}

TEST(CategoryIo, RejectsNonInvolutiveDual) {
    auto doc = category_to_json(builtin("vec_z3"));
    doc["dual"] = {0, 1, 1};
    EXPECT_THROW(category_from_json(doc), ValidationError);
}

TEST(CategoryIo, RecomputesMissingQdim) {
    auto doc = category_to_json(builtin("fibonacci"));
    doc.erase("qdim");
    doc.erase("kappa");
    const auto cat = category_from_json(doc);
    EXPECT_NEAR(cat.qdim[1], kPhi, 1e-14);
    EXPECT_EQ(cat.kappa[1], 1);
}

TEST(CategoryIo, AcceptsExpressionStrings) {
    auto doc = category_to_json(builtin("fibonacci"));
    for (auto& rec : doc["F"])
        if (rec["a"] == 1 && rec["b"] == 1 && rec["c"] == 1 && rec["d"] == 1 && rec["e"] == 0 && rec["f"] == 1)
            rec["re"] = "1/sqrt(phi)";
    const auto cat = category_from_json(doc);
    EXPECT_DOUBLE_EQ(cat.F(1, 1, 1, 1, 0, 1).real(), 1.0 / std::sqrt(kPhi));
}

TEST(CategoryIo, RejectsBrokenF) {
    auto doc = category_to_json(builtin("fibonacci"));
    for (auto& rec : doc["F"])
        if (rec["a"] == 1 && rec["b"] == 1 && rec["c"] == 1 && rec["d"] == 1 && rec["e"] == 1 && rec["f"] == 1)
            rec["re"] = 1.0 / kPhi;
    EXPECT_THROW(category_from_json(doc), ValidationError);
    EXPECT_NO_THROW(category_from_json(doc, true));
}

TEST(CategoryIo, RejectsInadmissibleAndMissingRecords) {
    auto doc = category_to_json(builtin("vec_z2"));
    doc["F"].push_back({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 0}, {"e", 1}, {"f", 1},
                        {"mu", 0}, {"nu", 0}, {"alpha", 0}, {"beta", 0}, {"re", 1.0}, {"im", 0.0}});
    EXPECT_THROW(category_from_json(doc), ValidationError);

    auto doc2 = category_to_json(builtin("vec_z2"));
    doc2["F"].erase(doc2["F"].begin());
    EXPECT_THROW(category_from_json(doc2), ValidationError);
}

TEST(CategoryIo, CorruptFileIsIoError) {
    const auto path = temp_path("corrupt.json");
    {
        std::ofstream out(path);
        out << "{ \"labels\": [1, ";
    }
    EXPECT_THROW(load_category(path), IoError);
    std::remove(path.c_str());
    EXPECT_THROW(load_category("/nonexistent/cat.json"), IoError);
}

TEST(CategoryIo, ResolveBuiltinPrefix) {
    EXPECT_EQ(resolve_category("builtin:semion").kappa[1], -1);
}
