#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "snlab/diagrams.hpp"

using namespace snlab;
using FT = FusionTree;

namespace {

const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

// Random admissible left-associated tree with n leaves.
FT random_tree(const FusionCategory& cat, std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> lab(0, cat.rank() - 1);
    std::vector<Label> leaves{lab(rng)};
    std::vector<Label> internal;
    Label cur = leaves[0];
    while (leaves.size() < n) {
        const Label x = lab(rng);
        std::vector<Label> chans;
        for (Label c = 0; c < cat.rank(); ++c)
            if (cat.N(cur, x, c)) chans.push_back(c);
        cur = chans[std::uniform_int_distribution<std::size_t>(0, chans.size() - 1)(rng)];
        leaves.push_back(x);
        internal.push_back(cur);
    }
    return FT::left_associated(leaves, internal);
}

// Random superposition of all left-associated trees sharing one boundary.
TreeVector random_vector(const FusionCategory& cat, std::size_t n, std::mt19937_64& rng) {
    const FT seed = random_tree(cat, n, rng);
    const auto leaves = seed.leaves();
    const Label root = seed.root_label();
    std::normal_distribution<double> g;
    TreeVector v;
    std::vector<Label> internal(n - 1);
    std::function<void(std::size_t, Label)> rec = [&](std::size_t i, Label cur) {
        if (i == n) {
            if (cur == root) v.add(FT::left_associated(leaves, internal), cplx(g(rng), g(rng)));
            return;
        }
        for (Label c = 0; c < cat.rank(); ++c)
            if (cat.N(cur, leaves[i], c)) {
                internal[i - 1] = c;
                rec(i + 1, c);
            }
    };
    rec(1, leaves[0]);
    return v;
}

} // namespace

TEST(FMove, VacuumMiddleLeafIsIdentity) {
    const auto fib = builtin("fibonacci");
    TreeVector v(FT::join(FT::join(FT::leaf(1), FT::leaf(0), 1), FT::leaf(1), 1));
    const TreeVector w = f_move(fib, v, "", MoveDirection::LeftToRight);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_NEAR(std::abs(w.amplitude(FT::join(FT::leaf(1), FT::join(FT::leaf(0), FT::leaf(1), 1), 1)) - 1.0), 0.0,
                1e-15);
}

TEST(FMove, FibonacciRow) {
    const auto fib = builtin("fibonacci");
    TreeVector v(FT::left_associated({1, 1, 1}, {0, 1}));
    const TreeVector w = f_move(fib, v, "", MoveDirection::LeftToRight);
    const FT t1 = FT::join(FT::leaf(1), FT::join(FT::leaf(1), FT::leaf(1), 0), 1);
    const FT tt = FT::join(FT::leaf(1), FT::join(FT::leaf(1), FT::leaf(1), 1), 1);
    EXPECT_NEAR(w.amplitude(t1).real(), 1.0 / kPhi, 1e-15);
    EXPECT_NEAR(w.amplitude(tt).real(), 1.0 / std::sqrt(kPhi), 1e-15);
    EXPECT_EQ(w.size(), 2u);
}

TEST(FMove, RoundTripIsIdentity) {
    std::mt19937_64 rng(11);
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (int rep = 0; rep < 10; ++rep) {
            const TreeVector v = random_vector(cat, 3, rng);
            const TreeVector there = f_move(cat, v, "", MoveDirection::LeftToRight);
            const TreeVector back = f_move(cat, there, "", MoveDirection::RightToLeft);
            EXPECT_LT(back.max_abs_diff(v), 1e-12) << name;
        }
    }
}

TEST(FMove, InadmissiblePositionThrows) {
    const auto z2 = builtin("vec_z2");
    TreeVector v(FT::join(FT::leaf(1), FT::leaf(1), 0));
    EXPECT_THROW(f_move(z2, v, "", MoveDirection::LeftToRight), StructuralError);
    EXPECT_THROW(f_move(z2, v, "LL", MoveDirection::LeftToRight), StructuralError);
}

TEST(FMove, PentagonCoherenceAcrossRoutes) {
    std::mt19937_64 rng(3);
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (std::size_t n : {4u, 5u}) {
            for (int rep = 0; rep < 6; ++rep) {
                const TreeVector v = random_vector(cat, n, rng);
                const TreeVector direct = to_right_associated(cat, v);
                // Detour through a mixed bracketing before reaching the same form.
                const TreeVector mixed = f_move(cat, v, std::string(n - 3, 'L'), MoveDirection::LeftToRight);
                const TreeVector detour = to_right_associated(cat, mixed);
                EXPECT_LT(direct.max_abs_diff(detour), 1e-10) << name;
                const TreeVector back = to_left_associated(cat, direct);
                EXPECT_LT(back.max_abs_diff(v), 1e-10) << name;
            }
        }
    }
}

TEST(Bend, ZigZagGivesIndicator) {
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (Label a = 0; a < cat.rank(); ++a) {
            TreeVector id(FT::leaf(a));
            for (std::size_t side : {0u, 1u}) {
                const TreeVector up = bend(cat, id, 0, BendDirection::Up);
                const TreeVector down = bend(cat, up, side == 0 ? 0 : 1, BendDirection::Down);
                ASSERT_EQ(down.size(), 1u) << name;
                const cplx f = down.terms().begin()->second;
                EXPECT_NEAR(f.real(), cat.kappa[a], 1e-12) << name << " label " << a;
                EXPECT_NEAR(f.imag(), 0.0, 1e-12);
            }
        }
    }
    const auto semion = builtin("semion");
    const TreeVector z = bend(semion, bend(semion, TreeVector(FT::leaf(1)), 0, BendDirection::Up), 0, BendDirection::Down);
    EXPECT_NEAR(z.terms().begin()->second.real(), -1.0, 1e-15);
}

TEST(Bend, VacuumLeafIsIdentity) {
    const auto ising = builtin("ising");
    TreeVector id(FT::leaf(0));
    const TreeVector r = bend(ising, bend(ising, id, 0, BendDirection::Up), 0, BendDirection::Down);
    EXPECT_LT(r.max_abs_diff(id), 1e-15);
}

TEST(Completeness, Terms) {
    const auto fib = builtin("fibonacci");
    auto t1 = completeness_terms(fib, 0, 1);
    ASSERT_EQ(t1.size(), 1u);
    EXPECT_EQ(t1[0].c, 1);
    EXPECT_DOUBLE_EQ(t1[0].coeff, 1.0);

    auto tt = completeness_terms(fib, 1, 1);
    ASSERT_EQ(tt.size(), 2u);
    EXPECT_NEAR(tt[0].coeff, std::sqrt(1.0 / (kPhi * kPhi)), 1e-15);
    EXPECT_NEAR(tt[1].coeff, std::sqrt(kPhi / (kPhi * kPhi)), 1e-15);

    auto zz = completeness_terms(builtin("vec_z2"), 1, 1);
    ASSERT_EQ(zz.size(), 1u);
    EXPECT_EQ(zz[0].c, 0);
    EXPECT_DOUBLE_EQ(zz[0].coeff, 1.0);
}

TEST(Completeness, FusePairReproducesInput) {
    std::mt19937_64 rng(21);
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (int rep = 0; rep < 5; ++rep) {
            const TreeVector v = random_vector(cat, 4, rng);
            for (std::size_t p = 0; p < 3; ++p) {
                const TreeVector w = fuse_pair(cat, v, p);
                EXPECT_LT(to_left_associated(cat, w).max_abs_diff(v), 1e-12) << name;
                const cplx a = inner_product(cat, v, w), b = inner_product(cat, v, v);
                EXPECT_LT(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(b)));
            }
        }
    }
}

TEST(InnerProduct, Orthogonality) {
    const auto z2 = builtin("vec_z2");
    const FT t = FT::join(FT::leaf(1), FT::leaf(1), 0);
    EXPECT_NEAR(std::abs(inner_product(z2, t, t) - 1.0), 0.0, 1e-15);

    const auto fib = builtin("fibonacci");
    const FT a = FT::join(FT::leaf(1), FT::leaf(1), 0);
    const FT b = FT::join(FT::leaf(1), FT::leaf(1), 1);
    EXPECT_THROW(inner_product(fib, a, b), StructuralError);  // different roots
    const FT a3 = FT::left_associated({1, 1, 1}, {0, 1});
    const FT b3 = FT::left_associated({1, 1, 1}, {1, 1});
    EXPECT_EQ(inner_product(fib, a3, b3), 0.0);
    EXPECT_NEAR(inner_product(fib, b, b).real(), std::sqrt(kPhi), 1e-15);
}

TEST(InnerProduct, GramFormIsHermitianPositive) {
    std::mt19937_64 rng(8);
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (int rep = 0; rep < 5; ++rep) {
            TreeVector v = random_vector(cat, 4, rng);
            // A second vector with the same boundary, written in another bracketing.
            TreeVector w = to_right_associated(cat, v);
            w *= cplx(0.3, -0.8);
            const cplx vw = inner_product(cat, v, w), wv = inner_product(cat, w, v);
            EXPECT_LT(std::abs(vw - std::conj(wv)), 1e-12);
            EXPECT_GT(inner_product(cat, v, v).real(), 0.0);
        }
    }
}

TEST(Bubble, PopsWithQuantumDimension) {
    struct Case {
        const char* name;
        Label s;
        double d;
    };
    for (const Case& c : {Case{"vec_z2", 1, 1.0}, Case{"fibonacci", 1, kPhi}, Case{"ising", 1, std::sqrt(2.0)}}) {
        const auto cat = builtin(c.name);
        for (Label x = 0; x < cat.rank(); ++x) {
            TreeVector v(FT::leaf(x));
            const TreeVector with = cup(cat, v, 1, c.s);
            const TreeVector popped = pop_bubble(cat, with, 1);
            ASSERT_EQ(popped.size(), 1u);
            EXPECT_NEAR(std::abs(popped.amplitude(FT::leaf(x)) - c.d), 0.0, 1e-14) << c.name;
        }
    }
}

TEST(Bubble, NonBubbleRejected) {
    const auto fib = builtin("fibonacci");
    TreeVector v(FT::join(FT::leaf(1), FT::leaf(1), 1));
    EXPECT_THROW(pop_bubble(fib, v, 0), StructuralError);
}

TEST(VacuumCollapse, DualityRule) {
    const auto z2 = builtin("vec_z2");
    const auto fib = builtin("fibonacci");
    const auto ising = builtin("ising");
    TreeVector ss(FT::join(FT::leaf(1), FT::leaf(1), 0));
    EXPECT_FALSE(vacuum_collapse(z2, ss).empty());
    // Hom(1, tau 1) and Hom(1, sigma psi) are empty: the zero vector.
    FT bad1 = FT::join(FT::leaf(1), FT::leaf(0), 0);
    EXPECT_TRUE(vacuum_collapse(fib, TreeVector(bad1)).empty());
    FT bad2 = FT::join(FT::leaf(1), FT::leaf(2), 0);
    EXPECT_TRUE(vacuum_collapse(ising, TreeVector(bad2)).empty());
}

TEST(TreeVector, KeyRoundTripAndJson) {
    const auto ising = builtin("ising");
    const FT t = FT::left_associated({1, 1, 2, 1}, {2, 0, 1});
    EXPECT_EQ(FT::from_key(t.key()).key(), t.key());
    EXPECT_TRUE(t.admissible(ising));
    TreeVector v(t, cplx(0.5, 0.25));
    const auto j = v.to_json(ising);
    ASSERT_EQ(j.size(), 1u);
    EXPECT_EQ(j[0]["tree"], "(((sigma sigma)_psi psi)_1 sigma)_sigma");
}

namespace {

// All admissible label tuples for hexagon vertex k with a given string s.
std::vector<HexVertexLabels> vertex_tuples(const FusionCategory& cat, int k, Label s) {
    std::vector<HexVertexLabels> out;
    const int r = cat.rank();
    const Label sb = cat.dual[s];
    for (Label e = 0; e < r; ++e)
        for (Label a = 0; a < r; ++a)
            for (Label b = 0; b < r; ++b)
                for (Label ap = 0; ap < r; ++ap)
                    for (Label bp = 0; bp < r; ++bp) {
                        HexVertexLabels l{e, a, b, ap, bp};
                        // Ring edges on the left side (4,5,6) pair as (i, s),
                        // on the right side (1,2,3) as (sbar, i).
                        auto ok_edge = [&](int edge, Label i, Label ip) {
                            return edge >= 4 ? cat.N(i, s, ip) > 0 : cat.N(sb, i, ip) > 0;
                        };
                        const int prev = k == 1 ? 6 : k - 1;
                        if (ok_edge(prev, a, ap) && ok_edge(k, b, bp)) out.push_back(l);
                    }
    return out;
}

} // namespace

TEST(PlaquetteCoeffs, VacuumStringIsIdentity) {
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (int k = 1; k <= 6; ++k)
            for (const auto& l : vertex_tuples(cat, k, 0)) {
                const auto m = plaquette_coeffs(cat, 0, k, l);
                if (m.size() == 0) continue;
                EXPECT_LT(std::abs(m(0, 0) - 1.0), 1e-12) << name << " k=" << k;
            }
    }
}

TEST(PlaquetteCoeffs, IndependentOfReductionRoute) {
    for (const auto& name : builtin_names()) {
        const auto cat = builtin(name);
        for (Label s = 0; s < cat.rank(); ++s)
            for (int k = 1; k <= 6; ++k)
                for (const auto& l : vertex_tuples(cat, k, s)) {
                    const cplx a = vertex_reduction_coeff(cat, s, k, l, Route::ViaLeftAssociated);
                    const cplx b = vertex_reduction_coeff(cat, s, k, l, Route::ViaRightAssociated);
                    EXPECT_LT(std::abs(a - b), 1e-10) << name << " s=" << s << " k=" << k;
                }
    }
}

TEST(PlaquetteCoeffs, Z2CoefficientsAreSigns) {
    const auto z2 = builtin("vec_z2");
    for (int k = 1; k <= 6; ++k)
        for (const auto& l : vertex_tuples(z2, k, 1)) {
            const auto m = plaquette_coeffs(z2, 1, k, l);
            if (m.size() == 0) continue;
            EXPECT_NEAR(std::abs(m(0, 0)), 1.0, 1e-12);
            EXPECT_NEAR(m(0, 0).imag(), 0.0, 1e-12);
        }
}

TEST(PlaquetteCoeffs, InadmissibleIsEmpty) {
    const auto fib = builtin("fibonacci");
    // (i6, i1) = (1, 1) cannot fuse to e1 = tau.
    EXPECT_EQ(plaquette_coeffs(fib, 1, 1, HexVertexLabels{1, 0, 0, 1, 1}).size(), 0);
}

TEST(PlaquetteCoeffs, CacheMatchesDirect) {
    const auto ising = builtin("ising");
    PlaquetteCoeffCache cache(ising);
    for (int k = 1; k <= 6; ++k)
        for (const auto& l : vertex_tuples(ising, k, 1)) {
            EXPECT_EQ(cache.get(1, k, l), vertex_reduction_coeff(ising, 1, k, l));
            EXPECT_EQ(cache.get(1, k, l), vertex_reduction_coeff(ising, 1, k, l));
        }
}
