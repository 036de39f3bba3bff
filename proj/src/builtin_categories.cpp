#include <cmath>

#include "snlab/fusion_category.hpp"

namespace snlab {

namespace {

FusionCategory skeleton(std::string name, std::vector<std::string> labels, std::vector<int> dual) {
    FusionCategory cat;
    cat.name = std::move(name);
    cat.labels = std::move(labels);
    cat.dual = std::move(dual);
    const int r = cat.rank();
    cat.fusion.assign(static_cast<std::size_t>(r) * r * r, 0);
    return cat;
}

void set_N(FusionCategory& cat, int a, int b, int c) { cat.fusion[(a * cat.rank() + b) * cat.rank() + c] = 1; }

// Every 1x1 block starts at +1; larger blocks must be filled explicitly.
void default_fdata(FusionCategory& cat) {
    init_fblock_layout(cat);
    for (auto& blk : cat.fblocks)
        if (blk.rows.size() == 1) blk.m(0, 0) = 1.0;
}

void set_scalar(FusionCategory& cat, int a, int b, int c, int d, cplx v) {
    FBlock& blk = cat.F(a, b, c, d);
    if (blk.rows.size() != 1) throw StructuralError("expected a 1x1 F-block");
    blk.m(0, 0) = v;
}

FusionCategory vec_zn(int n, const std::string& name, std::vector<std::string> labels) {
    std::vector<int> dual(n);
    for (int a = 0; a < n; ++a) dual[a] = (n - a) % n;
    FusionCategory cat = skeleton(name, std::move(labels), std::move(dual));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) set_N(cat, a, b, (a + b) % n);
    default_fdata(cat);
    return cat;
}

FusionCategory make_semion() {
    FusionCategory cat = skeleton("semion", {"1", "s"}, {0, 1});
    set_N(cat, 0, 0, 0);
    set_N(cat, 0, 1, 1);
    set_N(cat, 1, 0, 1);
    set_N(cat, 1, 1, 0);
    default_fdata(cat);
    set_scalar(cat, 1, 1, 1, 1, -1.0);
    return cat;
}

FusionCategory make_fibonacci() {
    FusionCategory cat = skeleton("fibonacci", {"1", "tau"}, {0, 1});
    set_N(cat, 0, 0, 0);
    set_N(cat, 0, 1, 1);
    set_N(cat, 1, 0, 1);
    set_N(cat, 1, 1, 0);
    set_N(cat, 1, 1, 1);
    default_fdata(cat);
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    FBlock& blk = cat.F(1, 1, 1, 1);
    blk.m << 1.0 / phi, 1.0 / std::sqrt(phi), 1.0 / std::sqrt(phi), -1.0 / phi;
    return cat;
}

FusionCategory make_ising() {
    // labels: 1, sigma, psi
    FusionCategory cat = skeleton("ising", {"1", "sigma", "psi"}, {0, 1, 2});
    for (int a = 0; a < 3; ++a) {
        set_N(cat, 0, a, a);
        set_N(cat, a, 0, a);
    }
    set_N(cat, 1, 1, 0);
    set_N(cat, 1, 1, 2);
    set_N(cat, 1, 2, 1);
    set_N(cat, 2, 1, 1);
    set_N(cat, 2, 2, 0);
    default_fdata(cat);
    const double h = 1.0 / std::sqrt(2.0);
    FBlock& blk = cat.F(1, 1, 1, 1);
    blk.m << h, h, h, -h;
    set_scalar(cat, 2, 1, 2, 1, -1.0);
    set_scalar(cat, 1, 2, 1, 2, -1.0);
    return cat;
}

} // namespace

std::vector<std::string> builtin_names() {
    return {"vec_z2", "semion", "fibonacci", "ising", "vec_z3", "vec_z4"};
}

FusionCategory builtin(const std::string& name) {
    FusionCategory cat;
    if (name == "vec_z2") cat = vec_zn(2, name, {"1", "s"});
    else if (name == "vec_z3") cat = vec_zn(3, name, {"1", "g", "g2"});
    else if (name == "vec_z4") cat = vec_zn(4, name, {"1", "g", "g2", "g3"});
    else if (name == "semion") cat = make_semion();
    else if (name == "fibonacci") cat = make_fibonacci();
    else if (name == "ising") cat = make_ising();
    else throw StructuralError("unknown builtin category '" + name + "'");
    finalize_category(cat);
    return cat;
}

} // namespace snlab
