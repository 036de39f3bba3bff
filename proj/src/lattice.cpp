#include "snlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace snlab {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

using VKey = std::array<int, 3>;  // {kind, m, n}
using EKey = std::array<int, 3>;

VKey vkey(VertexKind k, int m, int n) { return {static_cast<int>(k), m, n}; }
EKey ekey(EdgeKind k, int m, int n) { return {static_cast<int>(k), m, n}; }

// Cell-coordinate incidence of the infinite honeycomb.
std::array<EKey, 3> vertex_edges(const VKey& v) {
    const int m = v[1], n = v[2];
    if (v[0] == static_cast<int>(VertexKind::Y))
        return {ekey(EdgeKind::V, m, n), ekey(EdgeKind::Left, m, n), ekey(EdgeKind::Right, m, n)};
    return {ekey(EdgeKind::Right, m - 1, n + 1), ekey(EdgeKind::Left, m, n + 1), ekey(EdgeKind::V, m - 1, n + 2)};
}

std::array<VKey, 2> edge_ends(const EKey& e) {  // {lower, upper}
    const int m = e[1], n = e[2];
    switch (static_cast<EdgeKind>(e[0])) {
    case EdgeKind::V:
        return {vkey(VertexKind::L, m + 1, n - 2), vkey(VertexKind::Y, m, n)};
    case EdgeKind::Left:
        return {vkey(VertexKind::Y, m, n), vkey(VertexKind::L, m, n - 1)};
    case EdgeKind::Right:
        break;
    }
    return {vkey(VertexKind::Y, m, n), vkey(VertexKind::L, m + 1, n - 1)};
}

std::array<VKey, 6> ring_vertices(int m, int n) {
    return {vkey(VertexKind::L, m, n),     vkey(VertexKind::Y, m, n + 1), vkey(VertexKind::L, m + 1, n - 1),
            vkey(VertexKind::Y, m, n),     vkey(VertexKind::L, m, n - 1), vkey(VertexKind::Y, m - 1, n + 1)};
}

std::array<EKey, 6> ring_edges(int m, int n) {
    return {ekey(EdgeKind::Left, m, n + 1), ekey(EdgeKind::V, m, n + 1),     ekey(EdgeKind::Right, m, n),
            ekey(EdgeKind::Left, m, n),     ekey(EdgeKind::V, m - 1, n + 1), ekey(EdgeKind::Right, m - 1, n + 1)};
}

std::array<EKey, 6> leg_edges(int m, int n) {
    return {ekey(EdgeKind::V, m - 1, n + 2), ekey(EdgeKind::Right, m, n + 1), ekey(EdgeKind::Left, m + 1, n),
            ekey(EdgeKind::V, m, n),         ekey(EdgeKind::Right, m - 1, n), ekey(EdgeKind::Left, m - 1, n + 1)};
}

// Cells of the hexagons whose ring contains the vertex.
std::array<std::array<int, 2>, 3> vertex_cells(const VKey& v) {
    const int m = v[1], n = v[2];
    if (v[0] == static_cast<int>(VertexKind::Y))
        return {{{m, n}, {m, n - 1}, {m + 1, n - 1}}};
    return {{{m, n}, {m - 1, n + 1}, {m, n + 1}}};
}

std::array<double, 2> position(const VKey& v) {
    const double x = kSqrt3 * v[1] + 0.5 * kSqrt3 * v[2];
    const double y = 1.5 * v[2] + (v[0] == static_cast<int>(VertexKind::Y) ? -1.0 : 1.0);
    return {x, y};
}

int floor_mod(int a, int n) { return ((a % n) + n) % n; }

// Row-major order: n, then m, then kind.
bool row_major_less(const std::array<int, 3>& a, const std::array<int, 3>& b) {
    return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]);
}

} // namespace

std::array<int, 2> HoneycombLattice::wrap(int m, int n) const {
    if (topology == Topology::Torus) return {floor_mod(m, Lx), floor_mod(n, Ly)};
    return {m, n};
}

int HoneycombLattice::vertex_at(VertexKind k, int m, int n) const {
    auto w = wrap(m, n);
    auto it = vertex_lookup_.find(vkey(k, w[0], w[1]));
    return it == vertex_lookup_.end() ? -1 : it->second;
}

int HoneycombLattice::edge_at(EdgeKind k, int m, int n) const {
    auto w = wrap(m, n);
    auto it = edge_lookup_.find(ekey(k, w[0], w[1]));
    return it == edge_lookup_.end() ? -1 : it->second;
}

int HoneycombLattice::plaquette_at(int m, int n) const {
    auto w = wrap(m, n);
    auto it = plaquette_lookup_.find(w);
    return it == plaquette_lookup_.end() ? -1 : it->second;
}

void HoneycombLattice::index() {
    vertex_lookup_.clear();
    edge_lookup_.clear();
    plaquette_lookup_.clear();
    for (int i = 0; i < num_vertices(); ++i)
        vertex_lookup_[vkey(vertices[i].kind, vertices[i].m, vertices[i].n)] = i;
    for (int i = 0; i < num_edges(); ++i)
        edge_lookup_[ekey(edges[i].kind, edges[i].m, edges[i].n)] = i;
    for (int i = 0; i < num_plaquettes(); ++i)
        plaquette_lookup_[{plaquettes[i].m, plaquettes[i].n}] = i;
}

int HoneycombLattice::other_end(int edge, int vertex) const {
    const auto& e = edges[edge];
    if (e.lower == vertex) return e.upper;
    if (e.upper == vertex) return e.lower;
    throw StructuralError("edge " + std::to_string(edge) + " does not touch vertex " + std::to_string(vertex));
}

std::vector<int> HoneycombLattice::neighbors(int vertex) const {
    std::vector<int> out;
    for (int e : vertices[vertex].edges) {
        int w = other_end(e, vertex);
        if (w >= 0 && w != vertex) out.push_back(w);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<int> HoneycombLattice::plaquettes_of_vertex(int vertex) const {
    std::vector<int> out;
    const auto& v = vertices[vertex];
    for (auto c : vertex_cells(vkey(v.kind, v.m, v.n))) {
        int p = plaquette_at(c[0], c[1]);
        if (p >= 0) out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool HoneycombLattice::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::array<double, 2> HoneycombLattice::displacement(int a, int b) const {
    double dx = vertices[b].x - vertices[a].x;
    double dy = vertices[b].y - vertices[a].y;
    if (topology != Topology::Torus) return {dx, dy};
    const double tx1 = kSqrt3 * Lx, tx2 = 0.5 * kSqrt3 * Ly, ty2 = 1.5 * Ly;
    std::array<double, 2> best{dx, dy};
    double best_norm = dx * dx + dy * dy;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            double x = dx + i * tx1 + j * tx2, y = dy + j * ty2;
            double nrm = x * x + y * y;
            if (nrm < best_norm - 1e-12) {
                best_norm = nrm;
                best = {x, y};
            }
        }
    return best;
}

namespace {

// Assembles a lattice from vertex keys (already wrapped) and plaquette
// cells. Edges touching a vertex are created; status_of decides the status
// of edges with a missing endpoint.
HoneycombLattice assemble(int Lx, int Ly, Topology topo, std::vector<VKey> vkeys,
                          const std::vector<std::array<int, 2>>& cells,
                          const std::function<EdgeStatus(const EKey&)>& status_of) {
    HoneycombLattice lat;
    lat.Lx = Lx;
    lat.Ly = Ly;
    lat.topology = topo;
    auto wrapk = [&](std::array<int, 3> k) {
        if (topo == Topology::Torus) {
            k[1] = floor_mod(k[1], Lx);
            k[2] = floor_mod(k[2], Ly);
        }
        return k;
    };

    std::sort(vkeys.begin(), vkeys.end(), row_major_less);
    vkeys.erase(std::unique(vkeys.begin(), vkeys.end()), vkeys.end());
    std::map<VKey, int> vid;
    for (std::size_t i = 0; i < vkeys.size(); ++i) vid[vkeys[i]] = static_cast<int>(i);

    std::vector<EKey> ekeys;
    for (const auto& v : vkeys)
        for (const auto& e : vertex_edges(v)) ekeys.push_back(wrapk(e));
    std::sort(ekeys.begin(), ekeys.end(), row_major_less);
    ekeys.erase(std::unique(ekeys.begin(), ekeys.end()), ekeys.end());
    std::map<EKey, int> eid;
    for (std::size_t i = 0; i < ekeys.size(); ++i) eid[ekeys[i]] = static_cast<int>(i);

    auto find_v = [&](const VKey& k) {
        auto it = vid.find(wrapk(k));
        return it == vid.end() ? -1 : it->second;
    };

    for (const auto& k : vkeys) {
        LatticeVertex v;
        v.kind = static_cast<VertexKind>(k[0]);
        v.m = k[1];
        v.n = k[2];
        auto es = vertex_edges(k);
        for (int j = 0; j < 3; ++j) v.edges[j] = eid.at(wrapk(es[j]));
        auto pos = position(k);
        v.x = pos[0];
        v.y = pos[1];
        lat.vertices.push_back(v);
    }
    for (const auto& k : ekeys) {
        LatticeEdge e;
        e.kind = static_cast<EdgeKind>(k[0]);
        e.m = k[1];
        e.n = k[2];
        auto ends = edge_ends(k);
        e.lower = find_v(ends[0]);
        e.upper = find_v(ends[1]);
        e.status = (e.lower >= 0 && e.upper >= 0) ? EdgeStatus::Internal : status_of(k);
        lat.edges.push_back(e);
    }
    for (const auto& c : cells) {
        LatticePlaquette p;
        auto w = topo == Topology::Torus ? std::array<int, 2>{floor_mod(c[0], Lx), floor_mod(c[1], Ly)} : c;
        p.m = w[0];
        p.n = w[1];
        auto rv = ring_vertices(c[0], c[1]);
        auto re = ring_edges(c[0], c[1]);
        auto le = leg_edges(c[0], c[1]);
        for (int k = 0; k < 6; ++k) {
            p.vertices[k] = find_v(rv[k]);
            p.ring[k] = eid.at(wrapk(re[k]));
            p.legs[k] = eid.at(wrapk(le[k]));
        }
        std::set<int> sv(p.vertices.begin(), p.vertices.end());
        std::set<int> sr(p.ring.begin(), p.ring.end());
        bool leg_on_ring = false;
        for (int l : p.legs) leg_on_ring |= sr.count(l) > 0;
        p.degenerate = sv.size() != 6 || sr.size() != 6 || leg_on_ring;
        lat.plaquettes.push_back(p);
    }
    for (const auto& p : lat.plaquettes)
        if (p.degenerate) {
            lat.flags.push_back("degenerate wrap");
            break;
        }
    lat.index();
    return lat;
}

} // namespace

HoneycombLattice build_torus(int Lx, int Ly) {
    if (Lx < 1 || Ly < 1) throw StructuralError("torus dimensions must be at least 1");
    // Keys hold 128 bits; even a rank-2 category cannot fit more edges.
    const long long nedges = 3LL * Lx * Ly;
    if (nedges > 128)
        throw CapExceededError("torus " + std::to_string(Lx) + "x" + std::to_string(Ly) + " has " +
                               std::to_string(nedges) + " edges; configuration keys hold at most 128 bits");
    std::vector<VKey> vk;
    std::vector<std::array<int, 2>> cells;
    for (int n = 0; n < Ly; ++n)
        for (int m = 0; m < Lx; ++m) {
            vk.push_back(vkey(VertexKind::Y, m, n));
            vk.push_back(vkey(VertexKind::L, m, n));
            cells.push_back({m, n});
        }
    return assemble(Lx, Ly, Topology::Torus, vk, cells, [](const EKey&) { return EdgeStatus::Internal; });
}

HoneycombLattice build_open_patch(int Lx, int Ly) {
    if (Lx < 1 || Ly < 1) throw StructuralError("patch dimensions must be at least 1");
    std::vector<VKey> vk;
    std::vector<std::array<int, 2>> cells;
    for (int n = 0; n < Ly; ++n)
        for (int m = 0; m < Lx; ++m) {
            for (const auto& v : ring_vertices(m, n)) vk.push_back(v);
            cells.push_back({m, n});
        }
    return assemble(Lx, Ly, Topology::Open, vk, cells, [](const EKey&) { return EdgeStatus::Pinned; });
}

HoneycombLattice HoneycombLattice::induced(const std::vector<int>& vertex_subset, EdgeStatus cut) const {
    std::set<int> keep(vertex_subset.begin(), vertex_subset.end());
    std::vector<VKey> vk;
    for (int v : keep) {
        if (v < 0 || v >= num_vertices()) throw StructuralError("vertex id out of range: " + std::to_string(v));
        vk.push_back(vkey(vertices[v].kind, vertices[v].m, vertices[v].n));
    }
    std::vector<std::array<int, 2>> cells;
    for (const auto& p : plaquettes) {
        bool inside = true;
        for (int v : p.vertices) inside &= keep.count(v) > 0;
        if (inside) cells.push_back({p.m, p.n});
    }
    auto status_of = [&](const EKey& k) {
        int e = edge_at(static_cast<EdgeKind>(k[0]), k[1], k[2]);
        if (e >= 0 && edges[e].status == EdgeStatus::Pinned) return EdgeStatus::Pinned;
        return cut;
    };
    HoneycombLattice sub = assemble(Lx, Ly, topology, vk, cells, status_of);
    for (const auto& v : sub.vertices) sub.parent_vertex.push_back(vertex_at(v.kind, v.m, v.n));
    for (const auto& e : sub.edges) sub.parent_edge.push_back(edge_at(e.kind, e.m, e.n));
    for (const auto& p : sub.plaquettes) sub.parent_plaquette.push_back(plaquette_at(p.m, p.n));
    return sub;
}

namespace {
const char* kind_name(VertexKind k) { return k == VertexKind::Y ? "Y" : "L"; }
const char* kind_name(EdgeKind k) {
    switch (k) {
    case EdgeKind::V: return "v";
    case EdgeKind::Left: return "l";
    case EdgeKind::Right: break;
    }
    return "r";
}
const char* status_name(EdgeStatus s) {
    switch (s) {
    case EdgeStatus::Internal: return "internal";
    case EdgeStatus::Pinned: return "pinned";
    case EdgeStatus::Free: break;
    }
    return "free";
}
} // namespace

nlohmann::json HoneycombLattice::to_json() const {
    using nlohmann::json;
    json j;
    j["Lx"] = Lx;
    j["Ly"] = Ly;
    j["topology"] = topology == Topology::Torus ? "torus" : "open";
    j["flags"] = flags;
    json vs = json::array();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& v = vertices[i];
        vs.push_back({{"id", i}, {"kind", kind_name(v.kind)}, {"cell", {v.m, v.n}}, {"edges", v.edges},
                      {"pos", {v.x, v.y}}});
    }
    json es = json::array();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        es.push_back({{"id", i}, {"kind", kind_name(e.kind)}, {"cell", {e.m, e.n}}, {"lower", e.lower},
                      {"upper", e.upper}, {"status", status_name(e.status)}});
    }
    json ps = json::array();
    for (std::size_t i = 0; i < plaquettes.size(); ++i) {
        const auto& p = plaquettes[i];
        ps.push_back({{"id", i}, {"cell", {p.m, p.n}}, {"vertices", p.vertices}, {"ring", p.ring},
                      {"legs", p.legs}, {"degenerate", p.degenerate}});
    }
    j["vertices"] = vs;
    j["edges"] = es;
    j["plaquettes"] = ps;
    return j;
}

// ---------------------------------------------------------------------------

StringNetBasis::StringNetBasis(int num_edges, int num_vertices, int label_bits, std::vector<int> mult_bits)
    : num_edges_(num_edges), num_vertices_(num_vertices), label_bits_(label_bits), mult_bits_(std::move(mult_bits)) {
    if (static_cast<int>(mult_bits_.size()) != num_vertices_) mult_bits_.assign(num_vertices_, 0);
    int mult_total = std::accumulate(mult_bits_.begin(), mult_bits_.end(), 0);
    total_bits_ = num_edges_ * label_bits_ + mult_total;
    if (total_bits_ > 128)
        throw CapExceededError("configuration needs " + std::to_string(total_bits_) + " bits; keys hold 128");
    mult_shift_.resize(num_vertices_);
    int shift = mult_total;
    for (int v = 0; v < num_vertices_; ++v) {
        shift -= mult_bits_[v];
        mult_shift_[v] = shift;
    }
}

int StringNetBasis::label(ConfigKey k, int edge) const {
    const ConfigKey mask = (ConfigKey(1) << label_bits_) - 1;
    return static_cast<int>((k >> edge_shift(edge)) & mask);
}

int StringNetBasis::mult(ConfigKey k, int vertex) const {
    if (mult_bits_[vertex] == 0) return 0;
    const ConfigKey mask = (ConfigKey(1) << mult_bits_[vertex]) - 1;
    return static_cast<int>((k >> mult_shift_[vertex]) & mask);
}

ConfigKey StringNetBasis::with_label(ConfigKey k, int edge, int label) const {
    const int s = edge_shift(edge);
    const ConfigKey mask = ((ConfigKey(1) << label_bits_) - 1) << s;
    return (k & ~mask) | (ConfigKey(static_cast<unsigned>(label)) << s);
}

ConfigKey StringNetBasis::with_mult(ConfigKey k, int vertex, int mult) const {
    if (mult_bits_[vertex] == 0) return k;
    const int s = mult_shift_[vertex];
    const ConfigKey mask = ((ConfigKey(1) << mult_bits_[vertex]) - 1) << s;
    return (k & ~mask) | (ConfigKey(static_cast<unsigned>(mult)) << s);
}

std::vector<int> StringNetBasis::labels(std::size_t i) const {
    std::vector<int> out(num_edges_);
    for (int e = 0; e < num_edges_; ++e) out[e] = label(keys_[i], e);
    return out;
}

ConfigKey StringNetBasis::encode(const std::vector<int>& labels, const std::vector<int>& mults) const {
    ConfigKey k = 0;
    for (int e = 0; e < num_edges_; ++e) k = with_label(k, e, labels[e]);
    for (std::size_t v = 0; v < mults.size(); ++v) k = with_mult(k, static_cast<int>(v), mults[v]);
    return k;
}

std::int64_t StringNetBasis::index_of(ConfigKey k) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
    if (it == keys_.end() || *it != k) return -1;
    return it - keys_.begin();
}

std::uint64_t StringNetBasis::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(num_edges_));
    mix(static_cast<std::uint64_t>(num_vertices_));
    mix(static_cast<std::uint64_t>(label_bits_));
    for (int b : mult_bits_) mix(static_cast<std::uint64_t>(b));
    for (ConfigKey k : keys_) {
        mix(static_cast<std::uint64_t>(k));
        mix(static_cast<std::uint64_t>(k >> 64));
    }
    return h;
}

namespace {

int bits_for(int count) {
    int b = 0;
    while ((1 << b) < count) ++b;
    return b;
}

int max_multiplicity(const FusionCategory& cat) {
    int mx = 1;
    for (int n : cat.fusion) mx = std::max(mx, n);
    return mx;
}

// N for a vertex given the labels on its three slots.
int vertex_channels(const FusionCategory& cat, VertexKind k, int s0, int s1, int s2) {
    // Y: bottom s0 splits into (s1, s2). L: (s0, s1) fuse into s2.
    return k == VertexKind::Y ? cat.N(s1, s2, s0) : cat.N(s0, s1, s2);
}

} // namespace

bool vertex_satisfied(const FusionCategory& cat, const HoneycombLattice& lat, int vertex,
                      const std::vector<int>& labels) {
    const auto& v = lat.vertices[vertex];
    for (int j = 0; j < 3; ++j)
        if (lat.edges[v.edges[j]].status == EdgeStatus::Pinned && labels[v.edges[j]] != 0) return false;
    return vertex_channels(cat, v.kind, labels[v.edges[0]], labels[v.edges[1]], labels[v.edges[2]]) > 0;
}

double estimate_basis_size(const FusionCategory& cat, const HoneycombLattice& lat) {
    const int r = cat.rank();
    double logsize = 0.0;
    for (const auto& e : lat.edges)
        if (e.status != EdgeStatus::Pinned) logsize += std::log(static_cast<double>(r));
    for (const auto& v : lat.vertices) {
        double total = 0.0, admissible = 0.0;
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b)
                for (int c = 0; c < r; ++c) {
                    int s[3] = {a, b, c};
                    bool allowed = true;
                    for (int j = 0; j < 3; ++j)
                        if (lat.edges[v.edges[j]].status == EdgeStatus::Pinned && s[j] != 0) allowed = false;
                    if (!allowed) continue;
                    total += 1.0;
                    admissible += vertex_channels(cat, v.kind, a, b, c);
                }
        if (admissible == 0.0) return 0.0;
        logsize += std::log(admissible / total);
    }
    return std::exp(logsize);
}

StringNetBasis enumerate_basis(const FusionCategory& cat, const HoneycombLattice& lat, double cap) {
    const double est = estimate_basis_size(cat, lat);
    if (est > cap) {
        std::ostringstream os;
        os << "estimated basis size " << est << " exceeds cap " << cap;
        throw CapExceededError(os.str());
    }
    const int nE = lat.num_edges(), nV = lat.num_vertices(), r = cat.rank();
    const int mbits = bits_for(max_multiplicity(cat));
    StringNetBasis basis(nE, nV, std::max(1, bits_for(r)), std::vector<int>(nV, mbits));

    // A vertex is checked once its last edge (in id order) is set.
    std::vector<std::vector<int>> closes(nE);
    for (int v = 0; v < nV; ++v) {
        const auto& ed = lat.vertices[v].edges;
        closes[*std::max_element(ed.begin(), ed.end())].push_back(v);
    }

    std::vector<int> labels(nE, 0);
    std::vector<int> mult_range(nV, 1);
    const std::size_t limit = static_cast<std::size_t>(cap);

    std::vector<int> mults(nV, 0);
    std::function<void(int)> rec_mult = [&](int v) {
        if (v == nV) {
            if (basis.size() >= limit) {
                std::ostringstream os;
                os << "basis size exceeds cap " << cap << " (estimate " << est << ")";
                throw CapExceededError(os.str());
            }
            basis.push_back(basis.encode(labels, mults));
            return;
        }
        for (int u = 0; u < mult_range[v]; ++u) {
            mults[v] = u;
            rec_mult(v + 1);
        }
        mults[v] = 0;
    };

    std::function<void(int)> rec = [&](int e) {
        if (e == nE) {
            rec_mult(0);
            return;
        }
        const int hi = lat.edges[e].status == EdgeStatus::Pinned ? 1 : r;
        for (int a = 0; a < hi; ++a) {
            labels[e] = a;
            bool ok = true;
            for (int v : closes[e]) {
                const auto& vx = lat.vertices[v];
                int n = vertex_channels(cat, vx.kind, labels[vx.edges[0]], labels[vx.edges[1]], labels[vx.edges[2]]);
                if (n == 0) {
                    ok = false;
                    break;
                }
                mult_range[v] = n;
            }
            if (ok) rec(e + 1);
        }
        labels[e] = 0;
    };
    rec(0);
    return basis;
}

// ---------------------------------------------------------------------------

bool Region::contains(int v) const { return std::binary_search(vertices.begin(), vertices.end(), v); }

Region make_region(const HoneycombLattice& lat, std::vector<int> vertices, std::string role) {
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    for (int v : vertices)
        if (v < 0 || v >= lat.num_vertices()) throw StructuralError("region vertex out of range: " + std::to_string(v));
    Region r;
    r.role = std::move(role);
    r.vertices = std::move(vertices);
    std::set<int> es;
    for (int v : r.vertices)
        for (int e : lat.vertices[v].edges)
            if (lat.edges[e].status != EdgeStatus::Pinned) es.insert(e);
    r.edges.assign(es.begin(), es.end());
    return r;
}

Region region_from_plaquettes(const HoneycombLattice& lat, const std::vector<int>& plaquettes, std::string role) {
    std::vector<int> vs;
    for (int p : plaquettes) {
        if (p < 0 || p >= lat.num_plaquettes()) throw StructuralError("plaquette id out of range: " + std::to_string(p));
        vs.insert(vs.end(), lat.plaquettes[p].vertices.begin(), lat.plaquettes[p].vertices.end());
    }
    return make_region(lat, vs, std::move(role));
}

Region region_complement(const HoneycombLattice& lat, const Region& r) {
    std::vector<int> vs;
    for (int v = 0; v < lat.num_vertices(); ++v)
        if (!r.contains(v)) vs.push_back(v);
    return make_region(lat, vs, r.role);
}

Region region_union(const HoneycombLattice& lat, const Region& a, const Region& b, std::string role) {
    std::vector<int> vs = a.vertices;
    vs.insert(vs.end(), b.vertices.begin(), b.vertices.end());
    return make_region(lat, vs, std::move(role));
}

int boundary_size(const HoneycombLattice& lat, const Region& r) {
    int count = 0;
    for (int e : r.edges) {
        const auto& ed = lat.edges[e];
        bool lo = ed.lower >= 0 && r.contains(ed.lower);
        bool up = ed.upper >= 0 && r.contains(ed.upper);
        if (lo != up) ++count;
    }
    return count;
}

bool regions_disjoint(const Region& a, const Region& b) {
    std::vector<int> both;
    std::set_intersection(a.vertices.begin(), a.vertices.end(), b.vertices.begin(), b.vertices.end(),
                          std::back_inserter(both));
    return both.empty();
}

int num_components(const HoneycombLattice& lat, const Region& r) {
    std::set<int> left(r.vertices.begin(), r.vertices.end());
    int comps = 0;
    while (!left.empty()) {
        ++comps;
        std::queue<int> q;
        q.push(*left.begin());
        left.erase(left.begin());
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (int w : lat.neighbors(v))
                if (left.erase(w)) q.push(w);
        }
    }
    return comps;
}

std::string to_string(AxiomKind k) {
    switch (k) {
    case AxiomKind::A0Bulk: return "A0-bulk";
    case AxiomKind::A1Bulk: return "A1-bulk";
    case AxiomKind::A0Boundary: return "A0-boundary";
    case AxiomKind::A1Boundary: break;
    }
    return "A1-boundary";
}

namespace {

bool is_bulk(AxiomKind k) { return k == AxiomKind::A0Bulk || k == AxiomKind::A1Bulk; }
bool is_a1(AxiomKind k) { return k == AxiomKind::A1Bulk || k == AxiomKind::A1Boundary; }

bool has_pinned_leg(const HoneycombLattice& lat, int v) {
    for (int e : lat.vertices[v].edges)
        if (lat.edges[e].status != EdgeStatus::Internal) return true;
    return false;
}

struct RingGeometry {
    std::vector<int> C;
    std::vector<int> ring;  // B u D ordered by angle around the anchor
};

// Builds C and the ring in unwrapped cell coordinates and maps them into the
// lattice; throws when the image is not a faithful copy.
RingGeometry ring_geometry(const HoneycombLattice& lat, AxiomKind kind, int anchor, AxiomWidths w) {
    if (anchor < 0 || anchor >= lat.num_vertices()) throw StructuralError("anchor out of range");
    if (w.c < 1 || w.b < 1) throw StructuralError("axiom widths must be at least 1");
    const bool bulk = is_bulk(kind);
    const auto& av = lat.vertices[anchor];
    const VKey a = vkey(av.kind, av.m, av.n);

    auto present = [&](const VKey& k) { return lat.vertex_at(static_cast<VertexKind>(k[0]), k[1], k[2]); };
    auto cell_present = [&](const std::array<int, 2>& c) { return lat.plaquette_at(c[0], c[1]) >= 0; };
    auto neighbors_of = [&](const VKey& k) {
        std::vector<VKey> out;
        for (const auto& e : vertex_edges(k)) {
            auto ends = edge_ends(e);
            out.push_back(ends[0] == k ? ends[1] : ends[0]);
        }
        return out;
    };

    // C: graph ball of radius c-1, kept inside the lattice.
    std::set<VKey> C{a}, frontier{a};
    for (int step = 1; step < w.c; ++step) {
        std::set<VKey> next;
        for (const auto& v : frontier)
            for (const auto& u : neighbors_of(v))
                if (!C.count(u) && present(u) >= 0) next.insert(u);
        C.insert(next.begin(), next.end());
        frontier = next;
    }
    // Plaquette layers.
    std::set<VKey> BC = C;
    for (int layer = 0; layer < w.b; ++layer) {
        std::set<VKey> grown = BC;
        for (const auto& v : BC)
            for (const auto& c : vertex_cells(v)) {
                if (!cell_present(c)) {
                    if (bulk) throw StructuralError("ring around anchor leaves the lattice");
                    continue;
                }
                for (const auto& u : ring_vertices(c[0], c[1])) grown.insert(u);
            }
        BC = grown;
    }

    std::map<int, VKey> image;
    for (const auto& v : BC) {
        int id = present(v);
        if (id < 0) throw StructuralError("placement leaves the lattice");
        if (image.count(id)) throw StructuralError("placement wraps onto itself");
        image[id] = v;
    }
    if (bulk) {
        for (const auto& [id, v] : image)
            if (has_pinned_leg(lat, id)) throw StructuralError("bulk placement touches the boundary");
    } else {
        if (!has_pinned_leg(lat, anchor)) throw StructuralError("boundary placement needs an anchor on the boundary");
    }

    RingGeometry g;
    auto pa = position(a);
    std::vector<std::pair<double, int>> angled;
    for (const auto& [id, v] : image) {
        if (C.count(v)) {
            g.C.push_back(id);
            continue;
        }
        auto p = position(v);
        angled.push_back({std::atan2(p[1] - pa[1], p[0] - pa[0]), id});
    }
    if (angled.empty()) throw StructuralError("empty ring around anchor");
    std::sort(angled.begin(), angled.end());
    if (!bulk && angled.size() > 1) {
        // Start right after the widest angular gap, which faces the boundary.
        std::size_t start = 0;
        double widest = -1.0;
        for (std::size_t i = 0; i < angled.size(); ++i) {
            double prev = angled[(i + angled.size() - 1) % angled.size()].first;
            double gap = angled[i].first - prev;
            if (gap <= 0) gap += 2 * M_PI;
            if (gap > widest) {
                widest = gap;
                start = i;
            }
        }
        std::rotate(angled.begin(), angled.begin() + static_cast<long>(start), angled.end());
    }
    for (const auto& pr : angled) g.ring.push_back(pr.second);
    std::sort(g.C.begin(), g.C.end());
    return g;
}

int split_count(AxiomKind kind, std::size_t n) {
    if (!is_a1(kind)) return 1;
    if (is_bulk(kind)) return n % 2 == 0 ? static_cast<int>(n / 2) : static_cast<int>(n);
    return static_cast<int>(n) - 1;
}

} // namespace

int num_splits(const HoneycombLattice& lat, AxiomKind kind, int anchor, AxiomWidths widths) {
    return split_count(kind, ring_geometry(lat, kind, anchor, widths).ring.size());
}

Partition make_axiom_partition(const HoneycombLattice& lat, AxiomKind kind, int anchor, AxiomWidths widths,
                               int split) {
    RingGeometry g = ring_geometry(lat, kind, anchor, widths);
    const int n = static_cast<int>(g.ring.size());
    const int ns = split_count(kind, g.ring.size());
    if (split < 0 || split >= ns) throw StructuralError("split index out of range");

    Partition p;
    p.kind = kind;
    p.anchor = anchor;
    p.split = split;
    p.C = make_region(lat, g.C, "C");
    if (num_components(lat, p.C) != 1) throw StructuralError("C is not connected");
    if (!is_a1(kind)) {
        p.B = make_region(lat, g.ring, "B");
        if (num_components(lat, p.B) != 1) throw StructuralError("B is not connected");
        return p;
    }
    std::vector<int> b, d;
    if (is_bulk(kind)) {
        for (int i = 0; i < n / 2; ++i) b.push_back(g.ring[(split + i) % n]);
        for (int i = n / 2; i < n; ++i) d.push_back(g.ring[(split + i) % n]);
    } else {
        b.assign(g.ring.begin(), g.ring.begin() + split + 1);
        d.assign(g.ring.begin() + split + 1, g.ring.end());
    }
    p.B = make_region(lat, b, "B");
    p.D = make_region(lat, d, "D");
    if (num_components(lat, p.B) != 1 || num_components(lat, p.D) != 1)
        throw StructuralError("ring arcs are not connected");
    return p;
}

std::vector<Partition> all_placements(const HoneycombLattice& lat, AxiomKind kind, AxiomWidths widths) {
    std::vector<Partition> out;
    for (int v = 0; v < lat.num_vertices(); ++v) {
        int ns = 0;
        try {
            ns = num_splits(lat, kind, v, widths);
        } catch (const StructuralError&) {
            continue;
        }
        for (int s = 0; s < ns; ++s) {
            try {
                out.push_back(make_axiom_partition(lat, kind, v, widths, s));
            } catch (const StructuralError&) {
            }
        }
    }
    return out;
}

nlohmann::json region_to_json(const Region& r) {
    return {{"role", r.role}, {"vertices", r.vertices}, {"edges", r.edges}};
}

nlohmann::json partition_to_json(const Partition& p) {
    nlohmann::json j{{"kind", to_string(p.kind)}, {"anchor", p.anchor}, {"split", p.split},
                     {"B", region_to_json(p.B)}, {"C", region_to_json(p.C)}};
    if (!p.D.empty()) j["D"] = region_to_json(p.D);
    return j;
}

} // namespace snlab
