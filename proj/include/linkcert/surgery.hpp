#ifndef LINKCERT_SURGERY_HPP
#define LINKCERT_SURGERY_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "linkcert/chain.hpp"
#include "linkcert/errors.hpp"
#include "linkcert/triangulation.hpp"

namespace linkcert {

using VertexMap = std::map<VertexId, VertexId>;

/// Simplicial prism (mapping-cylinder) operator for a vertex map phi whose
/// domain and image vertex sets are disjoint. Simplices are taken in the
/// global vertex order, and on an ordered n-simplex [u_0..u_n] the prism is
///   P([u_0..u_n]) = sum_j (-1)^j [u_0..u_j, phi(u_j)..phi(u_n)],
/// which satisfies boundary(P c) = phi(c) - c - P(boundary c) on every
/// chain c; degenerate tuples are dropped.
class PrismOperator {
public:
    explicit PrismOperator(VertexMap phi) : phi_(std::move(phi)) {
        std::set<VertexId> images;
        for (const auto& [v, w] : phi_) {
            require(phi_.find(w) == phi_.end(), "PrismOperator: domain and image vertex sets must be disjoint");
            require(images.insert(w).second, "PrismOperator: vertex map must be injective");
        }
    }

    const VertexMap& vertex_map() const { return phi_; }

    VertexId image(VertexId v) const {
        auto it = phi_.find(v);
        if (it == phi_.end()) throw PreconditionError("PrismOperator: vertex has no image");
        return it->second;
    }

    /// phi_# : push a chain through the vertex map.
    IntegerChain push(const IntegerChain& c) const {
        IntegerChain out(c.dim());
        for (const auto& [tuple, coeff] : c.terms()) {
            std::vector<VertexId> img;
            img.reserve(tuple.size());
            for (VertexId v : tuple) img.push_back(image(v));
            bool degenerate = false;
            {
                auto sorted = img;
                std::sort(sorted.begin(), sorted.end());
                degenerate = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
            }
            if (degenerate) continue;
            out.add(OrientedSimplex(std::move(img)), coeff);
        }
        return out;
    }

    /// The prism chain over c, one dimension up.
    IntegerChain apply(const IntegerChain& c) const {
        IntegerChain out(c.dim() + 1);
        std::vector<VertexId> tuple;
        for (const auto& [verts, coeff] : c.terms()) {
            const std::size_t m = verts.size();
            int sign = 1;
            for (std::size_t j = 0; j < m; ++j) {
                tuple.clear();
                for (std::size_t i = 0; i <= j; ++i) tuple.push_back(verts[i]);
                for (std::size_t i = j; i < m; ++i) tuple.push_back(image(verts[i]));
                auto sorted = tuple;
                std::sort(sorted.begin(), sorted.end());
                if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end())
                    out.add(OrientedSimplex(tuple), sign * coeff);
                sign = -sign;
            }
        }
        return out;
    }

    /// Check boundary(P c) == phi(c) - c - P(boundary c) exactly.
    void verify_homotopy_identity(const IntegerChain& c) const {
        IntegerChain lhs = boundary(apply(c));
        IntegerChain rhs = push(c) - c - apply(boundary(c));
        if (lhs != rhs) throw FalsificationAlert("PrismOperator: homotopy identity violated");
    }

private:
    VertexMap phi_;
};

/// A simplicial isomorphism between a disc inside one sphere and a disc
/// inside another, with its orientation character relative to the hosts.
struct DiscIso {
    std::vector<VertexTuple> source_cells; ///< D_1 cells, in the order surgery will use
    std::vector<VertexTuple> target_cells; ///< phi images, aligned with source_cells
    VertexMap phi;
    int character = 0; ///< -1 orientation-reversing, +1 preserving
};

inline int oriented_disc_character(const IntegerChain&, const std::vector<VertexTuple>&,
                                   const IntegerChain&, const PrismOperator&);

/// Validate a vertex map as a disc isomorphism between subcomplexes of two
/// sphere chains and record its orientation character.
inline DiscIso make_disc_iso(const IntegerChain& host1, std::vector<VertexTuple> source_cells,
                             const IntegerChain& host2, VertexMap phi_map) {
    DiscIso iso;
    iso.phi = std::move(phi_map);
    PrismOperator op(iso.phi);
    iso.character = oriented_disc_character(host1, source_cells, host2, op);
    require(iso.character != 0, "make_disc_iso: vertex map is not a simplicial disc isomorphism");
    for (const auto& cell : source_cells) {
        std::vector<VertexId> img;
        img.reserve(cell.size());
        for (VertexId v : cell) img.push_back(op.image(v));
        std::sort(img.begin(), img.end());
        iso.target_cells.push_back(std::move(img));
    }
    iso.source_cells = std::move(source_cells);
    return iso;
}

/// The mapping cylinder of a disc isomorphism: the prism complex over the
/// (n-1)-skeleton of the source disc. Its top cells are the n-simplices of
/// the prisms over the (n-1)-faces of the disc cells; every vertex lies on
/// the source or target disc, and it meets each host sphere in the
/// corresponding disc's (n-1)-skeleton.
class MappingCylinder {
public:
    MappingCylinder(const std::vector<VertexTuple>& disc_cells, const PrismOperator& phi) : phi_(phi) {
        require(!disc_cells.empty(), "mapping_cylinder: empty disc");
        const std::size_t m = disc_cells.front().size();
        for (const auto& cell : disc_cells) {
            require(cell.size() == m, "mapping_cylinder: mixed cell dimensions");
            for (std::size_t i = 0; i < m; ++i) {
                VertexTuple face;
                for (std::size_t j = 0; j < m; ++j)
                    if (j != i) face.push_back(cell[j]);
                skeleton_.insert(std::move(face));
            }
        }
        for (const auto& f : skeleton_)
            for (const auto& t : prism_support(f)) cells_.insert(t);
    }

    /// Top prism cells (sorted vertex tuples).
    const std::set<VertexTuple>& cells() const { return cells_; }

    /// Top (n-1)-skeleton simplices of the source disc.
    const std::set<VertexTuple>& skeleton() const { return skeleton_; }

    /// Closure of the prism over one skeleton simplex: every face of every
    /// prism cell over it. Satisfies crossed(a) ∩ crossed(b) = crossed(a ∩ b)
    /// (empty when a and b are disjoint).
    std::set<VertexTuple> crossed(const VertexTuple& simplex) const {
        std::set<VertexTuple> out;
        for (const auto& t : prism_support(simplex)) {
            const std::size_t m = t.size();
            for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
                VertexTuple f;
                for (std::size_t i = 0; i < m; ++i)
                    if (mask & (1u << i)) f.push_back(t[i]);
                out.insert(std::move(f));
            }
        }
        return out;
    }

private:
    std::vector<VertexTuple> prism_support(const VertexTuple& sorted) const {
        std::vector<VertexTuple> out;
        const std::size_t m = sorted.size();
        for (std::size_t j = 0; j < m; ++j) {
            VertexTuple t;
            for (std::size_t i = 0; i <= j; ++i) t.push_back(sorted[i]);
            for (std::size_t i = j; i < m; ++i) t.push_back(phi_.image(sorted[i]));
            std::sort(t.begin(), t.end());
            if (std::adjacent_find(t.begin(), t.end()) == t.end()) out.push_back(std::move(t));
        }
        return out;
    }

    PrismOperator phi_;
    std::set<VertexTuple> skeleton_;
    std::set<VertexTuple> cells_;
};

inline MappingCylinder mapping_cylinder(const SphereWitness& s1, const SphereWitness& s2,
                                        const DiscIso& iso) {
    {
        auto v1 = s1.chain.vertex_set();
        auto v2 = s2.chain.vertex_set();
        for (VertexId v : v1)
            require(v2.find(v) == v2.end(), "mapping_cylinder: host spheres must be vertex-disjoint");
    }
    for (const auto& cell : iso.source_cells)
        require(s1.chain.coefficient(cell) != 0, "mapping_cylinder: source disc not inside its sphere");
    for (const auto& cell : iso.target_cells)
        require(s2.chain.coefficient(cell) != 0, "mapping_cylinder: target disc not inside its sphere");
    return MappingCylinder(iso.source_cells, PrismOperator(iso.phi));
}

/// Orientation character of phi as a map of oriented discs: for every disc
/// cell with coefficient e in host1, the image cell must appear in host2
/// with coefficient e * character for one uniform character in {+1, -1}.
/// Returns 0 when phi is not a cell-respecting map or the character is
/// mixed.
inline int oriented_disc_character(const IntegerChain& host1, const std::vector<VertexTuple>& disc_cells,
                                   const IntegerChain& host2, const PrismOperator& phi) {
    int character = 0;
    for (const auto& cell : disc_cells) {
        long long e1 = host1.coefficient(cell);
        if (e1 == 0) return 0;
        std::vector<VertexId> img;
        img.reserve(cell.size());
        for (VertexId v : cell) img.push_back(phi.image(v));
        int parity = sort_parity(img);
        long long e2 = host2.coefficient(img);
        if (e2 == 0) return 0;
        long long lhs = e1 * parity; // phi_#(e1 * cell) = lhs * [sorted image]
        int c = (lhs == -e2) ? -1 : (lhs == e2 ? 1 : 0);
        if (c == 0) return 0;
        if (character == 0) character = c;
        else if (character != c) return 0;
    }
    return character;
}

/// The family of spheres produced by pushing one sphere onto another across
/// an orientation-reversing isomorphism of embedded discs. With D1 the
/// restriction of s1 to the disc cells (coefficients e_i) and D2 = -phi(D1)
/// the matching restriction of s2:
///   P_i = -e_i * (cell_i + P(boundary cell_i) - phi(cell_i)),  i = 1..m
///   P_0 = (D1 - s1) + (D2 - s2) + P(boundary D1)
/// Every member is a sphere, boundary(P_i) = 0, and
///   s1 + s2 + P_0 + P_1 + ... + P_m = 0
/// exactly; all three facts are verified before returning.
struct PrismFamily {
    SphereWitness complement;          ///< P_0
    std::vector<SphereWitness> prisms; ///< P_1..P_m, in disc cell order
    IntegerChain d1, d2;               ///< signed disc restrictions
    PrismOperator phi;                 ///< the vertex map used

    /// Sum of prisms over a contiguous run of disc cells [from, to]; the
    /// run bounds are 1-based to match the P_i numbering. The result is
    /// certified as a sphere (a contiguous run of a traced disc is again a
    /// disc, so its prism boundary is again a sphere).
    SphereWitness prism_run(std::size_t from, std::size_t to) const {
        require(from >= 1 && from <= to && to <= prisms.size(), "prism_run: bad range");
        IntegerChain sum(prisms[from - 1].chain.dim());
        json parts = json::array();
        for (std::size_t i = from; i <= to; ++i) {
            sum += prisms[i - 1].chain;
            parts.push_back(i);
        }
        SphereWitness w;
        w.chain = std::move(sum);
        w.transcript = json::array();
        w.log(json{{"step", "prism_run"}, {"members", parts}});
        w.certify("prism_run");
        return w;
    }
};

inline PrismFamily prism_spheres(const SphereWitness& s1, const std::vector<VertexTuple>& disc_cells,
                                 const SphereWitness& s2, const VertexMap& phi_map) {
    require(!disc_cells.empty(), "prism_spheres: empty disc");
    require(s1.dim() == s2.dim(), "prism_spheres: dimension mismatch");
    {
        auto v1 = s1.chain.vertex_set();
        auto v2 = s2.chain.vertex_set();
        for (VertexId v : v1)
            require(v2.find(v) == v2.end(), "prism_spheres: host spheres must be vertex-disjoint");
    }
    PrismOperator phi(phi_map);

    int character = oriented_disc_character(s1.chain, disc_cells, s2.chain, phi);
    if (character != -1)
        throw PreconditionError("prism_spheres: the disc map must be orientation-reversing");

    IntegerChain d1(s1.dim()), d2(s2.dim());
    for (const auto& cell : disc_cells) d1.add_sorted(cell, s1.chain.coefficient(cell));
    d2 = -phi.push(d1);

    PrismFamily fam{SphereWitness{IntegerChain(s1.dim()), json::array()}, {}, d1, d2, phi};
    for (const auto& cell : disc_cells) {
        long long e = s1.chain.coefficient(cell);
        IntegerChain delta(s1.dim());
        delta.add_sorted(cell, 1);
        IntegerChain p = -(delta + phi.apply(boundary(delta)) - phi.push(delta)).scaled(e);
        SphereWitness w;
        w.chain = std::move(p);
        w.log(json{{"step", "prism_sphere"}, {"cell", cell}});
        w.certify("prism_spheres: P_i");
        if (!boundary(w.chain).empty()) throw FalsificationAlert("prism_spheres: P_i is not a cycle");
        fam.prisms.push_back(std::move(w));
    }
    {
        IntegerChain p0 = (d1 - s1.chain) + (d2 - s2.chain) + phi.apply(boundary(d1));
        fam.complement.chain = std::move(p0);
        fam.complement.log(json{{"step", "prism_complement"}, {"disc_cells", disc_cells.size()}});
        fam.complement.certify("prism_spheres: P_0");
        if (!boundary(fam.complement.chain).empty())
            throw FalsificationAlert("prism_spheres: P_0 is not a cycle");
    }
    // exact decomposition: s1 + s2 + P_0 + sum_i P_i = 0
    IntegerChain total = s1.chain + s2.chain + fam.complement.chain;
    for (const auto& p : fam.prisms) total += p.chain;
    if (!total.empty()) throw FalsificationAlert("prism_spheres: decomposition identity violated");

    // support intersections: P_i meets S_1 exactly in its disc cell and S_2
    // in the image cell; P_0 meets S_j in the closure of the complement
    for (std::size_t i = 0; i < fam.prisms.size(); ++i) {
        auto with_s1 = fam.prisms[i].chain.support_intersection(s1.chain);
        auto with_s2 = fam.prisms[i].chain.support_intersection(s2.chain);
        std::vector<VertexId> img;
        for (VertexId v : disc_cells[i]) img.push_back(phi.image(v));
        std::sort(img.begin(), img.end());
        if (with_s1 != std::set<VertexTuple>{disc_cells[i]} || with_s2 != std::set<VertexTuple>{img})
            throw FalsificationAlert("prism_spheres: P_i support intersection law violated");
    }
    {
        std::set<VertexTuple> want1, want2;
        std::set<VertexTuple> d1_cells(disc_cells.begin(), disc_cells.end());
        for (const auto& [t, c] : s1.chain.terms())
            if (!d1_cells.count(t)) want1.insert(t);
        for (const auto& [t, c] : s2.chain.terms())
            if (fam.d2.coefficient(t) == 0) want2.insert(t);
        if (fam.complement.chain.support_intersection(s1.chain) != want1 ||
            fam.complement.chain.support_intersection(s2.chain) != want2)
            throw FalsificationAlert("prism_spheres: P_0 support intersection law violated");
    }
    return fam;
}

/// Convenience overload taking a validated DiscIso; refuses a preserving map.
inline PrismFamily prism_spheres(const SphereWitness& s1, const SphereWitness& s2, const DiscIso& iso) {
    require(iso.character == -1, "prism_spheres: the disc isomorphism must be orientation-reversing");
    return prism_spheres(s1, iso.source_cells, s2, iso.phi);
}

/// Add two sphere chains whose supports overlap in cells that cancel
/// exactly (the shared discs carry opposite orientations); the sum is the
/// connected sum and is certified as a sphere.
inline SphereWitness connect_sum(const SphereWitness& a, const SphereWitness& b) {
    auto shared = a.chain.support_intersection(b.chain);
    require(!shared.empty(), "connect_sum: the spheres share no cells");
    for (const auto& cell : shared)
        if (a.chain.coefficient(cell) != -b.chain.coefficient(cell))
            throw PreconditionError("connect_sum: shared cells are not oppositely oriented");
    SphereWitness w;
    w.chain = a.chain + b.chain;
    w.transcript = json::array();
    for (const auto& t : a.transcript) w.transcript.push_back(t);
    w.log(json{{"step", "connect_sum"}, {"shared_cells", shared.size()}});
    w.certify("connect_sum");
    return w;
}

/// An orientation-reversing isomorphism between two single top cells, given
/// the host coefficients: the positional map between the sorted tuples,
/// with the last two targets swapped when the characters call for it.
inline VertexMap reversing_cell_iso(const VertexTuple& from, long long e_from, const VertexTuple& to,
                                    long long e_to) {
    require(from.size() == to.size() && from.size() >= 2, "reversing_cell_iso: size mismatch");
    require((e_from == 1 || e_from == -1) && (e_to == 1 || e_to == -1),
            "reversing_cell_iso: hosts must have unit coefficients");
    std::vector<VertexId> target = to;
    // positional map has character +1; the swap makes it -1; we need
    // e_from * character == -e_to
    if (e_from == e_to) std::swap(target[target.size() - 1], target[target.size() - 2]);
    VertexMap phi;
    for (std::size_t i = 0; i < from.size(); ++i) phi[from[i]] = target[i];
    return phi;
}

/// Join pairwise-disjoint spheres to a hub sphere with prism tubes: the
/// i-th base sphere is attached at its first cell delta_i to the i-th cell
/// of the hub. The result meets base i exactly in delta_i with the
/// opposite orientation, so a later chain addition performs the connected
/// sum. The hub must have at least as many cells as there are bases.
struct ConnectingSphere {
    SphereWitness sphere;
    std::vector<VertexTuple> attached_cells; ///< delta_i per base, in order
};

inline ConnectingSphere connecting_sphere(const SphereWitness& hub,
                                          const std::vector<const SphereWitness*>& bases) {
    require(!bases.empty(), "connecting_sphere: no bases");
    if (hub.chain.size() < bases.size())
        throw SizeBoundError("connecting_sphere: hub sphere has " + std::to_string(hub.chain.size()) +
                             " cells but needs at least " + std::to_string(bases.size()));
    std::vector<VertexTuple> hub_cells;
    for (const auto& [tuple, coeff] : hub.chain.terms()) hub_cells.push_back(tuple);

    ConnectingSphere out;
    IntegerChain total = hub.chain;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const SphereWitness& base = *bases[i];
        require(base.dim() == hub.dim(), "connecting_sphere: dimension mismatch");
        const auto& delta = base.chain.terms().begin()->first;
        long long e = base.chain.terms().begin()->second;
        const auto& hub_cell = hub_cells[i];
        long long e_hub = hub.chain.coefficient(hub_cell);
        VertexMap phi = reversing_cell_iso(delta, e, hub_cell, e_hub);

        // Q_i = P_1 of the one-cell prism family (base, delta) -> (hub, cell)
        PrismFamily fam = prism_spheres(base, {delta}, hub, phi);
        total += fam.prisms[0].chain;
        out.attached_cells.push_back(delta);
    }
    out.sphere.chain = std::move(total);
    out.sphere.log(json{{"step", "connecting_sphere"}, {"bases", bases.size()}});
    out.sphere.certify("connecting_sphere");
    // postcondition: meets each base exactly in its attachment cell, reversed
    for (std::size_t i = 0; i < bases.size(); ++i) {
        auto shared = out.sphere.chain.support_intersection(bases[i]->chain);
        if (shared.size() != 1 || *shared.begin() != out.attached_cells[i])
            throw FalsificationAlert("connecting_sphere: unexpected overlap with a base sphere");
        if (out.sphere.chain.coefficient(out.attached_cells[i]) !=
            -bases[i]->chain.coefficient(out.attached_cells[i]))
            throw FalsificationAlert("connecting_sphere: attachment cell not reversed");
    }
    return out;
}

/// Search the corner symmetries for a vertex isomorphism between two
/// same-shape divided discs with the requested orientation character
/// relative to the host spheres (want = -1 for reversing). For side 1 the
/// single cell admits every corner bijection, so the full symmetric group
/// is tried; otherwise the dihedral maps are the candidates.
inline std::optional<VertexMap> find_face_iso(const IntegerChain& host1, const DividedDisc& d1,
                                              const IntegerChain& host2, const DividedDisc& d2,
                                              int want) {
    require(d1.n == d2.n && d1.ell == d2.ell, "find_face_iso: shape mismatch");
    const SubdividedSimplex& lat1 = *d1.lattice;
    const SubdividedSimplex& lat2 = *d2.lattice;
    std::vector<std::vector<int>> candidates = dihedral_group(d1.n + 1);
    if (d1.ell == 1) {
        std::vector<int> p(static_cast<std::size_t>(d1.n) + 1);
        std::iota(p.begin(), p.end(), 0);
        candidates.clear();
        do candidates.push_back(p);
        while (std::next_permutation(p.begin(), p.end()));
    }
    std::vector<VertexTuple> disc_cells;
    for (std::size_t c = 0; c < d1.cell_count(); ++c) disc_cells.push_back(d1.cell_tuple(static_cast<int>(c)));

    for (const auto& g : candidates) {
        VertexMap phi;
        bool ok = true;
        for (std::size_t vi = 0; vi < lat1.vertices().size() && ok; ++vi) {
            const LatticeVertex& t = lat1.vertices()[vi];
            LatticeVertex img(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) img[static_cast<std::size_t>(g[i])] = t[i];
            if (!lat2.has_vertex(img)) {
                ok = false;
                break;
            }
            phi[d1.vert_ids[vi]] = d2.vert_ids[static_cast<std::size_t>(lat2.vertex_index(img))];
        }
        if (!ok) continue;
        PrismOperator op(std::move(phi));
        if (oriented_disc_character(host1, disc_cells, host2, op) == want) return op.vertex_map();
    }
    return std::nullopt;
}

} // namespace linkcert

#endif
