#ifndef LINKCERT_TRIANGULATION_HPP
#define LINKCERT_TRIANGULATION_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <vector>

#include <gmpxx.h>

#include "linkcert/chain.hpp"
#include "linkcert/errors.hpp"
#include "linkcert/rng.hpp"

namespace linkcert {

/// Lattice point of a side-ell simplex in barycentric coordinates:
/// a tuple of M+1 non-negative integers summing to ell.
using LatticeVertex = std::vector<int>;

inline mpz_class binomial(unsigned long n, unsigned long k) {
    if (k > n) return 0;
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

/// The standard subdivision of the M-simplex of side ell into ell^M cells,
/// cut out by the planes "sum of a coordinate interval is an integer".
/// Cells are enumerated through the unit-cube/permutation decomposition in
/// partial-sum coordinates (0 <= x_1 <= ... <= x_M <= ell), pulled back to
/// barycentric coordinates.
class SubdividedSimplex {
public:
    struct Cell {
        std::vector<int> verts; ///< vertex indices, sorted ascending
        int sign;               ///< orientation relative to the standard chart
        std::vector<int> base;  ///< cube base point (x-coordinates)
        std::vector<int> perm;  ///< increment order sigma (0-based)
    };

    SubdividedSimplex(int M, int ell) : M_(M), ell_(ell) {
        require(M >= 1 && ell >= 1, "SubdividedSimplex: need M >= 1, ell >= 1");
        enumerate_vertices();
        enumerate_cells();
    }

    int M() const { return M_; }
    int ell() const { return ell_; }
    const std::vector<LatticeVertex>& vertices() const { return verts_; }
    const std::vector<Cell>& cells() const { return cells_; }

    int vertex_index(const LatticeVertex& t) const {
        auto it = vert_index_.find(t);
        if (it == vert_index_.end()) throw PreconditionError("lattice vertex not in subdivision");
        return it->second;
    }

    bool has_vertex(const LatticeVertex& t) const { return vert_index_.count(t) > 0; }

    /// Cell id by sorted vertex-index tuple; -1 when absent.
    int cell_index(const std::vector<int>& sorted_verts) const {
        auto it = cell_index_.find(sorted_verts);
        return it == cell_index_.end() ? -1 : it->second;
    }

    /// Barycentric tuple of the j-th corner (ell at position j).
    LatticeVertex corner(int j) const {
        LatticeVertex t(static_cast<std::size_t>(M_) + 1, 0);
        t[static_cast<std::size_t>(j)] = ell_;
        return t;
    }

private:
    // partial-sum chart: x_k = t_0 + ... + t_{k-1}, k = 1..M
    LatticeVertex x_to_bary(const std::vector<int>& x) const {
        LatticeVertex t(static_cast<std::size_t>(M_) + 1);
        t[0] = x[0];
        for (int k = 1; k < M_; ++k) t[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] - x[static_cast<std::size_t>(k) - 1];
        t[static_cast<std::size_t>(M_)] = ell_ - x[static_cast<std::size_t>(M_) - 1];
        return t;
    }

    static bool monotone_in_range(const std::vector<int>& x, int ell) {
        if (x.front() < 0 || x.back() > ell) return false;
        for (std::size_t i = 1; i < x.size(); ++i)
            if (x[i - 1] > x[i]) return false;
        return true;
    }

    void enumerate_vertices() {
        // all barycentric tuples summing to ell, lexicographic order
        LatticeVertex t(static_cast<std::size_t>(M_) + 1, 0);
        enumerate_rec(t, 0, ell_);
        for (std::size_t i = 0; i < verts_.size(); ++i) vert_index_[verts_[i]] = static_cast<int>(i);
    }

    void enumerate_rec(LatticeVertex& t, int pos, int remaining) {
        if (pos == M_) {
            t[static_cast<std::size_t>(pos)] = remaining;
            verts_.push_back(t);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            t[static_cast<std::size_t>(pos)] = v;
            enumerate_rec(t, pos + 1, remaining - v);
        }
    }

    void enumerate_cells() {
        std::vector<int> base(static_cast<std::size_t>(M_));
        std::vector<int> perm(static_cast<std::size_t>(M_));
        std::iota(perm.begin(), perm.end(), 0);
        enumerate_bases(base, 0);
        std::sort(cells_.begin(), cells_.end(), [](const Cell& a, const Cell& b) {
            if (a.base != b.base) return a.base < b.base;
            return a.perm < b.perm;
        });
        for (std::size_t i = 0; i < cells_.size(); ++i) cell_index_[cells_[i].verts] = static_cast<int>(i);
    }

    void enumerate_bases(std::vector<int>& base, int pos) {
        if (pos == M_) {
            try_perms(base);
            return;
        }
        for (int v = 0; v < ell_; ++v) {
            base[static_cast<std::size_t>(pos)] = v;
            enumerate_bases(base, pos + 1);
        }
    }

    void try_perms(const std::vector<int>& base) {
        std::vector<int> perm(static_cast<std::size_t>(M_));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<int> x = base;
            bool ok = monotone_in_range(x, ell_);
            std::vector<int> vidx;
            if (ok) {
                vidx.push_back(vert_index_unchecked(x_to_bary(x)));
                ok = vidx.back() >= 0;
            }
            for (std::size_t step = 0; ok && step < perm.size(); ++step) {
                ++x[static_cast<std::size_t>(perm[step])];
                if (!monotone_in_range(x, ell_)) {
                    ok = false;
                    break;
                }
                vidx.push_back(vert_index_unchecked(x_to_bary(x)));
                if (vidx.back() < 0) ok = false;
            }
            if (!ok) continue;
            Cell cell;
            cell.base = base;
            cell.perm = perm;
            // orientation in the chart: direction vectors are
            // e_{perm[0]}, ..., e_{perm[M-1]}, so the sign is sgn(perm);
            // sorting the vertex indices contributes its own parity.
            std::vector<int> p = perm;
            int s = perm_parity(p);
            std::vector<VertexId> as_ids(vidx.begin(), vidx.end());
            s *= sort_parity(as_ids);
            cell.verts.assign(as_ids.begin(), as_ids.end());
            cell.sign = s;
            cells_.push_back(std::move(cell));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    int vert_index_unchecked(const LatticeVertex& t) const {
        auto it = vert_index_.find(t);
        return it == vert_index_.end() ? -1 : it->second;
    }

    static int perm_parity(std::vector<int>& p) {
        int sign = 1;
        for (std::size_t i = 0; i < p.size(); ++i) {
            while (p[i] != static_cast<int>(i)) {
                std::swap(p[i], p[static_cast<std::size_t>(p[i])]);
                sign = -sign;
            }
        }
        return sign;
    }

    int M_, ell_;
    std::vector<LatticeVertex> verts_;
    std::map<LatticeVertex, int> vert_index_;
    std::vector<Cell> cells_;
    std::map<std::vector<int>, int> cell_index_;
};

/// Build the subdivision; named entry point mirroring the other builders.
inline SubdividedSimplex subdivide_simplex(int M, int ell) { return SubdividedSimplex(M, ell); }

/// The distinct corner permutations preserving the cyclic corner order
/// (rotations and reflections, 2m of them for m >= 3); these are exactly
/// the symmetries of the subdivision for ell >= 2.
inline std::vector<std::vector<int>> dihedral_group(int m) {
    std::vector<std::vector<int>> out;
    for (int k = 0; k < m; ++k) {
        std::vector<int> rot(static_cast<std::size_t>(m)), refl(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            rot[static_cast<std::size_t>(i)] = (i + k) % m;
            refl[static_cast<std::size_t>(i)] = ((k - i) % m + m) % m;
        }
        if (std::find(out.begin(), out.end(), rot) == out.end()) out.push_back(std::move(rot));
        if (std::find(out.begin(), out.end(), refl) == out.end()) out.push_back(std::move(refl));
    }
    return out;
}

inline int permutation_sign(std::vector<int> p) {
    int sign = 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (p[i] != static_cast<int>(i)) {
            std::swap(p[i], p[static_cast<std::size_t>(p[i])]);
            sign = -sign;
        }
    }
    return sign;
}

/// Result of letting a corner permutation act on a subdivision.
struct SymmetryAction {
    std::vector<int> vertex_map; ///< image vertex index per vertex index
    std::vector<int> cell_map;   ///< image cell index per cell index
    int character;               ///< +1 orientation preserving, -1 reversing
};

/// Apply the corner permutation g (image position per position) to the
/// subdivision. g must preserve or reverse the cyclic corner order (i.e.
/// lie in the dihedral group); it then maps lattice to lattice and cells to
/// cells, and the orientation character equals sgn(g) on every cell.
inline SymmetryAction symmetry_action(const SubdividedSimplex& s, const std::vector<int>& g) {
    const int m = s.M() + 1;
    require(static_cast<int>(g.size()) == m, "symmetry_action: permutation size mismatch");
    {
        bool dihedral = false;
        for (const auto& h : dihedral_group(m))
            if (h == g) {
                dihedral = true;
                break;
            }
        require(dihedral, "symmetry_action: permutation must preserve or reverse the cyclic corner order");
    }
    SymmetryAction act;
    act.character = permutation_sign(g);
    act.vertex_map.resize(s.vertices().size());
    for (std::size_t vi = 0; vi < s.vertices().size(); ++vi) {
        const LatticeVertex& t = s.vertices()[vi];
        LatticeVertex img(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) img[static_cast<std::size_t>(g[static_cast<std::size_t>(i)])] = t[static_cast<std::size_t>(i)];
        if (!s.has_vertex(img)) throw PreconditionError("symmetry_action: lattice not preserved");
        act.vertex_map[vi] = s.vertex_index(img);
    }
    act.cell_map.resize(s.cells().size());
    for (std::size_t ci = 0; ci < s.cells().size(); ++ci) {
        const auto& cell = s.cells()[ci];
        std::vector<VertexId> img;
        img.reserve(cell.verts.size());
        for (int v : cell.verts) img.push_back(static_cast<VertexId>(act.vertex_map[static_cast<std::size_t>(v)]));
        int parity = sort_parity(img);
        std::vector<int> sorted(img.begin(), img.end());
        int target = s.cell_index(sorted);
        if (target < 0) throw PreconditionError("symmetry_action: cells not preserved");
        act.cell_map[ci] = target;
        // orientation bookkeeping: the image of (sign * sorted cell) must be
        // character * (sign of the image cell) * (image sorted cell)
        int lhs = cell.sign * parity;
        int rhs = act.character * s.cells()[static_cast<std::size_t>(target)].sign;
        if (lhs != rhs)
            throw FalsificationAlert("symmetry_action: orientation character violated on a cell");
    }
    return act;
}

/// True when some corner symmetry of the side-ell M-simplex subdivision is
/// orientation-reversing (computed, not assumed; equal to M mod 4 != 0).
inline bool has_reversing_symmetry(int M) {
    for (const auto& g : dihedral_group(M + 1))
        if (permutation_sign(g) == -1) return true;
    return false;
}

/// Sphere made of ell simplices of dimension n+1 glued along shared facets
/// in a row; the boundary has n*ell + 2 top cells on n + ell + 1 vertices.
inline SphereWitness stacked_sphere(int n, int ell, const std::vector<VertexId>& ids) {
    require(n >= 1 && ell >= 1, "stacked_sphere: need n >= 1, ell >= 1");
    require(ids.size() == static_cast<std::size_t>(n + ell + 1), "stacked_sphere: need n + ell + 1 vertex ids");
    IntegerChain disc(n + 1);
    int sign = 1;
    for (int k = 1; k <= ell; ++k) {
        std::vector<VertexId> tuple(ids.begin() + (k - 1), ids.begin() + (k - 1) + (n + 2));
        disc.add(OrientedSimplex(std::move(tuple)), sign);
        if (n % 2 == 1) sign = -sign;
    }
    SphereWitness w;
    w.chain = boundary(disc);
    w.log(json{{"step", "stacked_sphere"}, {"n", n}, {"ell", ell}});
    w.certify("stacked_sphere");
    if (w.chain.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(ell) + 2)
        throw FalsificationAlert("stacked_sphere: unexpected cell count");
    return w;
}

/// Smallest stacked sphere with more than k top cells: ell = ceil(k / n).
inline SphereWitness sphere_with_k_simplices(int n, int k, const std::vector<VertexId>& ids) {
    require(k >= 1, "sphere_with_k_simplices: need k >= 1");
    int ell = (k + n - 1) / n;
    return stacked_sphere(n, ell, ids);
}

/// Closed formula for the vertex count of the side-ell triangulation of the
/// complete n-complex on 2n+4 corners.
inline mpz_class vertex_count_formula(int n, int ell) {
    require(n >= 1 && ell >= 1, "vertex_count_formula: need n >= 1, ell >= 1");
    mpz_class v = 0;
    for (int k = 0; k <= n; ++k)
        v += binomial(static_cast<unsigned long>(2 * n + 4), static_cast<unsigned long>(k + 1)) *
             binomial(static_cast<unsigned long>(ell - 1), static_cast<unsigned long>(k));
    return v;
}

/// Companion upper bound (n+1) * C(2n+4, n+1) * ell^n.
inline mpz_class vertex_count_bound(int n, int ell) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(ell), static_cast<unsigned long>(n));
    return mpz_class(n + 1) * binomial(static_cast<unsigned long>(2 * n + 4), static_cast<unsigned long>(n + 1)) * p;
}

/// A divided n-simplex sitting inside an ambient complex: the lattice
/// template plus the global vertex id of every lattice vertex. Cell
/// coefficients are always read live from the host sphere's chain, so a
/// disc stays valid when its host is reoriented.
struct DividedDisc {
    int n = 0;
    int ell = 0;
    std::shared_ptr<const SubdividedSimplex> lattice;
    std::vector<VertexId> vert_ids; ///< global id per lattice vertex index

    VertexTuple cell_tuple(int cell) const {
        const auto& c = lattice->cells()[static_cast<std::size_t>(cell)].verts;
        std::vector<VertexId> t;
        t.reserve(c.size());
        for (int v : c) t.push_back(vert_ids[static_cast<std::size_t>(v)]);
        std::sort(t.begin(), t.end());
        return t;
    }

    std::size_t cell_count() const { return lattice->cells().size(); }

    /// Global ids of this disc's corners, in corner-position order.
    std::vector<VertexId> corner_ids() const {
        std::vector<VertexId> out;
        for (int j = 0; j <= n; ++j)
            out.push_back(vert_ids[static_cast<std::size_t>(lattice->vertex_index(lattice->corner(j)))]);
        return out;
    }
};

/// Combinatorial disc certificate used by linear_disc and the test suite:
/// unit-coefficient-free (cells given as tuples), every (n-1)-face in at
/// most two cells, dual-connected, Euler characteristic 1, and nonempty
/// boundary.
inline bool disc_check(const std::vector<VertexTuple>& cells, int n) {
    if (cells.empty()) return false;
    std::map<VertexTuple, std::vector<std::size_t>> ridge_to_cells;
    VertexTuple face;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        if (cells[ci].size() != static_cast<std::size_t>(n) + 1) return false;
        for (std::size_t i = 0; i < cells[ci].size(); ++i) {
            face.clear();
            for (std::size_t j = 0; j < cells[ci].size(); ++j)
                if (j != i) face.push_back(cells[ci][j]);
            ridge_to_cells[face].push_back(ci);
        }
    }
    std::size_t boundary_faces = 0;
    for (const auto& [f, inc] : ridge_to_cells) {
        if (inc.size() > 2) return false;
        if (inc.size() == 1) ++boundary_faces;
    }
    if (boundary_faces == 0) return false;
    // dual connectivity
    std::vector<std::size_t> parent(cells.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [f, inc] : ridge_to_cells)
        if (inc.size() == 2) parent[find(inc[0])] = find(inc[1]);
    std::size_t root = find(0);
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (find(i) != root) return false;
    // Euler characteristic of the support
    std::vector<std::set<VertexTuple>> faces(static_cast<std::size_t>(n) + 1);
    for (const auto& cell : cells) {
        const std::size_t m = cell.size();
        for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
            VertexTuple f;
            for (std::size_t i = 0; i < m; ++i)
                if (mask & (1u << i)) f.push_back(cell[i]);
            faces[f.size() - 1].insert(std::move(f));
        }
    }
    long long chi = 0;
    for (int k = 0; k <= n; ++k)
        chi += (k % 2 == 0 ? 1 : -1) * static_cast<long long>(faces[static_cast<std::size_t>(k)].size());
    return chi == 1;
}

/// An ordered run of cells of a divided simplex traced by a straight
/// segment: consecutive cells share an (n-1)-face, non-consecutive cells
/// meet in dimension <= n-2, and every contiguous run is a disc.
struct OrderedDisc {
    DividedDisc face;
    std::vector<int> cells;        ///< lattice cell ids, in crossing order
    std::vector<long long> direction; ///< the accepted integer direction
};

/// Trace a straight segment from corner 0 across the divided simplex and
/// report the ordered cells it passes through (at least max(ell, min_cells)
/// of them). The direction is an exact integer vector found by seeded
/// rejection; a candidate is accepted only if, checked exhaustively against
/// the finite family of subdividing hyperplanes, the segment crosses them
/// transversally at pairwise distinct interior times.
inline OrderedDisc linear_disc(const DividedDisc& face, int min_cells, SplitRng rng) {
    const int n = face.n;
    const int ell = face.ell;
    require(n >= 1, "linear_disc: need n >= 1");
    if (ell < min_cells)
        throw SizeBoundError("linear_disc: side length " + std::to_string(ell) +
                             " is below the required run length " + std::to_string(min_cells));
    const SubdividedSimplex& lat = *face.lattice;

    for (int attempt = 0; attempt < 64; ++attempt) {
        SplitRng arng = rng.child(static_cast<std::uint64_t>(attempt));
        const long long K = 64LL * (n + ell) * (attempt + 2);
        // strictly increasing positive integer direction in the x-chart
        std::vector<long long> alpha(static_cast<std::size_t>(n));
        {
            std::set<long long> picked;
            while (static_cast<int>(picked.size()) < n) picked.insert(arng.uniform(1, K));
            std::size_t i = 0;
            for (long long v : picked) alpha[i++] = v;
        }
        const mpq_class T = mpq_class(ell) / mpq_class(static_cast<long>(alpha.back())); // segment ends on x_n = ell
        // event times: x_i = c  =>  u = c / alpha_i ;  x_j - x_i = c  =>  u = c / (alpha_j - alpha_i)
        std::vector<mpq_class> times;
        bool ok = true;
        auto add_times = [&](long long rate) {
            if (rate <= 0) {
                ok = false;
                return;
            }
            for (long long c = 1;; ++c) {
                mpq_class u = mpq_class(static_cast<long>(c)) / mpq_class(static_cast<long>(rate));
                if (u >= T) break;
                times.push_back(u);
            }
        };
        for (int i = 0; i < n && ok; ++i) add_times(alpha[static_cast<std::size_t>(i)]);
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j) add_times(alpha[static_cast<std::size_t>(j)] - alpha[static_cast<std::size_t>(i)]);
        if (!ok) continue;
        std::sort(times.begin(), times.end());
        bool distinct = true;
        for (std::size_t i = 1; i < times.size(); ++i)
            if (times[i - 1] == times[i]) {
                distinct = false;
                break;
            }
        if (!distinct) continue; // two hyperplanes met at the same interior time

        // locate the cell containing each inter-event midpoint
        std::vector<mpq_class> cuts;
        cuts.push_back(0);
        for (const auto& t : times) cuts.push_back(t);
        cuts.push_back(T);
        std::vector<int> run;
        bool located = true;
        for (std::size_t k = 0; k + 1 < cuts.size() && located; ++k) {
            mpq_class mid = (cuts[k] + cuts[k + 1]) / 2;
            // x-coordinates of the midpoint
            std::vector<mpq_class> x(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                x[static_cast<std::size_t>(i)] = mid * static_cast<long>(alpha[static_cast<std::size_t>(i)]);
            // cube base and descending fractional order give the cell
            std::vector<int> base(static_cast<std::size_t>(n));
            std::vector<mpq_class> frac(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                mpz_class fl;
                mpz_fdiv_q(fl.get_mpz_t(), x[static_cast<std::size_t>(i)].get_num().get_mpz_t(),
                           x[static_cast<std::size_t>(i)].get_den().get_mpz_t());
                base[static_cast<std::size_t>(i)] = static_cast<int>(fl.get_si());
                frac[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - mpq_class(fl);
                if (frac[static_cast<std::size_t>(i)] == 0) located = false; // midpoint on a plane: reject
            }
            if (!located) break;
            std::vector<int> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (frac[static_cast<std::size_t>(a)] != frac[static_cast<std::size_t>(b)])
                    return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
                return a < b;
            });
            for (std::size_t i = 1; i < order.size(); ++i)
                if (frac[static_cast<std::size_t>(order[i - 1])] == frac[static_cast<std::size_t>(order[i])]) located = false;
            if (!located) break;
            // walk the increments to collect the cell's vertex indices
            std::vector<int> xi = base;
            std::vector<int> vidx;
            auto push_vertex = [&]() -> bool {
                LatticeVertex t(static_cast<std::size_t>(n) + 1);
                t[0] = xi[0];
                for (int kk = 1; kk < n; ++kk) t[static_cast<std::size_t>(kk)] = xi[static_cast<std::size_t>(kk)] - xi[static_cast<std::size_t>(kk) - 1];
                t[static_cast<std::size_t>(n)] = ell - xi[static_cast<std::size_t>(n) - 1];
                if (!lat.has_vertex(t)) return false;
                vidx.push_back(lat.vertex_index(t));
                return true;
            };
            if (!push_vertex()) {
                located = false;
                break;
            }
            for (int step = 0; step < n; ++step) {
                ++xi[static_cast<std::size_t>(order[static_cast<std::size_t>(step)])];
                if (!push_vertex()) {
                    located = false;
                    break;
                }
            }
            if (!located) break;
            std::sort(vidx.begin(), vidx.end());
            int cid = lat.cell_index(vidx);
            if (cid < 0) {
                located = false;
                break;
            }
            if (run.empty() || run.back() != cid) run.push_back(cid);
        }
        if (!located) continue;
        if (static_cast<int>(run.size()) < std::max(ell, min_cells)) continue;

        // postconditions: consecutive cells share an (n-1)-face, distant
        // cells meet in dimension <= n-2, and the full run is a disc
        auto shared_vertices = [&](int a, int b) {
            const auto& va = lat.cells()[static_cast<std::size_t>(a)].verts;
            const auto& vb = lat.cells()[static_cast<std::size_t>(b)].verts;
            std::vector<int> inter;
            std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(inter));
            return inter.size();
        };
        bool post_ok = true;
        for (std::size_t i = 0; i + 1 < run.size() && post_ok; ++i)
            if (shared_vertices(run[i], run[i + 1]) != static_cast<std::size_t>(n)) post_ok = false;
        for (std::size_t i = 0; i < run.size() && post_ok; ++i)
            for (std::size_t j = i + 2; j < run.size() && post_ok; ++j)
                if (shared_vertices(run[static_cast<std::size_t>(i)], run[j]) > static_cast<std::size_t>(n) - 1) post_ok = false;
        if (post_ok) {
            std::vector<VertexTuple> tuples;
            for (int c : run) tuples.push_back(face.cell_tuple(c));
            post_ok = disc_check(tuples, n);
        }
        if (!post_ok) continue;

        OrderedDisc out;
        out.face = face;
        out.cells = run;
        out.direction = alpha;
        return out;
    }
    throw DegeneracyError("linear_disc: direction rejection budget exhausted");
}

/// Overload tracing a disc across a bare subdivision (vertex ids are the
/// lattice vertex indices).
inline OrderedDisc linear_disc(std::shared_ptr<const SubdividedSimplex> lattice, int min_cells,
                               SplitRng rng) {
    DividedDisc d;
    d.n = lattice->M();
    d.ell = lattice->ell();
    d.lattice = std::move(lattice);
    d.vert_ids.resize(d.lattice->vertices().size());
    std::iota(d.vert_ids.begin(), d.vert_ids.end(), 0);
    return linear_disc(d, min_cells, rng);
}

/// Delete one cell from a divided simplex and return the largest corner
/// sub-simplex (side floor(M*ell/(M+1))) avoiding it: pick the smallest
/// barycentric index i whose centroid coordinate is <= ell/(M+1), and keep
/// the half-space t_i >= ceil(ell/(M+1)).
struct ShrunkSimplex {
    int axis = 0;   ///< barycentric index kept away from
    int offset = 0; ///< ceil(ell/(M+1))
    std::shared_ptr<const SubdividedSimplex> child; ///< side ell - offset
    std::vector<int> parent_vertex; ///< parent vertex index per child vertex index
    std::vector<int> parent_cell;   ///< parent cell index per child cell index
};

inline ShrunkSimplex shrink_after_delete(const SubdividedSimplex& parent, int deleted_cell) {
    const int M = parent.M();
    const int ell = parent.ell();
    require(deleted_cell >= 0 && deleted_cell < static_cast<int>(parent.cells().size()),
            "shrink_after_delete: cell out of range");
    const int offset = (ell + M) / (M + 1); // ceil(ell/(M+1))
    require(ell - offset >= 1, "shrink_after_delete: resulting side would be empty");

    // centroid of the deleted cell; numerators of (M+1) * t_i
    const auto& dverts = parent.cells()[static_cast<std::size_t>(deleted_cell)].verts;
    std::vector<long long> sums(static_cast<std::size_t>(M) + 1, 0);
    for (int vi : dverts)
        for (int i = 0; i <= M; ++i) sums[static_cast<std::size_t>(i)] += parent.vertices()[static_cast<std::size_t>(vi)][static_cast<std::size_t>(i)];
    int axis = -1;
    for (int i = 0; i <= M && axis < 0; ++i)
        if (sums[static_cast<std::size_t>(i)] <= ell) axis = i; // t_i <= ell/(M+1), scaled by M+1
    if (axis < 0) throw FalsificationAlert("shrink_after_delete: no small barycentric coordinate");

    ShrunkSimplex out;
    out.axis = axis;
    out.offset = offset;
    out.child = std::make_shared<SubdividedSimplex>(M, ell - offset);
    out.parent_vertex.reserve(out.child->vertices().size());
    for (const auto& t : out.child->vertices()) {
        LatticeVertex p = t;
        p[static_cast<std::size_t>(axis)] += offset;
        out.parent_vertex.push_back(parent.vertex_index(p));
    }
    out.parent_cell.reserve(out.child->cells().size());
    for (const auto& cell : out.child->cells()) {
        std::vector<int> pv;
        pv.reserve(cell.verts.size());
        for (int v : cell.verts) pv.push_back(out.parent_vertex[static_cast<std::size_t>(v)]);
        std::sort(pv.begin(), pv.end());
        int pc = parent.cell_index(pv);
        if (pc < 0) throw FalsificationAlert("shrink_after_delete: translated cell missing in parent");
        if (pc == deleted_cell)
            throw FalsificationAlert("shrink_after_delete: block still contains the deleted cell");
        out.parent_cell.push_back(pc);
    }
    return out;
}

/// Side-ell triangulation of the complete n-complex on M corners: the
/// lattice points of the side-ell (M-1)-simplex supported on at most n+1
/// corners, with each n-face of the corner simplex carrying the standard
/// side-ell subdivision, instantiated on concrete global vertex ids.
class BlockComplex {
public:
    BlockComplex(int M, int n, int ell, const std::vector<VertexId>& ids) : M_(M), n_(n), ell_(ell) {
        require(M >= n + 2, "BlockComplex: need M >= n + 2");
        enumerate_vertices();
        require(ids.size() == verts_.size(),
                "BlockComplex: need exactly " + std::to_string(verts_.size()) + " vertex ids");
        ids_ = ids;
    }

    int M() const { return M_; }
    int n() const { return n_; }
    int ell() const { return ell_; }
    std::size_t vertex_count() const { return verts_.size(); }
    const std::vector<VertexId>& ids() const { return ids_; }

    VertexId id_of(const LatticeVertex& t) const { return ids_[static_cast<std::size_t>(index_of(t))]; }

    /// The boundary sphere of the divided (n+1)-simplex spanned by the given
    /// n+2 corners, plus its n+2 divided n-faces.
    struct CornerSphere {
        SphereWitness sphere;
        std::vector<DividedDisc> faces;
        std::vector<int> corners;
    };

    CornerSphere sphere_for_corners(std::vector<int> corners) const {
        require(corners.size() == static_cast<std::size_t>(n_) + 2, "sphere_for_corners: need n + 2 corners");
        std::sort(corners.begin(), corners.end());
        for (std::size_t i = 1; i < corners.size(); ++i)
            require(corners[i - 1] != corners[i], "sphere_for_corners: repeated corner");
        require(corners.front() >= 0 && corners.back() < M_, "sphere_for_corners: corner out of range");

        SubdividedSimplex top(n_ + 1, ell_);
        // Global id per lattice vertex of the divided (n+1)-simplex. Lattice
        // points supported on more than n+1 corners (possible once ell >= 3)
        // are not vertices of the n-complex; they appear only in the interior
        // scaffolding chain, so they receive disposable ids beyond every real
        // id and must cancel out of the boundary.
        VertexId synth_base = 0;
        for (VertexId v : ids_) synth_base = std::max(synth_base, v + 1);
        VertexId next_synth = synth_base;
        std::vector<VertexId> gids;
        gids.reserve(top.vertices().size());
        for (const auto& t : top.vertices()) {
            int support = 0;
            for (int c : t)
                if (c > 0) ++support;
            if (support <= n_ + 1)
                gids.push_back(id_of(spread(t, corners)));
            else
                gids.push_back(next_synth++);
        }

        IntegerChain fundamental(n_ + 1);
        for (const auto& cell : top.cells()) {
            std::vector<VertexId> tuple;
            tuple.reserve(cell.verts.size());
            for (int v : cell.verts) tuple.push_back(gids[static_cast<std::size_t>(v)]);
            fundamental.add(OrientedSimplex(std::move(tuple)), cell.sign);
        }
        CornerSphere out;
        out.corners = corners;
        out.sphere.chain = boundary(fundamental);
        for (const auto& [cell, coeff] : out.sphere.chain.terms())
            for (VertexId v : cell)
                if (v >= synth_base)
                    throw FalsificationAlert(
                        "sphere_for_corners: an interior scaffolding vertex survived the boundary");
        out.sphere.log(json{{"step", "corner_sphere"}, {"corners", corners}, {"ell", ell_}});
        out.sphere.certify("sphere_for_corners");

        auto face_template = std::make_shared<SubdividedSimplex>(n_, ell_);
        for (std::size_t omit = 0; omit < corners.size(); ++omit) {
            DividedDisc d;
            d.n = n_;
            d.ell = ell_;
            d.lattice = face_template;
            std::vector<int> fc;
            for (std::size_t i = 0; i < corners.size(); ++i)
                if (i != omit) fc.push_back(corners[i]);
            for (const auto& t : face_template->vertices()) d.vert_ids.push_back(id_of(spread(t, fc)));
            out.faces.push_back(std::move(d));
        }
        return out;
    }

    /// All unordered partitions of the corners into an (n+2)-set and its
    /// complement; corner 0 is fixed on the left side so each pair appears
    /// exactly once.
    std::vector<std::pair<std::vector<int>, std::vector<int>>> corner_partitions() const {
        std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
        std::vector<int> pick{0};
        partition_rec(pick, 1, out);
        return out;
    }

private:
    int index_of(const LatticeVertex& t) const {
        auto it = vert_index_.find(t);
        if (it == vert_index_.end()) throw PreconditionError("BlockComplex: lattice vertex not present");
        return it->second;
    }

    // place a small barycentric tuple onto the chosen corner positions
    LatticeVertex spread(const LatticeVertex& t, const std::vector<int>& corners) const {
        LatticeVertex out(static_cast<std::size_t>(M_), 0);
        for (std::size_t i = 0; i < t.size(); ++i) out[static_cast<std::size_t>(corners[i])] = t[i];
        return out;
    }

    void enumerate_vertices() {
        LatticeVertex t(static_cast<std::size_t>(M_), 0);
        rec(t, 0, ell_, 0);
        for (std::size_t i = 0; i < verts_.size(); ++i) vert_index_[verts_[i]] = static_cast<int>(i);
    }

    void rec(LatticeVertex& t, int pos, int remaining, int positives) {
        if (positives > n_ + 1) return;
        if (pos == M_ - 1) {
            if (remaining > 0 && positives + 1 > n_ + 1) return;
            t[static_cast<std::size_t>(pos)] = remaining;
            verts_.push_back(t);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            t[static_cast<std::size_t>(pos)] = v;
            rec(t, pos + 1, remaining - v, positives + (v > 0 ? 1 : 0));
        }
    }

    void partition_rec(std::vector<int>& pick, int from,
                       std::vector<std::pair<std::vector<int>, std::vector<int>>>& out) const {
        if (static_cast<int>(pick.size()) == n_ + 2) {
            std::vector<int> rest;
            for (int i = 0; i < M_; ++i)
                if (!std::binary_search(pick.begin(), pick.end(), i)) rest.push_back(i);
            out.emplace_back(pick, rest);
            return;
        }
        for (int c = from; c < M_; ++c) {
            pick.push_back(c);
            partition_rec(pick, c + 1, out);
            pick.pop_back();
        }
    }

    int M_, n_, ell_;
    std::vector<LatticeVertex> verts_;
    std::map<LatticeVertex, int> vert_index_;
    std::vector<VertexId> ids_;
};

/// Named builder mirroring the formula naming used elsewhere.
inline BlockComplex triangulated_complete_complex(int M, int n, int ell, const std::vector<VertexId>& ids) {
    return BlockComplex(M, n, ell, ids);
}

} // namespace linkcert

#endif
