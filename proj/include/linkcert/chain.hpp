#ifndef LINKCERT_CHAIN_HPP
#define LINKCERT_CHAIN_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linkcert/errors.hpp"

namespace linkcert {

using VertexId = std::uint32_t;
using json = nlohmann::json;

/// Vertices of a simplex in strictly increasing order.
using VertexTuple = std::vector<VertexId>;

/// Parity of the permutation sorting `verts` ascending: +1 even, -1 odd.
/// Throws if the tuple has a repeated vertex (a degenerate simplex).
inline int sort_parity(std::vector<VertexId>& verts) {
    int sign = 1;
    // insertion sort, counting swaps; tuples are tiny (<= 12 entries)
    for (std::size_t i = 1; i < verts.size(); ++i) {
        VertexId v = verts[i];
        std::size_t j = i;
        while (j > 0 && verts[j - 1] > v) {
            verts[j] = verts[j - 1];
            --j;
            sign = -sign;
        }
        verts[j] = v;
    }
    for (std::size_t i = 1; i < verts.size(); ++i)
        if (verts[i - 1] == verts[i])
            throw PreconditionError("degenerate simplex: repeated vertex " + std::to_string(verts[i]));
    return sign;
}

/// An oriented simplex in canonical form: strictly increasing vertex tuple
/// plus a sign recording the orientation relative to that ordering.
struct OrientedSimplex {
    VertexTuple vertices; // strictly increasing
    int sign = 1;         // +1 or -1

    OrientedSimplex() = default;

    /// Canonicalize an arbitrarily ordered tuple; `orientation` multiplies
    /// the parity picked up while sorting.
    explicit OrientedSimplex(std::vector<VertexId> verts, int orientation = 1) {
        int p = sort_parity(verts);
        vertices = std::move(verts);
        sign = orientation * p;
    }

    std::size_t dim() const { return vertices.size() - 1; }
};

/// Integral simplicial chain of fixed dimension, stored sparsely with the
/// orientation folded into the integer coefficient of the sorted tuple.
class IntegerChain {
public:
    using Coeff = long long;
    using Map = std::map<VertexTuple, Coeff>;

    explicit IntegerChain(int dim = 0) : dim_(dim) {}

    int dim() const { return dim_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    const Map& terms() const { return terms_; }

    /// Add c times the oriented simplex; erases terms that cancel to zero.
    void add(const OrientedSimplex& s, Coeff c = 1) {
        if (static_cast<int>(s.dim()) != dim_)
            throw PreconditionError("chain/simplex dimension mismatch");
        add_sorted(s.vertices, c * s.sign);
    }

    /// Add c times the simplex given by an already sorted tuple.
    void add_sorted(const VertexTuple& sorted, Coeff c) {
        if (c == 0) return;
        auto it = terms_.find(sorted);
        if (it == terms_.end()) {
            terms_.emplace(sorted, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Coeff coefficient(const VertexTuple& sorted) const {
        auto it = terms_.find(sorted);
        return it == terms_.end() ? 0 : it->second;
    }

    IntegerChain& operator+=(const IntegerChain& o) {
        if (o.dim_ != dim_) throw PreconditionError("chain dimension mismatch in +=");
        for (const auto& [verts, c] : o.terms_) add_sorted(verts, c);
        return *this;
    }

    IntegerChain operator+(const IntegerChain& o) const {
        IntegerChain r = *this;
        r += o;
        return r;
    }

    IntegerChain operator-() const {
        IntegerChain r(dim_);
        for (const auto& [verts, c] : terms_) r.terms_.emplace(verts, -c);
        return r;
    }

    IntegerChain operator-(const IntegerChain& o) const { return *this + (-o); }

    IntegerChain scaled(Coeff k) const {
        IntegerChain r(dim_);
        if (k != 0)
            for (const auto& [verts, c] : terms_) r.terms_.emplace(verts, c * k);
        return r;
    }

    bool operator==(const IntegerChain& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }
    bool operator!=(const IntegerChain& o) const { return !(*this == o); }

    /// All vertices appearing in the support.
    std::set<VertexId> vertex_set() const {
        std::set<VertexId> s;
        for (const auto& [verts, c] : terms_) s.insert(verts.begin(), verts.end());
        return s;
    }

    /// True if every coefficient is +1 or -1.
    bool unit_coefficients() const {
        for (const auto& [verts, c] : terms_)
            if (c != 1 && c != -1) return false;
        return true;
    }

    /// Restriction to the given support simplices (coefficients kept).
    IntegerChain restricted_to(const std::set<VertexTuple>& cells) const {
        IntegerChain r(dim_);
        for (const auto& [verts, c] : terms_)
            if (cells.count(verts)) r.terms_.emplace(verts, c);
        return r;
    }

    /// Simplices common to both supports (ignoring coefficients).
    std::set<VertexTuple> support_intersection(const IntegerChain& o) const {
        std::set<VertexTuple> common;
        for (const auto& [verts, c] : terms_)
            if (o.terms_.count(verts)) common.insert(verts);
        return common;
    }

    /// Canonical JSON form: a list of {"vertices": [...], "coeff": n}
    /// objects sorted lexicographically by vertex tuple. Two chains are
    /// equal iff their canonical JSON forms are byte-identical.
    json to_json() const {
        json arr = json::array();
        for (const auto& [verts, c] : terms_) {
            json term;
            term["coeff"] = c;
            term["vertices"] = verts;
            arr.push_back(std::move(term));
        }
        return arr;
    }

    static IntegerChain from_json(const json& arr, int dim) {
        if (!arr.is_array()) throw PreconditionError("chain JSON must be an array");
        IntegerChain r(dim);
        for (const auto& term : arr) {
            if (!term.contains("vertices") || !term.contains("coeff"))
                throw PreconditionError("chain term missing 'vertices' or 'coeff'");
            std::vector<VertexId> verts = term.at("vertices").get<std::vector<VertexId>>();
            for (std::size_t i = 1; i < verts.size(); ++i)
                if (verts[i - 1] >= verts[i])
                    throw PreconditionError("chain term vertices must be strictly increasing");
            if (verts.size() != static_cast<std::size_t>(dim) + 1)
                throw PreconditionError("chain term has wrong dimension");
            if (!term.at("coeff").is_number_integer())
                throw PreconditionError("chain coefficient must be an integer");
            r.add_sorted(verts, term.at("coeff").get<Coeff>());
        }
        return r;
    }

private:
    int dim_;
    Map terms_;
};

/// Boundary operator: alternating sum of faces of every term.
/// Satisfies boundary(boundary(c)) == 0 identically.
inline IntegerChain boundary(const IntegerChain& c) {
    if (c.dim() < 1) throw PreconditionError("boundary: chain dimension must be >= 1");
    IntegerChain out(c.dim() - 1);
    VertexTuple face;
    for (const auto& [verts, coeff] : c.terms()) {
        int s = 1;
        for (std::size_t i = 0; i < verts.size(); ++i) {
            face.clear();
            for (std::size_t j = 0; j < verts.size(); ++j)
                if (j != i) face.push_back(verts[j]);
            out.add_sorted(face, coeff * s);
            s = -s;
        }
    }
    return out;
}

/// Finite simplicial complex given by its maximal simplices. The complete
/// n-complex on N vertices is represented implicitly (its maximal-simplex
/// count grows combinatorially), but can be enumerated on demand.
class SimplicialComplex {
public:
    /// Complete n-skeleton on vertices [first, first+count).
    static SimplicialComplex complete(int n, VertexId first, std::size_t count) {
        SimplicialComplex k;
        k.dim_ = n;
        k.complete_first_ = first;
        k.complete_count_ = count;
        k.is_complete_ = true;
        return k;
    }

    /// Explicit complex from maximal simplices (all of dimension dim).
    static SimplicialComplex from_maximal(int dim, std::set<VertexTuple> cells) {
        SimplicialComplex k;
        k.dim_ = dim;
        k.cells_ = std::move(cells);
        return k;
    }

    int dim() const { return dim_; }

    bool contains_cell(const VertexTuple& sorted) const {
        if (static_cast<int>(sorted.size()) != dim_ + 1) return false;
        if (is_complete_) {
            for (VertexId v : sorted)
                if (v < complete_first_ || v >= complete_first_ + complete_count_) return false;
            return true;
        }
        return cells_.count(sorted) > 0;
    }

    /// Number of maximal simplices: C(N, n+1) for the complete complex.
    unsigned long long maximal_count() const {
        if (!is_complete_) return cells_.size();
        unsigned long long r = 1;
        unsigned long long k = static_cast<unsigned long long>(dim_) + 1;
        for (unsigned long long i = 0; i < k; ++i)
            r = r * (complete_count_ - i) / (i + 1);
        return r;
    }

    /// Invoke fn for every maximal simplex (sorted tuple).
    template <typename Fn>
    void for_each_cell(Fn&& fn) const {
        if (!is_complete_) {
            for (const auto& cell : cells_) fn(cell);
            return;
        }
        VertexTuple cur(static_cast<std::size_t>(dim_) + 1);
        enumerate_subsets(cur, 0, complete_first_, fn);
    }

    VertexId complete_first() const { return complete_first_; }
    std::size_t complete_count() const { return complete_count_; }
    bool is_complete() const { return is_complete_; }

private:
    template <typename Fn>
    void enumerate_subsets(VertexTuple& cur, std::size_t pos, VertexId from, Fn&& fn) const {
        if (pos == cur.size()) {
            fn(const_cast<const VertexTuple&>(cur));
            return;
        }
        for (VertexId v = from; v + (cur.size() - 1 - pos) < complete_first_ + complete_count_; ++v) {
            cur[pos] = v;
            enumerate_subsets(cur, pos + 1, v + 1, fn);
        }
    }

    int dim_ = 0;
    bool is_complete_ = false;
    VertexId complete_first_ = 0;
    std::size_t complete_count_ = 0;
    std::set<VertexTuple> cells_;
};

/// The complete n-complex on N vertices 0..N-1 (the n-skeleton of an
/// (N-1)-simplex).
inline SimplicialComplex complete_complex(int n, std::size_t N) {
    require(N >= static_cast<std::size_t>(n) + 1, "complete_complex: need N >= n + 1");
    return SimplicialComplex::complete(n, 0, N);
}

/// Report from check_sphere: valid flag plus the first violated condition.
struct SphereReport {
    bool ok = false;
    std::string reason; // empty when ok
    long long euler = 0;
    std::size_t cell_count = 0;
};

/// Certify that an n-chain is a combinatorial n-sphere in the cheap sense:
/// unit coefficients, zero boundary, every (n-1)-face in exactly two cells,
/// facet-connected support, and Euler characteristic 1 + (-1)^n.
///
/// For n <= 2 this pins the homeomorphism type exactly; for n >= 3 it is a
/// deliberate partial certificate (homology spheres of dimension >= 3 pass).
inline SphereReport check_sphere(const IntegerChain& c) {
    SphereReport rep;
    rep.cell_count = c.size();
    const int n = c.dim();
    if (n < 1) {
        rep.reason = "chain dimension must be >= 1";
        return rep;
    }
    if (c.empty()) {
        rep.reason = "empty chain";
        return rep;
    }
    if (!c.unit_coefficients()) {
        rep.reason = "coefficient not +1/-1";
        return rep;
    }
    if (!boundary(c).empty()) {
        rep.reason = "nonzero boundary";
        return rep;
    }
    // collect cells and their (n-1)-faces
    std::vector<VertexTuple> cells;
    cells.reserve(c.size());
    for (const auto& [verts, coeff] : c.terms()) cells.push_back(verts);

    if (n >= 1) {
        std::map<VertexTuple, std::vector<std::size_t>> ridge_to_cells;
        VertexTuple face;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const auto& verts = cells[ci];
            for (std::size_t i = 0; i < verts.size(); ++i) {
                face.clear();
                for (std::size_t j = 0; j < verts.size(); ++j)
                    if (j != i) face.push_back(verts[j]);
                ridge_to_cells[face].push_back(ci);
            }
        }
        for (const auto& [face, incident] : ridge_to_cells) {
            if (incident.size() != 2) {
                rep.reason = "a face of dimension " + std::to_string(n - 1) + " lies in " +
                             std::to_string(incident.size()) + " cells (want 2)";
                return rep;
            }
        }
        // facet connectivity via union-find over the dual graph
        std::vector<std::size_t> parent(cells.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (const auto& [face, incident] : ridge_to_cells)
            parent[find(incident[0])] = find(incident[1]);
        std::size_t root = find(0);
        for (std::size_t i = 1; i < cells.size(); ++i) {
            if (find(i) != root) {
                rep.reason = "support not connected";
                return rep;
            }
        }
    }
    // Euler characteristic over the full face poset of the support
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
    rep.euler = chi;
    long long expected = 1 + ((n % 2 == 0) ? 1 : -1);
    if (chi != expected) {
        rep.reason = "Euler characteristic " + std::to_string(chi) + " (want " + std::to_string(expected) + ")";
        return rep;
    }
    rep.ok = true;
    return rep;
}

/// A chain together with its sphere certificate and a construction log.
struct SphereWitness {
    IntegerChain chain;
    json transcript = json::array();

    int dim() const { return chain.dim(); }

    /// Run check_sphere and throw a FalsificationAlert on failure.
    void certify(const std::string& context) const {
        SphereReport rep = check_sphere(chain);
        if (!rep.ok)
            throw FalsificationAlert("sphere certificate failed (" + context + "): " + rep.reason);
    }

    void log(json entry) { transcript.push_back(std::move(entry)); }
};

/// Flip a witness's orientation in place (used to normalize linking signs).
inline void flip_orientation(SphereWitness& w) {
    w.chain = -w.chain;
    w.log(json{{"step", "flip_orientation"}});
}

} // namespace linkcert

#endif
