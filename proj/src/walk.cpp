#include "clab/walk.hpp"

#include "clab/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace clab {

bool Trajectory::consistent(const GroupBackend& backend) const {
    if (positions.size() != increments.size() + 1)
        return false;
    if (!positions[0].is_identity())
        return false;
    for (std::size_t j = 1; j < positions.size(); ++j)
        if (backend.multiply(positions[j - 1], increments[j - 1]) != positions[j])
            return false;
    return true;
}

Trajectory generate_trajectory(const DrivingMeasure& m, std::size_t n,
                               std::uint64_t master_seed, std::uint64_t index,
                               const std::string& stream_tag) {
    Trajectory t;
    t.master_seed = master_seed;
    t.index = index;
    t.stream_tag = stream_tag;
    t.increments.reserve(n);
    t.positions.reserve(n + 1);
    t.positions.push_back(m.backend().identity());
    CounterRng rng = CounterRng::stream(master_seed, stream_tag, index);
    for (std::size_t j = 0; j < n; ++j) {
        t.increments.push_back(m.sample(rng));
        t.positions.push_back(m.backend().multiply(t.positions.back(), t.increments.back()));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Cocycle

Cocycle Cocycle::length(const GroupBackend& backend) {
    Cocycle c;
    c.kind_ = Kind::Length;
    c.name_ = "length";
    c.backend_ = backend;
    c.endpoint_ = [](const GroupElement& z) {
        return static_cast<double>(word_length(z));
    };
    return c;
}

Cocycle Cocycle::additive(std::string name,
                          std::function<double(const GroupElement&)> summand) {
    Cocycle c;
    c.kind_ = Kind::AdditiveSum;
    c.name_ = std::move(name);
    c.summand_ = std::move(summand);
    return c;
}

Cocycle Cocycle::end_point(const GroupBackend& backend, std::string name,
                           std::function<double(const GroupElement&)> q, Kind kind) {
    if (kind == Kind::AdditiveSum)
        throw std::invalid_argument("end_point: additive kind is not an end-point cocycle");
    Cocycle c;
    c.kind_ = kind;
    c.name_ = std::move(name);
    c.backend_ = backend;
    c.endpoint_ = std::move(q);
    if (std::abs(c.endpoint_(GroupElement{})) > 0)
        throw std::invalid_argument("end_point: q(id) must be 0 so that Q_0 = 0");
    return c;
}

double Cocycle::eval(const Trajectory& t, std::size_t n) const {
    if (n > t.length())
        throw std::out_of_range("cocycle eval: prefix index exceeds trajectory length");
    if (kind_ == Kind::AdditiveSum) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j)
            acc += summand_(t.increments[j]);
        return acc;
    }
    return endpoint_(t.positions[n]);
}

double Cocycle::eval_shifted(const Trajectory& t, std::size_t offset, std::size_t len) const {
    if (offset + len > t.length())
        throw std::out_of_range("cocycle eval: shifted window exceeds trajectory length");
    if (kind_ == Kind::AdditiveSum) {
        double acc = 0;
        for (std::size_t j = offset; j < offset + len; ++j)
            acc += summand_(t.increments[j]);
        return acc;
    }
    if (kind_ == Kind::Length)
        return static_cast<double>(
            backend_.distance(t.positions[offset], t.positions[offset + len]));
    return endpoint_(backend_.left_quotient(t.positions[offset], t.positions[offset + len]));
}

double Cocycle::eval_position(const GroupElement& z) const {
    if (kind_ == Kind::AdditiveSum)
        throw std::invalid_argument("eval_position: additive cocycles have no end-point map");
    return endpoint_(z);
}

double Cocycle::eval_increment(const GroupElement& x) const {
    if (kind_ != Kind::AdditiveSum)
        throw std::invalid_argument("eval_increment: only additive cocycles sum increments");
    return summand_(x);
}

Cocycle additive_sign_cocycle() {
    return Cocycle::additive("additive_sign", [](const GroupElement& x) -> double {
        if (x.letters.empty())
            return 0.0;
        return static_cast<double>(x.letters.front().sign);
    });
}

Cocycle brooks_counting_cocycle(const GroupBackend& backend, const std::string& pattern) {
    GroupElement w = backend.parse(pattern);
    if (w.letters.size() < 1)
        throw std::invalid_argument("brooks cocycle: empty pattern");
    GroupElement winv = backend.inverse(w);
    auto count = [](const std::vector<Gen>& word, const std::vector<Gen>& pat) {
        if (word.size() < pat.size())
            return 0;
        int c = 0;
        for (std::size_t i = 0; i + pat.size() <= word.size(); ++i) {
            bool match = true;
            for (std::size_t j = 0; j < pat.size(); ++j)
                if (word[i + j] != pat[j]) {
                    match = false;
                    break;
                }
            c += match;
        }
        return c;
    };
    auto q = [w, winv, count](const GroupElement& z) -> double {
        return count(z.letters, w.letters) - count(z.letters, winv.letters);
    };
    return Cocycle::end_point(backend, "brooks[" + pattern + "]", q);
}

DefectSample defect(const Cocycle& c, const Trajectory& t, std::size_t n, std::size_t m) {
    if (n + m > t.length())
        throw std::out_of_range("defect: n + m exceeds trajectory length");
    DefectSample d;
    d.n = n;
    d.m = m;
    d.value = c.eval(t, n + m) - c.eval(t, n) - c.eval_shifted(t, n, m);
    return d;
}

Trajectory replace_increment(const GroupBackend& backend, const Trajectory& t,
                             std::size_t k, GroupElement replacement) {
    if (k < 1 || k > t.length())
        throw std::out_of_range("replace_increment: index must satisfy 1 <= k <= n");
    backend.check_element(replacement);
    Trajectory out = t;
    out.increments[k - 1] = backend.normalize(replacement.letters);
    for (std::size_t j = k; j <= out.length(); ++j)
        out.positions[j] = backend.multiply(out.positions[j - 1], out.increments[j - 1]);
    return out;
}

// ---------------------------------------------------------------------------
// Dyadic decomposition

namespace {

DyadicTerm defect_term(const Cocycle& c, const Trajectory& t, std::size_t offset,
                       std::size_t a, std::size_t b) {
    DyadicTerm term;
    term.offset = offset;
    term.a = a;
    term.b = b;
    term.value = c.eval_shifted(t, offset, a + b) - c.eval_shifted(t, offset, a) -
                 c.eval_shifted(t, offset + a, b);
    return term;
}

std::size_t floor_log2(std::size_t n) {
    std::size_t b = 0;
    while ((std::size_t{2} << b) <= n)
        ++b;
    return b;
}

} // namespace

DyadicDecomposition dyadic_decompose(const Cocycle& c, const Trajectory& t,
                                     std::size_t block_exponent) {
    std::size_t n = t.length();
    if (n < 1)
        throw std::out_of_range("dyadic decomposition: trajectory must have length >= 1");
    std::size_t m_top = floor_log2(n);
    std::size_t M = block_exponent;
    if (M > m_top)
        throw std::out_of_range("dyadic decomposition: block exponent exceeds log2(n)");

    DyadicDecomposition out;
    out.n = n;
    out.block_exponent = M;
    out.q_n = c.eval(t, n);

    // Binary-carry boundary defects: peel the leading power of two off n
    // repeatedly; each peel contributes Psi_{2^b, r} o theta_offset when a
    // remainder r is left.
    std::size_t offset = 0, rem = n;
    while (rem > 0) {
        std::size_t blk = std::size_t{1} << floor_log2(rem);
        std::size_t r = rem - blk;
        if (r > 0)
            out.boundary.push_back(defect_term(c, t, offset, blk, r));
        offset += blk;
        rem = r;
    }

    std::size_t nb = n >> M; // number of complete blocks
    out.block_terms.reserve(nb);
    for (std::size_t j = 0; j < nb; ++j)
        out.block_terms.push_back(c.eval_shifted(t, j << M, std::size_t{1} << M));

    // Regrouping residue R_M: base terms past the blocks plus leftover
    // defect terms in the layers the blocks absorb (i <= M).
    for (std::size_t j = nb << M; j < n; ++j)
        out.base_terms.push_back(c.eval_shifted(t, j, 1));
    for (std::size_t i = 1; i <= M; ++i) {
        std::size_t blocklen = std::size_t{1} << (i - 1);
        std::size_t covered = nb << (M - i);
        std::size_t total = n >> i;
        for (std::size_t j = covered; j < total; ++j)
            out.residue_terms.push_back(
                defect_term(c, t, j << i, blocklen, blocklen));
    }

    // Defect layers above the block scale.
    for (std::size_t i = M + 1; i <= m_top; ++i) {
        std::size_t blocklen = std::size_t{1} << (i - 1);
        std::size_t total = n >> i;
        for (std::size_t j = 0; j < total; ++j)
            out.layer_terms.push_back(defect_term(c, t, j << i, blocklen, blocklen));
    }

    std::vector<double> parts;
    parts.reserve(out.boundary.size() + out.block_terms.size() + out.base_terms.size() +
                  out.residue_terms.size() + out.layer_terms.size());
    for (const auto& term : out.boundary)
        parts.push_back(term.value);
    for (double v : out.block_terms)
        parts.push_back(v);
    for (double v : out.base_terms)
        parts.push_back(v);
    for (const auto& term : out.residue_terms)
        parts.push_back(term.value);
    for (const auto& term : out.layer_terms)
        parts.push_back(term.value);
    double acc = 0;
    for (double v : parts)
        acc += v;
    out.reconstruction = acc;
    return out;
}

void enumerate_increment_tuples(
    const DrivingMeasure& m, std::size_t n,
    const std::function<void(const std::vector<GroupElement>&, double)>& fn,
    std::size_t budget) {
    const auto* tbl = m.table();
    if (!tbl)
        throw std::invalid_argument("tuple enumeration needs a finite-support measure");
    double tuples = std::pow(static_cast<double>(tbl->size()), static_cast<double>(n));
    if (tuples > static_cast<double>(budget))
        throw BudgetError("tuple enumeration of " +
                          std::to_string(static_cast<unsigned long long>(tuples)) +
                          " cases exceeds the budget of " + std::to_string(budget));
    std::vector<GroupElement> tuple(n);
    auto recurse = [&](auto&& self, std::size_t depth, double prob) -> void {
        if (depth == n) {
            fn(tuple, prob);
            return;
        }
        for (const auto& [g, p] : *tbl) {
            tuple[depth] = g;
            self(self, depth + 1, prob * p);
        }
    };
    recurse(recurse, 0, 1.0);
}

} // namespace clab
