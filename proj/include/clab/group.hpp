#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace clab {

/// One letter of a word: a generator symbol or its inverse.
/// In factors of order 2 the generator is an involution and sign is +1.
struct Gen {
    std::uint8_t index = 0;
    std::int8_t sign = +1;

    friend bool operator==(const Gen&, const Gen&) = default;
    friend auto operator<=>(const Gen&, const Gen&) = default;
};

/// A group element as a word in backend normal form. Immutable by
/// convention: every element handed out by GroupBackend is already reduced,
/// and all operations return fresh values.
struct GroupElement {
    std::vector<Gen> letters;

    bool is_identity() const { return letters.empty(); }
    std::size_t length() const { return letters.size(); }

    friend bool operator==(const GroupElement&, const GroupElement&) = default;
    friend auto operator<=>(const GroupElement&, const GroupElement&) = default;
};

/// Exact word length of a normal-form element; equals the Cayley-graph
/// distance to the identity on the supported backends.
inline std::int64_t word_length(const GroupElement& g) {
    return static_cast<std::int64_t>(g.letters.size());
}

enum class BackendKind { FreeGroup, FreeProductOfCyclics, IntegerLine };

/// A group presentation with normal forms, exact geodesic word metric and
/// Gromov products. Supported kinds:
///   - FreeGroup(k): free group of rank k (Cayley graph is a tree),
///   - FreeProductOfCyclics(m_1..m_r): free product Z_{m_1} * ... * Z_{m_r},
///   - IntegerLine: Z, the amenable control case.
///
/// Internally all three are free products of cyclic factors: factor order 0
/// means an infinite cyclic factor. Normal form is the alternating syllable
/// form with geodesic exponent representation (exponent e in a factor of
/// order m is written with min(e, m-e) letters).
///
/// Read-only after construction; elements are safe to share across workers.
class GroupBackend {
  public:
    static GroupBackend free_group(int rank);
    static GroupBackend free_product_of_cyclics(std::vector<std::uint32_t> orders);
    static GroupBackend integer_line();

    BackendKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    int rank() const { return static_cast<int>(orders_.size()); }
    std::uint32_t factor_order(int i) const { return orders_[static_cast<std::size_t>(i)]; }

    /// True when the Cayley graph is a tree (free groups, products of
    /// involutions, the integer line). Cyclic factors of order >= 3
    /// introduce cycles.
    bool is_tree() const { return tree_; }

    /// Nonamenable backends are the ones with exponential growth: any free
    /// product with >= 2 factors except the infinite dihedral Z2 * Z2, and
    /// free groups of rank >= 2.
    bool nonamenable() const;

    GroupElement identity() const { return GroupElement{}; }

    /// Standard generators a, b, c, ... as one-letter elements.
    GroupElement generator(int index, int sign = +1) const;

    /// All one-letter elements (each generator and, for non-involutions,
    /// its inverse). This is the standard symmetric generating set.
    std::vector<GroupElement> standard_generators() const;

    /// Full normalization of an arbitrary letter sequence.
    GroupElement normalize(const std::vector<Gen>& letters) const;

    /// Appends one letter to a normal-form word, keeping it normal
    /// (single-step reduction at the boundary). The building block of
    /// multiply(); exposed for incremental walkers.
    void append_letter(std::vector<Gen>& word, Gen x) const { push_letter(word, x); }

    /// Product of two normal-form elements; cancellation happens at the
    /// boundary only, so walk updates cost O(cancelled letters).
    GroupElement multiply(const GroupElement& g, const GroupElement& h) const;

    GroupElement inverse(const GroupElement& g) const;

    /// x^{-1} y; on tree backends built directly from the common prefix in
    /// O(|result|) instead of forming the inverse.
    GroupElement left_quotient(const GroupElement& x, const GroupElement& y) const;

    /// Exact word-metric distance d(x, y) = |x^{-1} y|.
    std::int64_t distance(const GroupElement& x, const GroupElement& y) const;

    /// Doubled Gromov product 2 (x, y)_w = d(w,x) + d(w,y) - d(x,y).
    /// Kept as an integer so identities can be checked exactly; the product
    /// itself is a half-integer in word metrics.
    std::int64_t gromov_product_doubled(const GroupElement& x, const GroupElement& y,
                                        const GroupElement& w) const;

    double gromov_product(const GroupElement& x, const GroupElement& y,
                          const GroupElement& w) const {
        return 0.5 * static_cast<double>(gromov_product_doubled(x, y, w));
    }

    /// Renders a word as plain text: a, b, c ... for generators, uppercase
    /// for inverses, "id" for the identity.
    std::string render(const GroupElement& g) const;

    /// Parses the render format back into a normal-form element.
    GroupElement parse(const std::string& text) const;

    /// Validates that an element only uses letters this backend knows;
    /// throws std::invalid_argument otherwise.
    void check_element(const GroupElement& g) const;

    friend bool operator==(const GroupBackend& a, const GroupBackend& b) {
        return a.kind_ == b.kind_ && a.orders_ == b.orders_;
    }

  private:
    GroupBackend(BackendKind kind, std::vector<std::uint32_t> orders, std::string name);

    void push_letter(std::vector<Gen>& word, Gen x) const;

    BackendKind kind_;
    std::vector<std::uint32_t> orders_; // 0 = infinite cyclic factor
    std::string name_;
    bool tree_ = false;
};

} // namespace clab
