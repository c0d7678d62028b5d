#include "clab/group.hpp"

#include <algorithm>
#include <stdexcept>

namespace clab {

GroupBackend::GroupBackend(BackendKind kind, std::vector<std::uint32_t> orders,
                           std::string name)
    : kind_(kind), orders_(std::move(orders)), name_(std::move(name)) {
    if (orders_.empty() || orders_.size() > 26)
        throw std::invalid_argument("backend needs between 1 and 26 generator symbols");
    for (auto m : orders_)
        if (m == 1)
            throw std::invalid_argument("cyclic factor of order 1 is trivial");
    tree_ = std::all_of(orders_.begin(), orders_.end(),
                        [](std::uint32_t m) { return m == 0 || m == 2; });
}

GroupBackend GroupBackend::free_group(int rank) {
    if (rank < 1)
        throw std::invalid_argument("free group rank must be >= 1");
    return GroupBackend(BackendKind::FreeGroup,
                        std::vector<std::uint32_t>(static_cast<std::size_t>(rank), 0u),
                        "F" + std::to_string(rank));
}

GroupBackend GroupBackend::free_product_of_cyclics(std::vector<std::uint32_t> orders) {
    std::string name;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (i)
            name += "*";
        name += orders[i] == 0 ? "Z" : "Z" + std::to_string(orders[i]);
    }
    return GroupBackend(BackendKind::FreeProductOfCyclics, std::move(orders), name);
}

GroupBackend GroupBackend::integer_line() {
    return GroupBackend(BackendKind::IntegerLine, {0u}, "Z");
}

bool GroupBackend::nonamenable() const {
    if (orders_.size() < 2)
        return false;
    if (orders_.size() == 2 && orders_[0] == 2 && orders_[1] == 2)
        return false; // infinite dihedral
    return true;
}

GroupElement GroupBackend::generator(int index, int sign) const {
    if (index < 0 || index >= rank())
        throw std::invalid_argument("generator index out of range");
    Gen g{static_cast<std::uint8_t>(index), static_cast<std::int8_t>(sign)};
    return normalize({g});
}

std::vector<GroupElement> GroupBackend::standard_generators() const {
    std::vector<GroupElement> out;
    for (int i = 0; i < rank(); ++i) {
        out.push_back(generator(i, +1));
        if (factor_order(i) != 2)
            out.push_back(generator(i, -1));
    }
    return out;
}

void GroupBackend::check_element(const GroupElement& g) const {
    for (const Gen& x : g.letters) {
        if (x.index >= orders_.size())
            throw std::invalid_argument("malformed element: generator index " +
                                        std::to_string(x.index) + " out of range for " +
                                        name_);
        if (x.sign != +1 && x.sign != -1)
            throw std::invalid_argument("malformed element: letter sign must be +1 or -1");
    }
}

// Appends one letter to a normal-form prefix, keeping it in normal form.
// For infinite factors this is plain free reduction. For a finite factor of
// order m, the trailing syllable (a maximal run of letters with the same
// index; canonically all with the same sign) is merged with the new letter
// and rewritten with the geodesic exponent representation:
//   exponent e in (0, m) is written as e letters of sign +1 when e <= m - e,
//   otherwise as m - e letters of sign -1 (ties go to +1).
void GroupBackend::push_letter(std::vector<Gen>& word, Gen x) const {
    if (x.index >= orders_.size())
        throw std::invalid_argument("malformed element: generator index out of range");
    std::uint32_t m = orders_[x.index];
    if (m == 0) {
        if (!word.empty() && word.back().index == x.index && word.back().sign != x.sign)
            word.pop_back();
        else
            word.push_back(x);
        return;
    }
    // Trailing syllable with the same index.
    std::size_t run = 0;
    while (run < word.size() && word[word.size() - 1 - run].index == x.index)
        ++run;
    std::int64_t e = 0;
    if (run > 0)
        e = static_cast<std::int64_t>(word[word.size() - 1].sign) *
            static_cast<std::int64_t>(run);
    e += x.sign;
    std::int64_t em = ((e % m) + m) % m;
    word.resize(word.size() - run);
    if (em == 0)
        return;
    std::uint32_t len;
    std::int8_t sign;
    if (static_cast<std::uint32_t>(em) * 2 <= m) {
        len = static_cast<std::uint32_t>(em);
        sign = +1;
    } else {
        len = m - static_cast<std::uint32_t>(em);
        sign = -1;
    }
    for (std::uint32_t i = 0; i < len; ++i)
        word.push_back(Gen{x.index, sign});
}

GroupElement GroupBackend::normalize(const std::vector<Gen>& letters) const {
    GroupElement out;
    out.letters.reserve(letters.size());
    for (Gen x : letters)
        push_letter(out.letters, x);
    return out;
}

GroupElement GroupBackend::multiply(const GroupElement& g, const GroupElement& h) const {
    check_element(g);
    check_element(h);
    GroupElement out = g;
    out.letters.reserve(g.letters.size() + h.letters.size());
    for (Gen x : h.letters)
        push_letter(out.letters, x);
    return out;
}

GroupElement GroupBackend::inverse(const GroupElement& g) const {
    std::vector<Gen> rev;
    rev.reserve(g.letters.size());
    for (auto it = g.letters.rbegin(); it != g.letters.rend(); ++it)
        rev.push_back(Gen{it->index, static_cast<std::int8_t>(-it->sign)});
    // Re-normalization fixes self-inverse syllables (exponent m/2), whose
    // canonical sign is +1.
    return normalize(rev);
}

GroupElement GroupBackend::left_quotient(const GroupElement& x, const GroupElement& y) const {
    if (!tree_)
        return multiply(inverse(x), y);
    std::size_t n = std::min(x.letters.size(), y.letters.size());
    std::size_t lcp = 0;
    while (lcp < n && x.letters[lcp] == y.letters[lcp])
        ++lcp;
    // Past the common prefix nothing cancels: the two next letters differ,
    // and on tree backends (orders 0 or 2) letter-wise inversion of a
    // normal word stays normal.
    GroupElement out;
    out.letters.reserve(x.letters.size() + y.letters.size() - 2 * lcp);
    for (std::size_t i = x.letters.size(); i > lcp; --i) {
        Gen g = x.letters[i - 1];
        if (orders_[g.index] == 0)
            g.sign = static_cast<std::int8_t>(-g.sign);
        out.letters.push_back(g);
    }
    out.letters.insert(out.letters.end(), y.letters.begin() + static_cast<std::ptrdiff_t>(lcp),
                       y.letters.end());
    return out;
}

std::int64_t GroupBackend::distance(const GroupElement& x, const GroupElement& y) const {
    if (tree_) {
        // On trees the geodesic from x to y passes through the longest
        // common prefix vertex: d = |x| + |y| - 2 lcp.
        std::size_t n = std::min(x.letters.size(), y.letters.size());
        std::size_t lcp = 0;
        while (lcp < n && x.letters[lcp] == y.letters[lcp])
            ++lcp;
        return static_cast<std::int64_t>(x.letters.size() + y.letters.size() - 2 * lcp);
    }
    return word_length(multiply(inverse(x), y));
}

std::int64_t GroupBackend::gromov_product_doubled(const GroupElement& x,
                                                  const GroupElement& y,
                                                  const GroupElement& w) const {
    return distance(w, x) + distance(w, y) - distance(x, y);
}

std::string GroupBackend::render(const GroupElement& g) const {
    if (g.letters.empty())
        return "id";
    std::string out;
    out.reserve(g.letters.size());
    for (const Gen& x : g.letters) {
        char base = static_cast<char>('a' + x.index);
        out += x.sign > 0 ? base : static_cast<char>(base - 'a' + 'A');
    }
    return out;
}

GroupElement GroupBackend::parse(const std::string& text) const {
    if (text == "id" || text == "e" || text == "1" || text.empty())
        return identity();
    std::vector<Gen> letters;
    letters.reserve(text.size());
    for (char c : text) {
        Gen g;
        if (c >= 'a' && c <= 'z') {
            g.index = static_cast<std::uint8_t>(c - 'a');
            g.sign = +1;
        } else if (c >= 'A' && c <= 'Z') {
            g.index = static_cast<std::uint8_t>(c - 'A');
            g.sign = -1;
        } else {
            throw std::invalid_argument("cannot parse group element: bad character '" +
                                        std::string(1, c) + "' in \"" + text + "\"");
        }
        if (g.index >= orders_.size())
            throw std::invalid_argument("cannot parse group element: letter '" +
                                        std::string(1, c) + "' out of range for " + name_);
        letters.push_back(g);
    }
    return normalize(letters);
}

} // namespace clab
