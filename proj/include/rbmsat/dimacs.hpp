#pragma once

// DIMACS CNF / uniform-weight WCNF reader and canonical DIMACS writer.

#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rbmsat/cnf.hpp"

namespace rbmsat {

class ParseError : public std::runtime_error {
   public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

   private:
    std::size_t line_;
};

namespace detail {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

/// Splits on arbitrary whitespace (CR included, so CRLF files work).
class Tokenizer {
   public:
    explicit Tokenizer(std::string_view line) : rest_(line) {}
    std::optional<std::string_view> next() {
        std::size_t i = 0;
        while (i < rest_.size() && is_space(rest_[i]))
            ++i;
        if (i == rest_.size())
            return std::nullopt;
        std::size_t j = i;
        while (j < rest_.size() && !is_space(rest_[j]))
            ++j;
        auto tok = rest_.substr(i, j - i);
        rest_ = rest_.substr(j);
        return tok;
    }

   private:
    std::string_view rest_;
};

inline long long to_integer(std::string_view tok, std::size_t line) {
    long long value = 0;
    const auto* first = tok.data();
    if (!tok.empty() && tok.front() == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line, "expected an integer, got '" + std::string(tok) + "'");
    return value;
}

}  // namespace detail

/// Parses DIMACS `p cnf N C` or unweighted `p wcnf N C [top]`. For WCNF every
/// clause weight must be identical; weighted instances are rejected.
inline Formula parse_dimacs(std::istream& in, std::string source_name = {}) {
    Formula f;
    f.source_name = std::move(source_name);

    bool have_header = false;
    bool weighted = false;
    long long declared_clauses = 0;
    std::optional<long long> common_weight;

    Clause current;
    bool expecting_weight = true;
    std::size_t clause_start_line = 0;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::Tokenizer tokens(line);
        auto first = tokens.next();
        if (!first)
            continue;
        if (first->front() == 'c')
            continue;
        if (*first == "%")
            break;  // SATLIB end marker
        if (*first == "p") {
            if (have_header)
                throw ParseError(lineno, "duplicate problem line");
            auto fmt = tokens.next();
            if (!fmt || (*fmt != "cnf" && *fmt != "wcnf"))
                throw ParseError(lineno, "malformed header: expected 'p cnf' or 'p wcnf'");
            weighted = *fmt == "wcnf";
            auto n = tokens.next();
            auto c = tokens.next();
            if (!n || !c)
                throw ParseError(lineno, "malformed header: missing counts");
            const long long nv = detail::to_integer(*n, lineno);
            declared_clauses = detail::to_integer(*c, lineno);
            if (nv < 1 || nv > std::numeric_limits<std::uint32_t>::max() - 1)
                throw ParseError(lineno, "malformed header: variable count must be positive");
            if (declared_clauses < 0)
                throw ParseError(lineno, "malformed header: negative clause count");
            if (weighted) {
                if (auto top = tokens.next())
                    (void)detail::to_integer(*top, lineno);
            }
            if (tokens.next())
                throw ParseError(lineno, "malformed header: trailing tokens");
            f.num_variables = static_cast<std::uint32_t>(nv);
            have_header = true;
            continue;
        }
        if (!have_header)
            throw ParseError(lineno, "clause data before problem line");

        for (auto tok = first; tok; tok = tokens.next()) {
            const long long v = detail::to_integer(*tok, lineno);
            if (current.empty() && (!weighted || !expecting_weight))
                clause_start_line = lineno;
            if (weighted && expecting_weight) {
                if (v < 1)
                    throw ParseError(lineno, "clause weight must be positive");
                if (common_weight && *common_weight != v)
                    throw ParseError(lineno,
                                     "non-uniform clause weights; only unweighted MaxSAT is "
                                     "supported");
                common_weight = v;
                expecting_weight = false;
                clause_start_line = lineno;
                continue;
            }
            if (v == 0) {
                if (current.empty())
                    throw ParseError(lineno, "zero-length clause");
                if (static_cast<long long>(f.clauses.size()) == declared_clauses)
                    throw ParseError(lineno, "more clauses than declared");
                f.clauses.push_back(std::move(current));
                current.clear();
                expecting_weight = true;
                continue;
            }
            const long long mag = v < 0 ? -v : v;
            if (mag > static_cast<long long>(f.num_variables))
                throw ParseError(lineno, "literal " + std::to_string(v) +
                                             " exceeds declared variable count " +
                                             std::to_string(f.num_variables));
            current.push_back(Literal::from_dimacs(v));
        }
    }
    if (!have_header)
        throw ParseError(lineno, "missing problem line");
    if (!current.empty() || (weighted && !expecting_weight))
        throw ParseError(clause_start_line, "unterminated clause at end of input");
    if (static_cast<long long>(f.clauses.size()) != declared_clauses)
        throw ParseError(lineno, "declared " + std::to_string(declared_clauses) +
                                     " clauses, found " + std::to_string(f.clauses.size()));
    validate(f);
    return f;
}

inline Formula parse_dimacs(std::string_view text, std::string source_name = {}) {
    std::istringstream in{std::string(text)};
    return parse_dimacs(in, std::move(source_name));
}

inline Formula parse_dimacs_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    auto name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    return parse_dimacs(in, name);
}

/// Canonical DIMACS: header then one clause per line.
inline void write_dimacs(const Formula& f, std::ostream& out) {
    out << "p cnf " << f.num_variables << ' ' << f.num_clauses() << '\n';
    for (const auto& c : f.clauses) {
        for (const auto& l : c)
            out << l.to_dimacs() << ' ';
        out << "0\n";
    }
}

inline std::string to_dimacs(const Formula& f) {
    std::ostringstream out;
    write_dimacs(f, out);
    return out.str();
}

}  // namespace rbmsat
