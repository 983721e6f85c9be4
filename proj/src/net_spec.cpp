// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/net_spec.hpp"

#include <cctype>
#include <limits>
#include <set>

namespace silt {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    bool done() {
        skip_ws();
        return pos_ >= text_.size();
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        advance();
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            advance();
            return true;
        }
        return false;
    }

    int integer() {
        skip_ws();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("expected integer");
        long long value = 0;
        const int start_line = line_, start_col = col_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            value = value * 10 + (text_[pos_] - '0');
            if (value > std::numeric_limits<int>::max())
                throw SpecSyntaxError("integer literal out of range", start_line, start_col);
            advance();
        }
        return static_cast<int>(value);
    }

    [[noreturn]] void fail(const std::string& msg) {
        char found = pos_ < text_.size() ? text_[pos_] : '\0';
        std::string what = msg;
        if (found)
            what += std::string(", found '") + found + "'";
        else
            what += ", found end of input";
        throw SpecSyntaxError(what, line_, col_);
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

}  // namespace

NetworkSpec parse_network_spec(std::string_view text) {
    Cursor c(text);
    NetworkSpec spec;

    c.expect('N');
    c.expect('=');
    spec.depth = c.integer();
    c.expect(';');

    c.expect('S');
    c.expect('=');
    c.expect('{');
    if (!c.accept('}')) {
        do {
            c.expect('(');
            const int i = c.integer();
            c.expect(',');
            const int j = c.integer();
            c.expect(')');
            spec.skips.emplace_back(i, j);
        } while (c.accept(','));
        c.expect('}');
    }
    c.expect(';');

    c.expect('C');
    c.expect('=');
    c.expect('{');
    if (!c.accept('}')) {
        do {
            spec.cascades.push_back(c.integer());
        } while (c.accept(','));
        c.expect('}');
    }
    c.expect(';');

    c.expect('R');
    c.expect('=');
    c.expect('[');
    if (!c.accept(']')) {
        if (c.peek() == '(') {
            do {
                c.expect('(');
                const int l = c.integer();
                c.expect(',');
                const int b = c.integer();
                c.expect(')');
                spec.residual_blocks.push_back({l, b});
            } while (c.accept(','));
        } else {
            spec.residual_shorthand = true;
            spec.residual_count = c.integer();
        }
        c.expect(']');
    }
    c.accept(';');
    if (!c.done()) c.fail("unexpected trailing input");
    return spec;
}

std::vector<std::string> validate_spec(const NetworkSpec& spec) {
    std::vector<std::string> out;
    const int n = spec.depth;
    if (n < 2) out.push_back("depth must be at least 2, got " + std::to_string(n));

    std::set<std::pair<int, int>> seen;
    std::set<int> destinations;
    for (const auto& [i, j] : spec.skips) {
        const std::string tag = "skip (" + std::to_string(i) + ", " + std::to_string(j) + ")";
        if (i >= j) out.push_back(tag + ": skip requires i<j");
        if (i < 1 || j > n) out.push_back(tag + ": out of range for depth " + std::to_string(n));
        if (!seen.insert({i, j}).second) out.push_back(tag + ": duplicate skip pair");
        if (!destinations.insert(j).second)
            out.push_back(tag + ": another skip already targets layer " + std::to_string(j));
    }

    for (int cidx : spec.cascades) {
        if (cidx <= 1 || cidx > n)
            out.push_back("cascade " + std::to_string(cidx) + ": requires 1 < c <= " +
                          std::to_string(n));
    }

    if (spec.residual_shorthand) {
        if (spec.residual_count < 0)
            out.push_back("residual count must be nonnegative, got " +
                          std::to_string(spec.residual_count));
    } else {
        for (const auto& rb : spec.residual_blocks) {
            const std::string tag =
                "residual (" + std::to_string(rb.start) + ", " + std::to_string(rb.length) + ")";
            if (rb.start < 1) out.push_back(tag + ": start layer must be >= 1");
            if (rb.length < 1) out.push_back(tag + ": length must be >= 1");
            if (rb.start >= 1 && rb.length >= 1 && rb.start + rb.length > n)
                out.push_back(tag + ": residual block exceeds depth " + std::to_string(n));
        }
    }
    return out;
}

std::string to_string(const NetworkSpec& spec) {
    std::string s = "N=" + std::to_string(spec.depth) + "; S={";
    for (size_t i = 0; i < spec.skips.size(); ++i) {
        if (i) s += ",";
        s += "(" + std::to_string(spec.skips[i].first) + "," +
             std::to_string(spec.skips[i].second) + ")";
    }
    s += "}; C={";
    for (size_t i = 0; i < spec.cascades.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(spec.cascades[i]);
    }
    s += "}; R=[";
    if (spec.residual_shorthand) {
        s += std::to_string(spec.residual_count);
    } else {
        for (size_t i = 0; i < spec.residual_blocks.size(); ++i) {
            if (i) s += ",";
            s += "(" + std::to_string(spec.residual_blocks[i].start) + "," +
                 std::to_string(spec.residual_blocks[i].length) + ")";
        }
    }
    s += "]";
    return s;
}

}  // namespace silt
