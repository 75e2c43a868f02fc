#pragma once

// Minimal TOML subset for flat configuration files: bare keys, scalars
// (string, integer, float including inf, boolean) and one-line arrays of
// scalars. Tables and multi-line values are rejected.

#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "zakident/errors.hpp"

namespace zakident::toml_lite {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, Array> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }

    const std::string& as_string() const {
        if (!is_string()) throw io_error("toml: expected a string");
        return std::get<std::string>(data);
    }
    std::int64_t as_int() const {
        if (auto* v = std::get_if<std::int64_t>(&data)) return *v;
        throw io_error("toml: expected an integer");
    }
    double as_double() const {
        if (auto* v = std::get_if<std::int64_t>(&data)) return static_cast<double>(*v);
        if (auto* v = std::get_if<double>(&data)) return *v;
        throw io_error("toml: expected a number");
    }
    bool as_bool() const {
        if (auto* v = std::get_if<bool>(&data)) return *v;
        throw io_error("toml: expected a boolean");
    }
    const Array& as_array() const {
        if (!is_array()) throw io_error("toml: expected an array");
        return std::get<Array>(data);
    }
};

using Table = std::map<std::string, Value>;

namespace detail {

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;
    int line = 1;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    void skip_ws() {
        while (!done() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw io_error("toml line " + std::to_string(line) + ": " + msg);
    }
};

inline std::string parse_basic_string(Cursor& c) {
    // opening quote already consumed
    std::string out;
    while (!c.done() && c.peek() != '"') {
        char ch = c.s[c.pos++];
        if (ch == '\\') {
            if (c.done()) c.fail("dangling escape");
            char e = c.s[c.pos++];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: c.fail("unsupported escape sequence");
            }
        } else if (ch == '\n') {
            c.fail("unterminated string");
        } else {
            out += ch;
        }
    }
    if (c.done()) c.fail("unterminated string");
    ++c.pos; // closing quote
    return out;
}

inline Value parse_scalar_token(Cursor& c, const std::string& tok) {
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    const auto inf = std::numeric_limits<double>::infinity();
    if (tok == "inf" || tok == "+inf") return Value{inf};
    if (tok == "-inf") return Value{-inf};
    if (tok == "nan") return Value{std::numeric_limits<double>::quiet_NaN()};
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (is_float) {
            const double v = std::stod(tok, &used);
            if (used != tok.size()) c.fail("bad number: " + tok);
            return Value{v};
        }
        const std::int64_t v = std::stoll(tok, &used);
        if (used != tok.size()) c.fail("bad number: " + tok);
        return Value{v};
    } catch (const std::exception&) {
        c.fail("bad value: " + tok);
    }
}

inline Value parse_value(Cursor& c);

inline Value parse_array(Cursor& c) {
    // opening bracket already consumed
    Array items;
    c.skip_ws();
    if (!c.done() && c.peek() == ']') {
        ++c.pos;
        return Value{std::move(items)};
    }
    while (true) {
        c.skip_ws();
        items.push_back(parse_value(c));
        c.skip_ws();
        if (c.done()) c.fail("unterminated array");
        const char ch = c.s[c.pos++];
        if (ch == ']') break;
        if (ch != ',') c.fail("expected ',' or ']' in array");
    }
    return Value{std::move(items)};
}

inline Value parse_value(Cursor& c) {
    c.skip_ws();
    if (c.done()) c.fail("missing value");
    const char ch = c.peek();
    if (ch == '"') {
        ++c.pos;
        return Value{parse_basic_string(c)};
    }
    if (ch == '[') {
        ++c.pos;
        return parse_array(c);
    }
    std::string tok;
    while (!c.done()) {
        const char t = c.peek();
        if (t == ' ' || t == '\t' || t == ',' || t == ']' || t == '#' || t == '\n') break;
        tok += t;
        ++c.pos;
    }
    if (tok.empty()) c.fail("missing value");
    return parse_scalar_token(c, tok);
}

} // namespace detail

inline Table parse(const std::string& text) {
    Table table;
    detail::Cursor c{text};
    while (!c.done()) {
        c.skip_ws();
        if (!c.done() && (c.peek() == '\n' || c.peek() == '\r')) {
            if (c.peek() == '\r') ++c.pos;
            if (!c.done() && c.peek() == '\n') ++c.pos;
            ++c.line;
            continue;
        }
        if (c.done()) break;
        if (c.peek() == '#') {
            while (!c.done() && c.peek() != '\n') ++c.pos;
            continue;
        }
        if (c.peek() == '[') c.fail("tables are not supported in this config");

        std::string key;
        while (!c.done()) {
            const char ch = c.peek();
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') {
                key += ch;
                ++c.pos;
            } else {
                break;
            }
        }
        if (key.empty()) c.fail("expected a key");
        c.skip_ws();
        if (c.done() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
        ++c.pos;
        Value v = detail::parse_value(c);
        c.skip_ws();
        if (!c.done() && c.peek() == '#')
            while (!c.done() && c.peek() != '\n') ++c.pos;
        if (!c.done() && c.peek() == '\r') ++c.pos;
        if (!c.done() && c.peek() != '\n') c.fail("trailing characters after value of '" + key + "'");
        if (table.count(key)) c.fail("duplicate key '" + key + "'");
        table.emplace(std::move(key), std::move(v));
    }
    return table;
}

} // namespace zakident::toml_lite
