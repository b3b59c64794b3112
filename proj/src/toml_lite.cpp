#include "nudge/toml_lite.hpp"

#include "nudge/errors.hpp"

#include <cctype>
#include <sstream>

namespace nudge {

using nlohmann::json;

namespace {

class LineParser {
public:
    LineParser(const std::string& text, std::size_t lineno) : s_(text), line_(lineno) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) {
            ++pos_;
        }
    }

    bool at_end_or_comment() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    std::string key() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                s_[pos_] == '-')) {
            ++pos_;
        }
        if (pos_ == start) {
            fail("expected a key");
        }
        return s_.substr(start, pos_ - start);
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    json value() {
        skip_ws();
        if (pos_ >= s_.size()) {
            fail("missing value");
        }
        const char c = s_[pos_];
        if (c == '"') {
            return string();
        }
        if (c == '[') {
            return array();
        }
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return true;
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return false;
        }
        return number();
    }

private:
    json string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) {
                    fail("unterminated escape");
                }
                const char e = s_[pos_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
            }
            out.push_back(c);
        }
        if (pos_ >= s_.size()) {
            fail("unterminated string");
        }
        ++pos_;
        return out;
    }

    json array() {
        ++pos_;
        json out = json::array();
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(value());
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    return out;
                }
                continue;
            }
            expect(']');
            return out;
        }
    }

    json number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == '.' ||
                                    s_[pos_] == 'e' || s_[pos_] == 'E' || s_[pos_] == '_')) {
            ++pos_;
        }
        std::string text;
        for (char c : s_.substr(start, pos_ - start)) {
            if (c != '_') {
                text.push_back(c);
            }
        }
        if (text.empty()) {
            fail("unrecognized value");
        }
        const bool is_float = text.find_first_of(".eE") != std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double v = std::stod(text, &used);
                if (used == text.size()) {
                    return v;
                }
            } else {
                const long long v = std::stoll(text, &used);
                if (used == text.size()) {
                    return v;
                }
            }
        } catch (const std::exception&) {
        }
        fail("malformed number '" + text + "'");
    }

    const std::string& s_;
    std::size_t line_;
    std::size_t pos_{0};
};

} // namespace

json parse_toml_lite(const std::string& text) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        LineParser p(line, lineno);
        if (p.at_end_or_comment()) {
            continue;
        }
        if (p.consume('[')) {
            table = &root;
            while (true) {
                const std::string name = p.key();
                if (!table->contains(name)) {
                    (*table)[name] = json::object();
                } else if (!(*table)[name].is_object()) {
                    p.fail("'" + name + "' is not a table");
                }
                table = &(*table)[name];
                if (!p.consume('.')) {
                    p.expect(']');
                    break;
                }
            }
            if (!p.at_end_or_comment()) {
                p.fail("trailing characters after table header");
            }
            continue;
        }
        const std::string key = p.key();
        p.expect('=');
        json value = p.value();
        if (!p.at_end_or_comment()) {
            p.fail("trailing characters after value");
        }
        if (table->contains(key)) {
            p.fail("duplicate key '" + key + "'");
        }
        (*table)[key] = std::move(value);
    }
    return root;
}

} // namespace nudge
