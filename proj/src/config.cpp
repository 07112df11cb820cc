#include "ddsde/config.hpp"

#include "ddsde/error.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ddsde {

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    nlohmann::json document() {
        nlohmann::json out = nlohmann::json::object();
        while (true) {
            skip_blank(true);
            if (done()) break;
            const int line = line_;
            const std::string key = identifier();
            skip_blank(false);
            expect('=');
            skip_blank(false);
            if (out.contains(key)) fail("duplicate key '" + key + "'", line);
            out[key] = value();
            skip_blank(false);
            if (!done() && peek() != '\n') fail("expected end of line after value");
        }
        return out;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;

    bool done() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    [[noreturn]] void fail(const std::string& msg, int line = -1) const {
        throw Error(ErrorCode::ConfigError,
                    "line " + std::to_string(line < 0 ? line_ : line) + ": " + msg);
    }

    void advance() {
        if (text_[pos_] == '\n') ++line_;
        ++pos_;
    }

    // Skips spaces and comments; newlines too when `newlines` is set.
    void skip_blank(bool newlines) {
        while (!done()) {
            const char c = peek();
            if (c == '#') {
                while (!done() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
                advance();
            } else {
                break;
            }
        }
    }

    void expect(char c) {
        if (done() || peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    std::string identifier() {
        const std::size_t start = pos_;
        while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) advance();
        if (start == pos_) fail("expected a key");
        return std::string(text_.substr(start, pos_ - start));
    }

    nlohmann::json value() {
        if (done()) fail("missing value");
        const char c = peek();
        if (c == '"') return string_value();
        if (c == '[') return list_value();
        if (c == '{') return table_value();
        if (text_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return number_value();
    }

    nlohmann::json string_value() {
        expect('"');
        std::string out;
        while (!done() && peek() != '"') {
            if (peek() == '\n') fail("unterminated string");
            if (peek() == '\\') {
                advance();
                if (done()) fail("unterminated string");
            }
            out.push_back(peek());
            advance();
        }
        expect('"');
        return out;
    }

    nlohmann::json number_value() {
        const std::size_t start = pos_;
        bool is_float = false;
        while (!done()) {
            const char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-') {
                advance();
            } else if (c == '.' || c == 'e' || c == 'E') {
                is_float = true;
                advance();
            } else {
                break;
            }
        }
        const std::string_view token = text_.substr(start, pos_ - start);
        if (token.empty()) fail("expected a value");
        if (!is_float) {
            long long v = 0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec == std::errc() && ptr == token.data() + token.size()) return v;
        }
        double v = 0.0;
        const char* first = token.data();
        if (*first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            fail("malformed number '" + std::string(token) + "'");
        }
        return v;
    }

    nlohmann::json list_value() {
        expect('[');
        nlohmann::json out = nlohmann::json::array();
        skip_blank(true);
        while (!done() && peek() != ']') {
            out.push_back(value());
            skip_blank(true);
            if (!done() && peek() == ',') {
                advance();
                skip_blank(true);
            } else {
                break;
            }
        }
        expect(']');
        return out;
    }

    nlohmann::json table_value() {
        expect('{');
        nlohmann::json out = nlohmann::json::object();
        skip_blank(true);
        while (!done() && peek() != '}') {
            const std::string key = identifier();
            skip_blank(true);
            expect('=');
            skip_blank(true);
            if (out.contains(key)) fail("duplicate key '" + key + "'");
            out[key] = value();
            skip_blank(true);
            if (!done() && peek() == ',') {
                advance();
                skip_blank(true);
            } else {
                break;
            }
        }
        expect('}');
        return out;
    }
};

} // namespace

nlohmann::json parse_config_text(std::string_view text) { return Parser(text).document(); }

nlohmann::json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_config_text(buffer.str());
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

} // namespace ddsde
