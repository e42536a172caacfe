#pragma once

// Plain-text configuration documents.
//
//     # comment
//     kind = grid
//     nx = 3
//     ny = 3
//     J = 1
//     disorder.delta = 2.5
//     run.deltas = [1, 2, 4]
//
// Values are kept as their literal text, so parse -> emit -> parse is exact;
// typed accessors convert on demand.  See docs/config-format.md.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tbsim/error.hpp"
#include "tbsim/lattice.hpp"

namespace tbsim {

// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[32];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, const std::string& key) {
    const std::string s(trim(text));
    if (s.empty()) fail(ErrorKind::ConfigError, "empty number for key '" + key + "'");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        fail(ErrorKind::ConfigError, "bad number '" + s + "' for key '" + key + "'");
    return v;
}

}  // namespace detail

class ConfigDocument {
public:
    static ConfigDocument parse(std::string_view text) {
        ConfigDocument doc;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto eol = text.find('\n', pos);
            if (eol == std::string_view::npos) eol = text.size();
            auto line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string value(detail::trim(line.substr(eq + 1)));
            if (key.empty() || value.empty())
                fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": empty key or value");
            if (doc.has(key))
                fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            doc.entries_.emplace_back(key, value);
        }
        return doc;
    }

    static ConfigDocument load(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorKind::IoError, "cannot open config '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    std::string emit() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
        return out;
    }

    bool has(const std::string& key) const { return find(key) != nullptr; }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    const std::string& raw(const std::string& key) const {
        if (const auto* v = find(key)) return *v;
        fail(ErrorKind::ConfigError, "missing key '" + key + "'");
    }

    std::string get_string(const std::string& key) const {
        std::string v = raw(key);
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        return v;
    }

    double get_double(const std::string& key) const { return detail::parse_double(raw(key), key); }

    std::uint64_t get_uint(const std::string& key) const {
        const auto& v = raw(key);
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            fail(ErrorKind::ConfigError, "bad unsigned integer '" + v + "' for key '" + key + "'");
        return out;
    }

    bool is_array(const std::string& key) const {
        const auto& v = raw(key);
        return !v.empty() && v.front() == '[';
    }

    std::vector<double> get_array(const std::string& key) const {
        const auto& v = raw(key);
        if (v.size() < 2 || v.front() != '[' || v.back() != ']')
            fail(ErrorKind::ConfigError, "key '" + key + "' is not an array");
        std::vector<double> out;
        const std::string_view body = detail::trim(std::string_view(v).substr(1, v.size() - 2));
        if (body.empty()) return out;
        std::size_t pos = 0;
        while (pos <= body.size()) {
            auto comma = body.find(',', pos);
            if (comma == std::string_view::npos) comma = body.size();
            out.push_back(detail::parse_double(body.substr(pos, comma - pos), key));
            pos = comma + 1;
        }
        return out;
    }

    void set_raw(const std::string& key, std::string value) {
        for (auto& [k, v] : entries_) {
            if (k == key) {
                v = std::move(value);
                return;
            }
        }
        entries_.emplace_back(key, std::move(value));
    }

    void set(const std::string& key, double v) { set_raw(key, format_double(v)); }
    void set(const std::string& key, std::uint64_t v) { set_raw(key, std::to_string(v)); }
    void set(const std::string& key, const std::string& v) { set_raw(key, v); }
    void set(const std::string& key, const char* v) { set_raw(key, v); }
    void set(const std::string& key, const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
        set_raw(key, s + "]");
    }

    friend bool operator==(const ConfigDocument&, const ConfigDocument&) = default;

private:
    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }

    std::vector<std::pair<std::string, std::string>> entries_;
};

// Recipe for a LatticeSpec: geometry, couplings, and on-site landscape.
// The detunings of the materialized spec are the sum of the explicit
// detunings, the disorder draw, and the Stark ramp (each optional).
struct LatticeConfig {
    Geometry kind = Geometry::Chain;
    std::size_t nx = 2;
    std::size_t ny = 1;
    std::variant<double, std::vector<double>> J = 1.0;
    // Site index, or one of "edge", "center", "corner".
    std::string source = "0";
    std::optional<std::vector<double>> detunings;
    std::optional<DisorderSpec> disorder;
    std::optional<StarkField> stark;

    LatticeSpec materialize() const {
        const double J0 = std::holds_alternative<double>(J) ? std::get<double>(J) : 1.0;
        LatticeSpec spec = kind == Geometry::Chain ? build_chain(nx, J0) : build_grid(nx, ny, J0);
        if (const auto* per_bond = std::get_if<std::vector<double>>(&J))
            spec = spec.with_bond_couplings(*per_bond);
        spec = spec.with_source(resolve_source(spec, source));
        std::vector<double> eps(spec.site_count(), 0.0);
        if (detunings) {
            if (detunings->size() != eps.size())
                fail(ErrorKind::ConfigError, "detunings length must equal site count");
            eps = *detunings;
        }
        if (disorder) {
            const auto d = disorder_detunings(spec.site_count(), *disorder);
            for (std::size_t i = 0; i < eps.size(); ++i) eps[i] += d[i];
        }
        if (stark) {
            const auto s = stark_detunings(spec, *stark);
            for (std::size_t i = 0; i < eps.size(); ++i) eps[i] += s[i];
        }
        return spec.with_detunings(std::move(eps));
    }

    static std::size_t resolve_source(const LatticeSpec& spec, const std::string& name) {
        if (name == "edge" || name == "corner") return 0;
        if (name == "center" || name == "centre") return center_site(spec);
        std::size_t idx = 0;
        const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
        if (ec != std::errc{} || ptr != name.data() + name.size())
            fail(ErrorKind::ConfigError, "bad source '" + name + "'");
        if (idx >= spec.site_count()) fail(ErrorKind::InvalidGeometry, "source site out of range");
        return idx;
    }

    static LatticeConfig from_document(const ConfigDocument& doc) {
        LatticeConfig c;
        const std::string kind = doc.has("kind") ? doc.get_string("kind") : "chain";
        if (kind == "chain") {
            c.kind = Geometry::Chain;
            c.nx = static_cast<std::size_t>(doc.get_uint("sites"));
            c.ny = 1;
        } else if (kind == "grid") {
            c.kind = Geometry::Grid;
            c.nx = static_cast<std::size_t>(doc.get_uint("nx"));
            c.ny = static_cast<std::size_t>(doc.get_uint("ny"));
        } else {
            fail(ErrorKind::ConfigError, "kind must be 'chain' or 'grid', got '" + kind + "'");
        }
        if (doc.has("J")) {
            if (doc.is_array("J")) c.J = doc.get_array("J");
            else c.J = doc.get_double("J");
        }
        if (doc.has("source")) c.source = doc.get_string("source");
        if (doc.has("detunings")) c.detunings = doc.get_array("detunings");
        if (doc.has("disorder.delta")) {
            DisorderSpec d;
            d.delta = doc.get_double("disorder.delta");
            if (doc.has("disorder.seed")) d.seed = doc.get_uint("disorder.seed");
            if (doc.has("disorder.index")) d.index = doc.get_uint("disorder.index");
            c.disorder = d;
        }
        if (doc.has("stark.Fx") || doc.has("stark.Fy")) {
            StarkField f;
            if (doc.has("stark.Fx")) f.Fx = doc.get_double("stark.Fx");
            f.Fy = doc.has("stark.Fy") ? doc.get_double("stark.Fy") : f.Fx;
            if (doc.has("stark.origin")) f.origin = static_cast<std::size_t>(doc.get_uint("stark.origin"));
            c.stark = f;
        }
        return c;
    }

    void to_document(ConfigDocument& doc) const {
        if (kind == Geometry::Chain) {
            doc.set("kind", "chain");
            doc.set("sites", static_cast<std::uint64_t>(nx));
        } else {
            doc.set("kind", "grid");
            doc.set("nx", static_cast<std::uint64_t>(nx));
            doc.set("ny", static_cast<std::uint64_t>(ny));
        }
        std::visit([&](const auto& v) { doc.set("J", v); }, J);
        doc.set("source", source);
        if (detunings) doc.set("detunings", *detunings);
        if (disorder) {
            doc.set("disorder.delta", disorder->delta);
            doc.set("disorder.seed", disorder->seed);
            doc.set("disorder.index", disorder->index);
        }
        if (stark) {
            doc.set("stark.Fx", stark->Fx);
            doc.set("stark.Fy", stark->Fy);
            if (stark->origin) doc.set("stark.origin", static_cast<std::uint64_t>(*stark->origin));
        }
    }

    ConfigDocument to_document() const {
        ConfigDocument doc;
        to_document(doc);
        return doc;
    }
};

}  // namespace tbsim
