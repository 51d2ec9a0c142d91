#include "schwartz/experiment.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace schwartz {

std::string to_string(ModelKind k) {
    switch (k) {
    case ModelKind::linear: return "linear";
    case ModelKind::burgers: return "burgers";
    case ModelKind::vorticity: return "vorticity";
    }
    return "?";
}

Viscosity ExperimentConfig::viscosity() const {
    Viscosity v;
    for (int i = 0; i < n; ++i) v.nu[i] = nu[i];
    return v;
}

Grid ExperimentConfig::make_grid() const {
    return schwartz::make_grid(n, std::span<const double>(L.data(), n),
                               std::span<const int>(P.data(), n), periodic);
}

namespace {

// Schema walker over a toml table; every error names the field and, when known, the line.
class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& field, const std::string& msg,
                           const toml::node* at = nullptr) const {
        std::ostringstream os;
        os << source_;
        if (at && at->source().begin.line > 0) os << ":" << at->source().begin.line;
        os << ": field '" << field << "': " << msg;
        throw ConfigError(os.str());
    }

    void allow(const toml::table& t, const std::string& prefix, std::set<std::string> keys) const {
        for (auto&& [k, v] : t) {
            const std::string key(k.str());
            if (!keys.count(key)) fail(prefix + key, "unknown field", &v);
        }
    }

    double number(const toml::node& v, const std::string& field) const {
        if (auto i = v.as_integer()) return static_cast<double>(i->get());
        if (auto f = v.as_floating_point()) return f->get();
        if (auto s = v.as_string()) {
            if (s->get() == "inf") return std::numeric_limits<double>::infinity();
        }
        fail(field, "expected a number", &v);
    }

    long long integer(const toml::node& v, const std::string& field) const {
        if (auto i = v.as_integer()) return i->get();
        fail(field, "expected an integer", &v);
    }

    bool boolean(const toml::node& v, const std::string& field) const {
        if (auto b = v.as_boolean()) return b->get();
        fail(field, "expected true or false", &v);
    }

    std::string string(const toml::node& v, const std::string& field) const {
        if (auto s = v.as_string()) return s->get();
        fail(field, "expected a string", &v);
    }

    const toml::table& table(const toml::node& v, const std::string& field) const {
        if (auto t = v.as_table()) return *t;
        fail(field, "expected a table", &v);
    }

    const toml::array& array(const toml::node& v, const std::string& field) const {
        if (auto a = v.as_array()) return *a;
        fail(field, "expected an array", &v);
    }

    // Scalar broadcast to all axes, or one value per axis.
    template <class T, class F>
    void per_axis(const toml::node& v, const std::string& field, std::array<T, kMaxDim>& out,
                  F&& conv) const {
        if (auto a = v.as_array()) {
            if (a->size() < 1 || a->size() > kMaxDim) fail(field, "expected 1 to 3 entries", &v);
            for (std::size_t i = 0; i < a->size(); ++i)
                out[i] = conv((*a)[i], field + "[" + std::to_string(i) + "]");
            per_axis_len_[field] = a->size();
        } else {
            const T x = conv(v, field);
            out.fill(x);
        }
    }

    MultiIndex index(const toml::node& v, const std::string& field) const {
        const auto& a = array(v, field);
        if (a.size() < 1 || a.size() > kMaxDim) fail(field, "expected 1 to 3 entries", &v);
        MultiIndex m{0, 0, 0};
        for (std::size_t i = 0; i < a.size(); ++i) {
            const long long x = integer(a[i], field);
            if (x < 0) fail(field, "multi-index entries must be non-negative", &v);
            m[i] = static_cast<int>(x);
        }
        return m;
    }

    std::vector<MultiIndexPair> pairs(const toml::node& v, const std::string& field) const {
        static const std::regex label(R"(a([0-9]{1,3})_b([0-9]{1,3}))");
        std::vector<MultiIndexPair> out;
        const auto& a = array(v, field);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string f = field + "[" + std::to_string(i) + "]";
            MultiIndexPair p;
            if (auto s = a[i].as_string()) {
                std::smatch m;
                const std::string str = s->get();
                if (!std::regex_match(str, m, label) || m[1].length() != m[2].length())
                    fail(f, "expected a label like \"a10_b01\"", &a[i]);
                for (std::size_t k = 0; k < static_cast<std::size_t>(m[1].length()); ++k) {
                    p.alpha[k] = m[1].str()[k] - '0';
                    p.beta[k] = m[2].str()[k] - '0';
                }
            } else {
                const auto& t = table(a[i], f);
                allow(t, f + ".", {"alpha", "beta"});
                if (!t.contains("alpha") || !t.contains("beta"))
                    fail(f, "needs both alpha and beta", &a[i]);
                p.alpha = index(*t.get("alpha"), f + ".alpha");
                p.beta = index(*t.get("beta"), f + ".beta");
            }
            out.push_back(p);
        }
        return out;
    }

    std::size_t axis_len(const std::string& field) const {
        auto it = per_axis_len_.find(field);
        return it == per_axis_len_.end() ? 0 : it->second;
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
    mutable std::map<std::string, std::size_t> per_axis_len_;
};

bool power_of_two(int p) { return p > 0 && (p & (p - 1)) == 0; }

toml::table from_json(const nlohmann::json& j);

void json_value_into_array(toml::array& arr, const nlohmann::json& v) {
    if (v.is_object()) arr.push_back(from_json(v));
    else if (v.is_array()) {
        toml::array inner;
        for (const auto& e : v) json_value_into_array(inner, e);
        arr.push_back(std::move(inner));
    } else if (v.is_boolean()) arr.push_back(v.get<bool>());
    else if (v.is_number_integer()) arr.push_back(v.get<std::int64_t>());
    else if (v.is_number()) arr.push_back(v.get<double>());
    else if (v.is_string()) arr.push_back(v.get<std::string>());
    else throw ConfigError("null values are not allowed");
}

toml::table from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("JSON config must be an object");
    toml::table t;
    for (auto it = j.begin(); it != j.end(); ++it) {
        toml::array holder;
        json_value_into_array(holder, it.value());
        t.insert(it.key(), std::move(*holder.get(0)));
    }
    return t;
}

ExperimentConfig read(const toml::table& root, const std::string& source) {
    Reader r(source);
    r.allow(root, "", {"preset", "name", "seed", "domain", "time", "physics", "monitors",
                       "report_only", "initial", "outputs", "max_order", "decay_tol", "interpolation"});
    ExperimentConfig c;
    if (auto p = root.get("preset")) {
        const std::string name = r.string(*p, "preset");
        try {
            c = find_preset(name).defaults();
        } catch (const std::invalid_argument& e) {
            r.fail("preset", e.what(), p);
        }
    } else {
        c.name = "experiment";
    }
    if (auto v = root.get("name")) c.name = r.string(*v, "name");
    if (c.directory.empty() || root.get("name")) c.directory = "runs/" + c.name;
    if (auto v = root.get("seed")) {
        const long long s = r.integer(*v, "seed");
        if (s < 0) r.fail("seed", "must be non-negative", v);
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = root.get("max_order")) {
        const long long k = r.integer(*v, "max_order");
        if (k < 0 || k > 6) r.fail("max_order", "must lie in 0..6", v);
        c.max_order = static_cast<int>(k);
    }
    if (auto v = root.get("decay_tol")) {
        c.decay_tol = r.number(*v, "decay_tol");
        if (!(c.decay_tol > 0.0)) r.fail("decay_tol", "must be positive", v);
    }

    if (auto d = root.get("domain")) {
        const auto& t = r.table(*d, "domain");
        r.allow(t, "domain.", {"n", "L", "P", "periodic"});
        if (auto v = t.get("n")) {
            const long long n = r.integer(*v, "domain.n");
            if (n < 1 || n > 3) r.fail("domain.n", "must be 1, 2 or 3", v);
            c.n = static_cast<int>(n);
        }
        if (auto v = t.get("L")) {
            r.per_axis(*v, "domain.L", c.L,
                       [&](const toml::node& x, const std::string& f) { return r.number(x, f); });
            for (int i = 0; i < kMaxDim; ++i)
                if (!(c.L[i] > 0.0)) r.fail("domain.L", "half-widths must be positive", v);
        }
        if (auto v = t.get("P")) {
            r.per_axis(*v, "domain.P", c.P, [&](const toml::node& x, const std::string& f) {
                const long long p = r.integer(x, f);
                if (p < 8 || p > (1 << 16) || !power_of_two(static_cast<int>(p)))
                    r.fail(f, "must be a power of two >= 8", &x);
                return static_cast<int>(p);
            });
        }
        if (auto v = t.get("periodic")) c.periodic = r.boolean(*v, "domain.periodic");
        for (const char* f : {"domain.L", "domain.P"}) {
            const std::size_t len = r.axis_len(f);
            if (len && static_cast<int>(len) != c.n)
                r.fail(f, "needs one entry per dimension (n = " + std::to_string(c.n) + ")", d);
        }
    }
    for (int i = 0; i < c.n; ++i)
        if (c.P[i] < 8 || !power_of_two(c.P[i]))
            r.fail("domain.P", "must be a power of two >= 8 on every axis");

    if (auto tm = root.get("time")) {
        const auto& t = r.table(*tm, "time");
        r.allow(t, "time.", {"T", "N0", "tol", "max_doublings", "bound_nodes", "strang"});
        if (auto v = t.get("T")) {
            c.T = r.number(*v, "time.T");
            if (!(c.T > 0.0) || !std::isfinite(c.T)) r.fail("time.T", "must be positive", v);
        }
        if (auto v = t.get("N0")) {
            const long long k = r.integer(*v, "time.N0");
            if (k < 1 || k > 1000000) r.fail("time.N0", "must lie in 1..1e6", v);
            c.N0 = static_cast<int>(k);
        }
        if (auto v = t.get("tol")) {
            c.tol = r.number(*v, "time.tol");
            if (!(c.tol > 0.0)) r.fail("time.tol", "must be positive", v);
        }
        if (auto v = t.get("max_doublings")) {
            const long long k = r.integer(*v, "time.max_doublings");
            if (k < 1 || k > 12) r.fail("time.max_doublings", "must lie in 1..12", v);
            c.max_doublings = static_cast<int>(k);
        }
        if (auto v = t.get("bound_nodes")) {
            const long long k = r.integer(*v, "time.bound_nodes");
            if (k < 2 || k > 10000) r.fail("time.bound_nodes", "must lie in 2..10000", v);
            c.bound_nodes = static_cast<int>(k);
        }
        if (auto v = t.get("strang")) c.strang = r.boolean(*v, "time.strang");
    }

    if (auto ip = root.get("interpolation")) {
        const auto& t = r.table(*ip, "interpolation");
        r.allow(t, "interpolation.", {"upsample", "stencil"});
        if (auto v = t.get("upsample")) {
            const long long k = r.integer(*v, "interpolation.upsample");
            if (k < 1 || k > 8) r.fail("interpolation.upsample", "must lie in 1..8", v);
            c.interp.upsample = static_cast<int>(k);
        }
        if (auto v = t.get("stencil")) {
            const long long k = r.integer(*v, "interpolation.stencil");
            if (k < 2 || k > 16 || k % 2 != 0) r.fail("interpolation.stencil", "must be even, 2..16", v);
            c.interp.stencil = static_cast<int>(k);
        }
    }

    if (auto ph = root.get("physics")) {
        const auto& t = r.table(*ph, "physics");
        r.allow(t, "physics.", {"nu", "model", "drift", "h"});
        if (auto v = t.get("nu")) {
            r.per_axis(*v, "physics.nu", c.nu,
                       [&](const toml::node& x, const std::string& f) { return r.number(x, f); });
            for (double x : c.nu)
                if (!(x >= 0.0) || !std::isfinite(x)) r.fail("physics.nu", "must be finite and >= 0", v);
        }
        if (auto v = t.get("model")) {
            const std::string m = r.string(*v, "physics.model");
            if (m == "linear") c.model = ModelKind::linear;
            else if (m == "burgers") c.model = ModelKind::burgers;
            else if (m == "vorticity") c.model = ModelKind::vorticity;
            else r.fail("physics.model", "expected linear, burgers or vorticity", v);
        }
        if (auto v = t.get("drift"))
            r.per_axis(*v, "physics.drift", c.drift,
                       [&](const toml::node& x, const std::string& f) { return r.number(x, f); });
        if (auto v = t.get("h")) {
            c.growth.clear();
            const auto& a = r.array(*v, "physics.h");
            for (std::size_t i = 0; i < a.size(); ++i) c.growth.push_back(r.number(a[i], "physics.h"));
        }
    }
    for (int i = c.n; i < kMaxDim; ++i) c.nu[i] = 0.0;

    if (auto v = root.get("monitors")) c.monitors = r.pairs(*v, "monitors");
    if (auto v = root.get("report_only")) c.report_only = r.pairs(*v, "report_only");
    if (c.monitors.empty()) c.monitors.push_back({});
    for (const auto* list : {&c.monitors, &c.report_only})
        for (const auto& p : *list) {
            for (int i = c.n; i < kMaxDim; ++i)
                if (p.alpha[i] || p.beta[i])
                    r.fail("monitors", "pair " + p.label(kMaxDim) + " uses axes beyond n");
            if (order(p.alpha) > c.max_order || order(p.beta) > c.max_order)
                r.fail("monitors", "pair " + p.label(c.n) + " exceeds max_order " +
                                       std::to_string(c.max_order));
            if (c.periodic && order(p.alpha) > 0)
                r.fail("monitors", "polynomial weights are undefined on the torus (" +
                                       p.label(c.n) + ")");
        }

    if (auto in = root.get("initial")) {
        const auto& t = r.table(*in, "initial");
        r.allow(t, "initial.", {"kind", "amplitudes", "width", "path"});
        if (!c.preset.empty()) r.fail("initial", "not allowed together with a preset", in);
        if (auto v = t.get("kind")) {
            c.initial_kind = r.string(*v, "initial.kind");
            if (c.initial_kind != "gaussian" && c.initial_kind != "taylor-green" &&
                c.initial_kind != "file")
                r.fail("initial.kind", "expected gaussian, taylor-green or file", v);
        }
        if (auto v = t.get("amplitudes")) {
            c.amplitudes.clear();
            const auto& a = r.array(*v, "initial.amplitudes");
            for (std::size_t i = 0; i < a.size(); ++i)
                c.amplitudes.push_back(r.number(a[i], "initial.amplitudes"));
            if (c.amplitudes.empty() || c.amplitudes.size() > 3)
                r.fail("initial.amplitudes", "expected 1 to 3 entries", v);
        }
        if (auto v = t.get("width")) {
            c.width = r.number(*v, "initial.width");
            if (!(c.width > 0.0)) r.fail("initial.width", "must be positive", v);
        }
        if (auto v = t.get("path")) c.initial_path = r.string(*v, "initial.path");
        if (c.initial_kind == "file" && c.initial_path.empty())
            r.fail("initial.path", "required when kind = \"file\"", in);
    }

    if (auto out = root.get("outputs")) {
        const auto& t = r.table(*out, "outputs");
        r.allow(t, "outputs.", {"directory", "formats", "log_scale"});
        if (auto v = t.get("directory")) {
            c.directory = r.string(*v, "outputs.directory");
            if (c.directory.empty()) r.fail("outputs.directory", "must not be empty", v);
        }
        if (auto v = t.get("formats")) {
            c.formats.clear();
            const auto& a = r.array(*v, "outputs.formats");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string f = r.string(a[i], "outputs.formats");
                if (f != "csv" && f != "json" && f != "svg")
                    r.fail("outputs.formats", "unknown format '" + f + "'", &a[i]);
                c.formats.push_back(f);
            }
        }
        if (auto v = t.get("log_scale")) c.log_scale = r.boolean(*v, "outputs.log_scale");
    }

    if (c.model == ModelKind::vorticity && c.n == 1)
        r.fail("physics.model", "vorticity needs n = 2 or 3");
    return c;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(source_name + ": invalid JSON: " + e.what());
        }
        return read(from_json(j), source_name);
    }
    toml::table t;
    try {
        t = toml::parse(text, source_name);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source_name << ":" << e.source().begin.line << ": invalid TOML: " << e.description();
        throw ConfigError(os.str());
    }
    return read(t, source_name);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace schwartz
