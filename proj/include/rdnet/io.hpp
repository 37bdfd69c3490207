#pragma once

// System-definition documents (versioned JSON), preset references, and
// CSV / JSON emission with 17 significant digits.

#include "json.hpp"
#include "rdnet/certificates.hpp"
#include "rdnet/model.hpp"
#include "rdnet/presets.hpp"
#include "rdnet/simulator.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdnet::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Malformed or schema-violating input. line/column are 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(what), line_(line), column_(column)
    {
    }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_, column_;
};

// ---------------------------------------------------------------------------
// Number formatting

inline std::string fmt17(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// System documents

enum class InitialKind { zero, sine, switched_profile, constant };

inline const char* to_string(InitialKind k)
{
    switch (k) {
    case InitialKind::zero: return "zero";
    case InitialKind::sine: return "sine";
    case InitialKind::switched_profile: return "switched_profile";
    case InitialKind::constant: return "constant";
    }
    return "?";
}

struct InitialSpec {
    InitialKind kind = InitialKind::sine;
    std::vector<double> values; // per component, for constant
};

struct SystemDoc {
    std::string source;           // file path or preset reference
    std::string name;
    SwitchedNetwork net;
    std::vector<int> grid;        // interior nodes per axis
    RectDomain domain = RectDomain::interval(1.0); // shared simulation domain
    std::optional<Vec> beta;
    double dt = 1e-3;
    double T = 10.0;
    InitialSpec initial;

    GridPtr make_grid() const { return rdnet::make_grid(domain, grid); }

    /// Initial history (constant in s) on `g`.
    Mat initial_state(const GridPtr& g) const
    {
        const Eigen::Index n = net.size();
        switch (initial.kind) {
        case InitialKind::zero: return Mat::Zero(g->size(), n);
        case InitialKind::constant: {
            require(static_cast<Eigen::Index>(initial.values.size()) == n, "initial: one constant per component");
            Mat m(g->size(), n);
            for (Eigen::Index j = 0; j < n; ++j) m.col(j).setConstant(initial.values[static_cast<std::size_t>(j)]);
            return m;
        }
        case InitialKind::switched_profile:
            require(g->dims() == 2 && n == 2, "initial: switched_profile needs a 2-neuron network on a rectangle");
            return presets::switched_initial_field(g).values;
        case InitialKind::sine: break;
        }
        const Vec s = sample(g, [&](double x, double y) {
            double v = std::sin(std::numbers::pi * x / domain.length(0));
            if (domain.dims() == 2) v *= std::sin(std::numbers::pi * y / domain.length(1));
            return v;
        }).values;
        return s.replicate(1, n);
    }
};

namespace detail {

inline json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json mat_json(const Mat& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

inline json fn_json(const ScalarFunction& f)
{
    json j{{"name", to_string(f.kind())}};
    if (f.kind() == FnKind::tabulated) {
        j["x"] = f.xs();
        j["y"] = f.ys();
    } else {
        j["params"] = f.params();
    }
    return j;
}

/// Walks a document while tracking the JSON pointer of the current node for diagnostics.
struct Reader {
    const json& node;
    std::string path;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("schema: " + (path.empty() ? std::string("/") : path) + ": " + what);
    }

    Reader at(const std::string& key) const
    {
        if (!node.is_object()) fail("expected an object");
        const auto it = node.find(key);
        if (it == node.end()) fail("missing field '" + key + "'");
        return {*it, path + "/" + key};
    }
    Reader at(std::size_t i) const
    {
        if (!node.is_array() || i >= node.size()) fail("index " + std::to_string(i) + " out of range");
        return {node[i], path + "/" + std::to_string(i)};
    }
    bool has(const std::string& key) const { return node.is_object() && node.contains(key); }
    std::size_t size() const
    {
        if (!node.is_array()) fail("expected an array");
        return node.size();
    }

    double number() const
    {
        if (!node.is_number()) fail("expected a number");
        const double v = node.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }
    int integer() const
    {
        if (!node.is_number_integer()) fail("expected an integer");
        return node.get<int>();
    }
    std::string string() const
    {
        if (!node.is_string()) fail("expected a string");
        return node.get<std::string>();
    }
    std::vector<double> numbers() const
    {
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
        return out;
    }
    Vec vec() const
    {
        const auto v = numbers();
        return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    Mat mat() const
    {
        const std::size_t r = size();
        if (r == 0) fail("empty matrix");
        const std::size_t c = at(0).size();
        Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        for (std::size_t i = 0; i < r; ++i) {
            const auto row = at(i).numbers();
            if (row.size() != c) at(i).fail("ragged matrix row");
            for (std::size_t k = 0; k < c; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
        }
        return m;
    }
    /// Matrix, or a number s meaning s I_n.
    Mat mat_or_scalar(Eigen::Index n) const
    {
        if (node.is_number()) return number() * Mat::Identity(n, n);
        return mat();
    }
};

inline ScalarFunction read_fn(const Reader& r)
{
    const auto name = r.at("name").string();
    try {
        const FnKind kind = fn_kind_from_string(name);
        if (kind == FnKind::tabulated) return ScalarFunction::tabulated(r.at("x").numbers(), r.at("y").numbers());
        if (name == "identity") return ScalarFunction::identity();
        return {kind, r.has("params") ? r.at("params").numbers() : std::vector<double>{}};
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
}

inline RectDomain read_domain(const Reader& r)
{
    const auto l = r.numbers();
    if (l.size() == 1) return RectDomain::interval(l[0]);
    if (l.size() == 2) return RectDomain::rectangle(l[0], l[1]);
    r.fail("domain needs one or two side lengths");
}

inline DelaySpec read_delay(const Reader& r)
{
    const auto kind = r.has("kind") ? r.at("kind").string() : std::string("constant");
    if (kind == "constant") return DelaySpec::constant(r.at("tau").number());
    if (kind == "sinusoid")
        return DelaySpec::sinusoid(r.at("tau_max").number(), r.at("mean").number(), r.at("amplitude").number(),
                                   r.at("omega").number());
    r.at("kind").fail("unknown delay kind '" + kind + "'");
}

inline InitialSpec read_initial(const Reader& r)
{
    InitialSpec s;
    if (r.node.is_object()) {
        s.kind = InitialKind::constant;
        s.values = r.at("constant").numbers();
        return s;
    }
    const auto k = r.string();
    for (InitialKind c : {InitialKind::zero, InitialKind::sine, InitialKind::switched_profile})
        if (k == to_string(c)) {
            s.kind = c;
            return s;
        }
    r.fail("unknown initial profile '" + k + "'");
}

inline std::vector<int> read_grid(const Reader& r)
{
    std::vector<int> g;
    if (r.node.is_number_integer()) {
        g.push_back(r.integer());
    } else {
        for (std::size_t i = 0; i < r.size(); ++i) g.push_back(r.at(i).integer());
    }
    for (int c : g)
        if (c < 1) r.fail("grid counts must be >= 1");
    return g;
}

inline std::size_t line_of(const std::string& text, std::size_t byte, std::size_t* column)
{
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    *column = col;
    return line;
}

} // namespace detail

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"example4_1.case1", "example4_1.case2", "example4_1.case3",
                                                "statement1",       "example3_5",       "statement2",
                                                "zero"};
    return names;
}

/// Built-in system. `grid` overrides the preset resolution; the cube-root slope
/// of statement2 is resolved on the final grid.
inline SystemDoc load_preset(const std::string& name, const std::optional<std::vector<int>>& grid = std::nullopt)
{
    SystemDoc d;
    d.source = "preset:" + name;
    d.name = name;
    auto pick = [&](std::vector<int> def) { d.grid = grid.value_or(std::move(def)); };
    if (name.rfind("example4_1.case", 0) == 0 && name.size() == 16 && name[15] >= '1' && name[15] <= '3') {
        const int k = name[15] - '0';
        d.net = presets::switched_example(k);
        d.beta = presets::published_certificate(k).beta;
        d.domain = presets::switched_domain(1);
        pick({31, 31});
        d.dt = 0.035;
        d.T = 6.0 * d.net.tau();
        d.initial.kind = InitialKind::switched_profile;
    } else if (name == "statement1") {
        d.net = presets::nonconstant_equilibrium();
        d.domain = RectDomain::interval(1.0);
        pick({401});
        d.dt = 0.01;
        d.T = 20.0;
    } else if (name == "example3_5") {
        d.net = presets::linear_invariance();
        d.domain = RectDomain::interval(1.0);
        pick({401});
        d.dt = 0.01;
        d.T = 20.0;
    } else if (name == "statement2") {
        d.domain = RectDomain::interval(1.0);
        pick({101});
        if (d.grid.size() == 2) d.domain = RectDomain::rectangle(1.0, 1.0);
        d.net = presets::multiplicity_example(d.make_grid());
        d.dt = 0.01;
        d.T = 10.0;
    } else if (name == "zero") {
        d.net = presets::zero_system();
        d.domain = RectDomain::rectangle(1.0, 1.0);
        pick({11, 11});
        d.dt = 0.035;
        d.T = 7.0;
        d.initial.kind = InitialKind::zero;
    } else {
        throw ParseError("unknown preset '" + name + "'");
    }
    if (!d.beta && d.net.mode_count() == 1) d.beta = Vec::Ones(1);
    require(static_cast<int>(d.grid.size()) == d.domain.dims(), "preset: grid dimension must match the domain");
    return d;
}

/// Applies the optional top-level overrides shared by full and preset documents.
inline void apply_overrides(SystemDoc& d, const detail::Reader& r)
{
    if (r.has("beta")) d.beta = r.at("beta").vec();
    if (r.has("gamma")) d.net.gamma = r.at("gamma").number();
    if (r.has("q")) d.net.q = r.at("q").number();
    if (r.has("simulation")) {
        const auto s = r.at("simulation");
        if (s.has("dt")) d.dt = s.at("dt").number();
        if (s.has("T")) d.T = s.at("T").number();
        if (s.has("initial")) d.initial = detail::read_initial(s.at("initial"));
    }
}

inline SystemDoc parse_system(const json& root, const std::string& source = "<memory>")
{
    const detail::Reader r{root, ""};
    if (!root.is_object()) r.fail("document must be an object");
    if (!r.has("schema_version")) r.fail("missing field 'schema_version'");
    const int version = r.at("schema_version").integer();
    if (version != kSchemaVersion)
        r.at("schema_version").fail("unsupported schema version " + std::to_string(version));

    SystemDoc d;
    try {
        if (r.has("preset")) {
            std::optional<std::vector<int>> grid;
            if (r.has("grid")) grid = detail::read_grid(r.at("grid"));
            d = load_preset(r.at("preset").string(), grid);
            d.source = source;
            apply_overrides(d, r);
            return d;
        }

        d.source = source;
        d.name = r.has("name") ? r.at("name").string() : std::string("system");
        const auto act = r.at("activation");
        const auto lip = act.at("lipschitz").vec();
        if (act.has("functions")) {
            const auto fs = act.at("functions");
            std::vector<ScalarFunction> fns;
            for (std::size_t i = 0; i < fs.size(); ++i) fns.push_back(detail::read_fn(fs.at(i)));
            d.net.activation = Activation(std::move(fns), lip);
        } else {
            d.net.activation = Activation(std::vector<ScalarFunction>(static_cast<std::size_t>(lip.size()),
                                                                      detail::read_fn(act.at("function"))),
                                          lip);
        }
        const Eigen::Index n = d.net.activation.size();

        const auto modes = r.at("modes");
        if (modes.size() == 0) modes.fail("at least one mode");
        for (std::size_t s = 0; s < modes.size(); ++s) {
            const auto m = modes.at(s);
            const RectDomain dom = detail::read_domain(m.at("domain"));
            try {
                d.net.modes.emplace_back(m.at("D").vec(), m.at("C").vec(), m.at("A").mat(), m.at("B").mat(),
                                         m.at("J").vec(), dom);
            } catch (const std::invalid_argument& e) {
                m.fail(e.what());
            }
        }
        d.net.delay = detail::read_delay(r.at("delay"));
        d.net.Psi = r.at("Psi").mat_or_scalar(n);
        if (r.has("q")) d.net.q = r.at("q").number();
        if (r.has("gamma")) d.net.gamma = r.at("gamma").number();
        d.domain = r.has("domain") ? detail::read_domain(r.at("domain")) : d.net.modes.front().domain;
        d.grid = r.has("grid") ? detail::read_grid(r.at("grid")) : std::vector<int>(static_cast<std::size_t>(d.domain.dims()), 31);
        if (static_cast<int>(d.grid.size()) != d.domain.dims()) r.at("grid").fail("one count per domain axis");
        if (d.net.mode_count() == 1) d.beta = Vec::Ones(1);
        d.initial.kind = InitialKind::sine;
        apply_overrides(d, r);
        try {
            d.net.validate();
        } catch (const std::invalid_argument& e) {
            r.fail(e.what());
        }
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("schema: ") + e.what());
    }
    return d;
}

/// Parses document text; syntax errors carry the line and column.
inline SystemDoc parse_system_text(const std::string& text, const std::string& source = "<memory>")
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t col = 0;
        const std::size_t line = detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1, &col);
        std::string msg = e.what();
        if (const auto k = msg.find("syntax error"); k != std::string::npos) msg = msg.substr(k);
        throw ParseError(source + ':' + std::to_string(line) + ':' + std::to_string(col) + ": " + msg, line, col);
    }
    return parse_system(root, source);
}

/// Reads a system file, or a built-in system given as "preset:<name>".
inline SystemDoc load_system(const std::string& ref)
{
    if (ref.rfind("preset:", 0) == 0) return load_preset(ref.substr(7));
    std::ifstream in(ref);
    if (!in) throw ParseError("cannot open system file '" + ref + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_system_text(ss.str(), ref);
}

/// Fully resolved document; parse_system(to_json(d)) reproduces d.
inline json to_json(const SystemDoc& d)
{
    json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = d.name;
    json act;
    act["functions"] = json::array();
    for (const auto& f : d.net.activation.functions()) act["functions"].push_back(detail::fn_json(f));
    act["lipschitz"] = detail::vec_json(d.net.activation.lipschitz());
    j["activation"] = act;
    j["modes"] = json::array();
    for (const auto& m : d.net.modes)
        j["modes"].push_back({{"D", detail::vec_json(m.D)},
                              {"C", detail::vec_json(m.C)},
                              {"A", detail::mat_json(m.A)},
                              {"B", detail::mat_json(m.B)},
                              {"J", detail::vec_json(m.J)},
                              {"domain", m.domain.lengths()},
                              {"lambda1", m.lambda1}});
    const auto& dl = d.net.delay;
    if (dl.kind == DelayKind::constant)
        j["delay"] = {{"kind", "constant"}, {"tau", dl.tau_max}};
    else
        j["delay"] = {{"kind", "sinusoid"}, {"tau_max", dl.tau_max}, {"mean", dl.mean}, {"amplitude", dl.amplitude},
                      {"omega", dl.omega}};
    j["Psi"] = detail::mat_json(d.net.Psi);
    j["q"] = d.net.q;
    j["gamma"] = d.net.gamma;
    if (d.beta) j["beta"] = detail::vec_json(*d.beta);
    j["domain"] = d.domain.lengths();
    j["grid"] = d.grid;
    json init = to_string(d.initial.kind);
    if (d.initial.kind == InitialKind::constant) init = {{"constant", d.initial.values}};
    j["simulation"] = {{"dt", d.dt}, {"T", d.T}, {"initial", init}};
    j["source"] = d.source;
    return j;
}

inline json to_json(const Certificate& c)
{
    return {{"beta", detail::vec_json(c.beta)},
            {"gamma", c.gamma},
            {"q", c.q},
            {"tau", c.tau},
            {"margin", c.margin},
            {"eigenvalues", detail::vec_json(c.eigenvalues)},
            {"feasible", c.feasible},
            {"theorem_constraint_ok", c.theorem_constraint_ok},
            {"rate", c.rate}};
}

inline json to_json(const DecayEstimate& e)
{
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(fmt17(v)); };
    return {{"rate", finite(e.rate)}, {"prefactor", e.prefactor}, {"r_squared", e.r_squared},
            {"t_start", e.t_start}, {"t_end", e.t_end},       {"samples", e.samples}};
}

// ---------------------------------------------------------------------------
// CSV

/// t, V, sqrtV, mode (1-based), switches_so_far.
inline std::string trajectory_csv(const Trajectory& tr)
{
    std::string out = "t,V,sqrtV,mode,switches_so_far\n";
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        out += fmt17(tr.t[k]) + ',' + fmt17(tr.V[k]) + ',' + fmt17(std::sqrt(tr.V[k])) + ','
               + std::to_string(tr.mode[k] + 1) + ',' + std::to_string(tr.switches[k]) + '\n';
    }
    return out;
}

/// Two columns "t sqrtV" for plotting the decay on a log axis.
inline std::string decay_dat(const Trajectory& tr)
{
    std::string out = "# t sqrtV\n";
    for (std::size_t k = 0; k < tr.t.size(); ++k) out += fmt17(tr.t[k]) + ' ' + fmt17(std::sqrt(tr.V[k])) + '\n';
    return out;
}

/// x[,y],component (1-based),value for a nodes x components state.
inline std::string field_csv(const Grid& grid, const Mat& values)
{
    require(values.rows() == grid.size(), "field_csv: one row per node");
    std::string out = grid.dims() == 2 ? "x,y,component,value\n" : "x,component,value\n";
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        for (Eigen::Index p = 0; p < grid.size(); ++p) {
            const auto x = grid.coord(p);
            out += fmt17(x[0]) + ',';
            if (grid.dims() == 2) out += fmt17(x[1]) + ',';
            out += std::to_string(c + 1) + ',' + fmt17(values(p, c)) + '\n';
        }
    }
    return out;
}

inline std::string field_csv(const VectorField& f) { return field_csv(*f.grid, f.values); }

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

} // namespace rdnet::io
