#include "sastab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sastab/expression.hpp"
#include "sastab/ode.hpp"
#include "sastab/registry.hpp"

namespace sastab {

// ---------------------------------------------------------------------------
// TOML subset

namespace toml {

namespace {

class ValueParser {
public:
    ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    Value parse_all() {
        Value v = value();
        skip_space();
        if (pos_ != text_.size()) {
            fail("trailing characters after value");
        }
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    Value value() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("missing value");
        }
        const char c = text_[pos_];
        if (c == '"') {
            return Value{string()};
        }
        if (c == '[') {
            return array();
        }
        return scalar();
    }

    std::string string() {
        ++pos_;
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            char c = text_[pos_++];
            if (c == '\\' && pos_ < text_.size()) {
                const char e = text_[pos_++];
                switch (e) {
                case 'n':
                    c = '\n';
                    break;
                case 't':
                    c = '\t';
                    break;
                default:
                    c = e;
                }
            }
            out += c;
        }
        if (pos_ >= text_.size()) {
            fail("unterminated string");
        }
        ++pos_;
        return out;
    }

    Value array() {
        ++pos_;
        Array items;
        for (;;) {
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ']') {
                ++pos_;
                return Value{std::move(items)};
            }
            items.push_back(value());
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ',') {
                ++pos_;
                continue;
            }
            if (pos_ < text_.size() && text_[pos_] == ']') {
                ++pos_;
                return Value{std::move(items)};
            }
            fail("expected ',' or ']' in array");
        }
    }

    Value scalar() {
        std::size_t end = pos_;
        while (end < text_.size() && text_[end] != ',' && text_[end] != ']' &&
               !std::isspace(static_cast<unsigned char>(text_[end]))) {
            ++end;
        }
        std::string token(text_.substr(pos_, end - pos_));
        pos_ = end;
        if (token == "true") {
            return Value{true};
        }
        if (token == "false") {
            return Value{false};
        }
        if (token == "inf" || token == "+inf") {
            return Value{kInfinity};
        }
        if (token == "-inf") {
            return Value{-kInfinity};
        }
        std::string cleaned;
        for (char c : token) {
            if (c != '_') {
                cleaned += c;
            }
        }
        const char* first = cleaned.data();
        const char* last = cleaned.data() + cleaned.size();
        if (!cleaned.empty() && cleaned[0] == '+') {
            ++first;
        }
        if (cleaned.find_first_of(".eE") == std::string::npos) {
            std::int64_t i = 0;
            auto [ptr, ec] = std::from_chars(first, last, i);
            if (ec == std::errc() && ptr == last) {
                return Value{i};
            }
        }
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, d);
        if (ec == std::errc() && ptr == last && first != last) {
            return Value{d};
        }
        fail("cannot parse value '" + token + "'");
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
            in_string = !in_string;
        } else if (line[i] == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return std::string(s.substr(a, b - a));
}

int bracket_balance(std::string_view s) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) {
            in_string = !in_string;
        } else if (!in_string) {
            depth += s[i] == '[' ? 1 : s[i] == ']' ? -1 : 0;
        }
    }
    return depth;
}

bool valid_key(std::string_view key) {
    if (key.empty()) {
        return false;
    }
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') {
            return false;
        }
    }
    return true;
}

} // namespace

Table parse(std::string_view text) {
    Table table;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[' && line.find('=') == std::string::npos) {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!valid_key(section)) {
                throw ConfigError("config line " + std::to_string(line_no) + ": bad section name");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value_text = trim(std::string_view(line).substr(eq + 1));
        const std::size_t start_line = line_no;
        while (bracket_balance(value_text) > 0 && std::getline(in, raw)) {
            ++line_no;
            value_text += ' ' + trim(strip_comment(raw));
        }
        if (!valid_key(key)) {
            throw ConfigError("config line " + std::to_string(start_line) + ": bad key '" + key + "'");
        }
        const std::string path = section.empty() ? key : section + "." + key;
        if (table.count(path)) {
            throw ConfigError("config key '" + path + "' defined twice");
        }
        table[path] = ValueParser(value_text, start_line).parse_all();
    }
    return table;
}

} // namespace toml

// ---------------------------------------------------------------------------
// Typed access

namespace {

class Reader {
public:
    explicit Reader(toml::Table table) : table_(std::move(table)) {}

    bool has(const std::string& key) const { return table_.count(key) > 0; }

    const toml::Value* find(const std::string& key) {
        auto it = table_.find(key);
        if (it == table_.end()) {
            return nullptr;
        }
        used_.insert(key);
        return &it->second;
    }

    std::optional<std::string> string(const std::string& key) {
        const auto* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        if (const auto* s = std::get_if<std::string>(&v->data)) {
            return *s;
        }
        type_error(key, "a string");
    }

    std::optional<double> number(const std::string& key) {
        const auto* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        return as_number(*v, key);
    }

    std::optional<std::int64_t> integer(const std::string& key) {
        const auto* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        if (const auto* i = std::get_if<std::int64_t>(&v->data)) {
            return *i;
        }
        type_error(key, "an integer");
    }

    /// A number or an array of numbers.
    std::optional<Vec> vector(const std::string& key) {
        const auto* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        if (const auto* arr = std::get_if<toml::Array>(&v->data)) {
            Vec out;
            for (const auto& item : *arr) {
                out.push_back(as_number(item, key));
            }
            return out;
        }
        return Vec{as_number(*v, key)};
    }

    /// A string or an array of strings.
    std::optional<std::vector<std::string>> strings(const std::string& key) {
        const auto* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        if (const auto* s = std::get_if<std::string>(&v->data)) {
            return std::vector<std::string>{*s};
        }
        if (const auto* arr = std::get_if<toml::Array>(&v->data)) {
            std::vector<std::string> out;
            for (const auto& item : *arr) {
                const auto* s = std::get_if<std::string>(&item.data);
                if (!s) {
                    type_error(key, "an array of strings");
                }
                out.push_back(*s);
            }
            return out;
        }
        type_error(key, "a string or an array of strings");
    }

    const toml::Value* raw(const std::string& key) { return find(key); }

    void reject_unused() const {
        for (const auto& [key, _] : table_) {
            if (!used_.count(key)) {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    }

    [[noreturn]] static void type_error(const std::string& key, const char* expected) {
        throw ConfigError("config key '" + key + "' must be " + expected);
    }

private:
    static double as_number(const toml::Value& v, const std::string& key) {
        if (const auto* i = std::get_if<std::int64_t>(&v.data)) {
            return static_cast<double>(*i);
        }
        if (const auto* d = std::get_if<double>(&v.data)) {
            return *d;
        }
        type_error(key, "a number");
    }

    toml::Table table_;
    std::set<std::string> used_;
};

std::vector<Expression> parse_component_list(const std::vector<std::string>& texts, std::size_t dim,
                                             const std::string& key) {
    if (texts.size() != dim) {
        throw ConfigError("config key '" + key + "' needs " + std::to_string(dim) + " component(s)");
    }
    std::vector<Expression> out;
    for (const auto& t : texts) {
        try {
            out.push_back(Expression::parse(t, dim));
        } catch (const ParseError& e) {
            throw ParseError(key + ": " + e.detail(), e.position());
        }
    }
    return out;
}

Expression parse_scalar(const std::string& text, std::size_t dim, const std::string& key) {
    try {
        return Expression::parse(text, dim);
    } catch (const ParseError& e) {
        throw ParseError(key + ": " + e.detail(), e.position());
    }
}

VectorFn vector_fn(std::vector<Expression> components) {
    return [components = std::move(components)](std::span<const double> x) {
        Vec out(components.size());
        for (std::size_t i = 0; i < components.size(); ++i) {
            out[i] = components[i](x);
        }
        return out;
    };
}

ScalarFn scalar_fn(Expression e) {
    return [e = std::move(e)](std::span<const double> x) { return e(x); };
}

std::size_t to_size(std::int64_t v, const std::string& key, std::int64_t min) {
    if (v < min) {
        throw ConfigError("config key '" + key + "' must be >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(v);
}

SAProblem build_inline_problem(Reader& r) {
    SAProblem p;
    p.name = r.string("problem.name").value_or("inline");
    const auto dim_raw = r.integer("problem.dimension").value_or(1);
    const std::size_t dim = to_size(dim_raw, "problem.dimension", 1);
    p.dim = dim;

    const auto drift = r.strings("problem.drift");
    const auto lyap = r.string("problem.lyapunov");
    const auto grad = r.strings("problem.gradient");
    if (!drift || !lyap || !grad) {
        throw ConfigError("inline problem needs problem.drift, problem.lyapunov and problem.gradient");
    }
    p.drift = DriftField{dim, vector_fn(parse_component_list(*drift, dim, "problem.drift"))};
    p.lyapunov.value = scalar_fn(parse_scalar(*lyap, dim, "problem.lyapunov"));
    p.lyapunov.gradient = vector_fn(parse_component_list(*grad, dim, "problem.gradient"));
    p.lyapunov.hessian_bound = r.number("problem.hessian_bound").value_or(0.0);

    const std::string kind = r.string("noise.kind").value_or("gaussian");
    std::optional<ScalarFn> declared;
    if (auto f = r.string("noise.f")) {
        declared = scalar_fn(parse_scalar(*f, dim, "noise.f"));
    }
    if (kind == "multiplicative-gaussian") {
        const auto scale = r.strings("noise.scale");
        if (!scale) {
            throw ConfigError("missing config key 'noise.scale'");
        }
        if (!declared) {
            throw ConfigError("missing config key 'noise.f' (multiplicative noise must declare its bound)");
        }
        p.noise = NoiseModel::multiplicative_gaussian(dim, vector_fn(parse_component_list(*scale, dim, "noise.scale")),
                                                      *declared);
    } else if (kind == "uniform") {
        const auto lo = r.number("noise.lo");
        const auto hi = r.number("noise.hi");
        if (!lo || !hi) {
            throw ConfigError("uniform noise needs noise.lo and noise.hi");
        }
        p.noise = NoiseModel::additive_uniform(dim, *lo, *hi);
    } else if (kind == "gaussian") {
        p.noise = NoiseModel::additive_gaussian(dim, r.number("noise.sigma").value_or(1.0),
                                                r.number("noise.mean").value_or(0.0));
    } else {
        throw ConfigError("noise.kind must be multiplicative-gaussian, uniform or gaussian");
    }
    if (declared && kind != "multiplicative-gaussian") {
        p.noise = p.noise.with_var_bound(*declared);
    }
    return p;
}

} // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    auto parse_one = [&](std::string_view s) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ConfigError("bad seed '" + std::string(s) + "'");
        }
        return v;
    };
    std::vector<std::uint64_t> seeds;
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        const auto lo = parse_one(text.substr(0, dots));
        const auto hi = parse_one(text.substr(dots + 2));
        if (hi < lo) {
            throw ConfigError("seed range '" + std::string(text) + "' is empty");
        }
        for (auto s = lo; s <= hi; ++s) {
            seeds.push_back(s);
        }
        return seeds;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        seeds.push_back(parse_one(piece));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return seeds;
}

ExperimentConfig parse_config(std::string_view text) {
    Reader r(toml::parse(text));
    ExperimentConfig cfg;

    const bool is_inline = r.has("problem.drift");
    if (is_inline) {
        cfg.problem = build_inline_problem(r);
        cfg.inline_problem = true;
    } else {
        const auto name = r.string("problem.name");
        if (!name) {
            throw ConfigError("missing config key 'problem.name'");
        }
        cfg.problem = make_problem(*name);
        for (const char* key : {"noise.kind", "noise.scale", "noise.f", "noise.lo", "noise.hi", "noise.sigma"}) {
            if (r.has(key)) {
                throw ConfigError(std::string("config key '") + key + "' only applies to inline problems");
            }
        }
    }
    cfg.problem_name = cfg.problem.name;
    const std::size_t dim = cfg.problem.dim;

    // schedule
    if (auto family = r.string("schedule.family")) {
        if (*family == "harmonic") {
            cfg.problem.schedule = StepSchedule::harmonic();
        } else if (*family == "polynomial") {
            cfg.problem.schedule = StepSchedule::polynomial(r.number("schedule.a0").value_or(1.0),
                                                            r.number("schedule.b").value_or(1.0),
                                                            r.number("schedule.gamma").value_or(1.0));
        } else if (*family == "table") {
            auto values = r.vector("schedule.values");
            if (!values) {
                throw ConfigError("missing config key 'schedule.values'");
            }
            cfg.problem.schedule = StepSchedule::table(std::move(*values));
        } else {
            throw ConfigError("schedule.family must be harmonic, polynomial or table");
        }
    }

    // stabilizer
    const auto M = r.integer("stabilizer.M").value_or(cfg.problem.lyapunov.threshold_M);
    if (M < 1) {
        throw ConfigError("stabilizer.M must be a positive integer");
    }
    cfg.M = static_cast<int>(M);
    cfg.problem.lyapunov.threshold_M = cfg.M;
    if (const auto* nv = r.raw("stabilizer.N")) {
        if (const auto* i = std::get_if<std::int64_t>(&nv->data)) {
            cfg.N = static_cast<int>(*i);
        } else if (const auto* s = std::get_if<std::string>(&nv->data); s && (*s == "inf" || *s == "infinity")) {
            cfg.N_infinite = true;
        } else if (const auto* d = std::get_if<double>(&nv->data); d && std::isinf(*d) && *d > 0) {
            cfg.N_infinite = true;
        } else {
            Reader::type_error("stabilizer.N", "an integer or \"inf\"");
        }
        if (cfg.N && *cfg.N <= cfg.M) {
            throw ConfigError("stabilizer.N must exceed stabilizer.M");
        }
    }
    cfg.margin = r.number("stabilizer.margin").value_or(kDefaultMargin);
    if (!(cfg.margin > 1.0)) {
        throw ConfigError("stabilizer.margin must exceed 1");
    }
    cfg.samples = to_size(r.integer("stabilizer.samples").value_or(10000), "stabilizer.samples", 1);
    if (auto box = r.vector("stabilizer.box")) {
        if (box->size() != 2) {
            throw ConfigError("stabilizer.box must be [lo, hi]");
        }
        try {
            cfg.box = Box::cube(dim, (*box)[0], (*box)[1]);
            cfg.box.require_volume();
        } catch (const InvalidRegion& e) {
            throw ConfigError(std::string("stabilizer.box: ") + e.what());
        }
    } else {
        cfg.box = Box::cube(dim, -10.0, 10.0);
    }
    cfg.problem.domain = cfg.box;

    // run
    cfg.mode.kind = parse_mode(r.string("run.mode").value_or("adaptive"));
    if (auto radius = r.number("run.radius")) {
        cfg.mode.radius = *radius;
    }
    if (cfg.mode.kind == Mode::Projection && !(cfg.mode.radius > 0.0)) {
        throw ConfigError("run.radius must be positive in projection mode");
    }
    cfg.x0 = r.vector("run.x0").value_or(Vec(dim, 0.0));
    if (cfg.x0.size() != dim) {
        throw ConfigError("run.x0 must have " + std::to_string(dim) + " component(s)");
    }
    cfg.horizon = to_size(r.integer("run.horizon").value_or(10000), "run.horizon", 1);
    cfg.seed = static_cast<std::uint64_t>(r.integer("run.seed").value_or(0));
    if (const auto* sv = r.raw("run.seeds")) {
        if (const auto* s = std::get_if<std::string>(&sv->data)) {
            cfg.seeds = parse_seed_list(*s);
        } else if (const auto* arr = std::get_if<toml::Array>(&sv->data)) {
            for (const auto& item : *arr) {
                const auto* i = std::get_if<std::int64_t>(&item.data);
                if (!i || *i < 0) {
                    Reader::type_error("run.seeds", "an array of nonnegative integers or a range string");
                }
                cfg.seeds.push_back(static_cast<std::uint64_t>(*i));
            }
        } else {
            Reader::type_error("run.seeds", "an array of nonnegative integers or a range string");
        }
    } else {
        cfg.seeds = {cfg.seed};
    }
    cfg.workers = static_cast<unsigned>(to_size(r.integer("run.workers").value_or(1), "run.workers", 0));

    // diagnostics
    cfg.diagnostics.T = r.number("diagnostics.T").value_or(1.0);
    cfg.diagnostics.m = r.number("diagnostics.m").value_or(cfg.M + 3.0);
    cfg.diagnostics.delta = r.number("diagnostics.delta").value_or(0.05);
    cfg.diagnostics.epsilon = r.number("diagnostics.epsilon").value_or(0.05);
    cfg.diagnostics.K = r.number("diagnostics.K").value_or(0.0);
    cfg.diagnostics.validate(cfg.M);

    cfg.trace_path = r.string("output.trace").value_or("");
    cfg.summary_path = r.string("output.summary").value_or("");

    r.reject_unused();
    cfg.problem.validate();

    if (cfg.inline_problem) {
        Rng rng(0x5EED);
        std::vector<Vec> points;
        for (int i = 0; i < 100; ++i) {
            points.push_back(cfg.box.sample(rng));
        }
        try {
            const auto grad = gradient_check(cfg.problem.lyapunov, points, 1e-5);
            if (!grad.pass) {
                throw ConfigError("problem.gradient does not match finite differences of problem.lyapunov "
                                  "(worst discrepancy " +
                                  std::to_string(grad.worst_discrepancy) + ")");
            }
        } catch (const EvalError& e) {
            throw ConfigError(std::string("problem.lyapunov: ") + e.what());
        }
        const auto descent = check_descent(cfg.problem, cfg.M, cfg.diagnostics.m, cfg.samples, rng, cfg.box);
        if (!descent.pass) {
            throw VerificationError("h . grad W is not negative on {M <= W <= m}: sampled sup " +
                                    std::to_string(descent.sup_Wdot));
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace sastab
