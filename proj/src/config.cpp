#include "qflow/config.hpp"

#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <set>

#include "qflow/error.hpp"

namespace qflow {

namespace {

// Input iterator that counts the newlines it has stepped over.
class LineCountingIterator {
public:
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    LineCountingIterator(const char* p, int* line) : p_(p), line_(line) {}
    reference operator*() const { return *p_; }
    LineCountingIterator& operator++() {
        if (*p_ == '\n') ++*line_;
        ++p_;
        return *this;
    }
    LineCountingIterator operator++(int) {
        auto tmp = *this;
        ++*this;
        return tmp;
    }
    bool operator==(const LineCountingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const LineCountingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_;
    int* line_;
};

// Records the source line of every object key and array element, by JSON pointer.
class KeyLines : public nlohmann::json_sax<json> {
public:
    explicit KeyLines(int* line) : line_(line) {}

    std::map<std::string, int> lines;

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override {
        stack_.push_back(Frame{true, path(), "", 0});
        lines.emplace(stack_.back().path, *line_);
        return true;
    }
    bool key(string_t& k) override {
        stack_.back().key = k;
        lines[stack_.back().path + "/" + k] = *line_;
        return true;
    }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override {
        stack_.push_back(Frame{false, path(), "", 0});
        lines.emplace(stack_.back().path, *line_);
        return true;
    }
    bool end_array() override { return close(); }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& e) override {
        throw ConfigError(std::string("invalid JSON: ") + e.what(), *line_);
    }

private:
    struct Frame {
        bool object;
        std::string path;
        std::string key;
        int index;
    };

    std::string path() const {
        if (stack_.empty()) return "";
        const Frame& f = stack_.back();
        return f.path + "/" + (f.object ? f.key : std::to_string(f.index));
    }
    bool value() {
        if (!stack_.empty() && !stack_.back().object) {
            lines.emplace(path(), *line_);
            ++stack_.back().index;
        }
        return true;
    }
    bool close() {
        stack_.pop_back();
        if (!stack_.empty() && !stack_.back().object) ++stack_.back().index;
        return true;
    }

    int* line_;
    std::vector<Frame> stack_;
};

class Reader {
public:
    Reader(std::map<std::string, int> lines) : lines_(std::move(lines)) {}

    int line(std::string path) const {
        for (;;) {
            auto it = lines_.find(path);
            if (it != lines_.end()) return it->second;
            const auto cut = path.rfind('/');
            if (cut == std::string::npos) return 0;
            path.erase(cut);
        }
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        throw ConfigError((path.empty() ? std::string("config") : path) + ": " + msg, line(path));
    }

    const json& object(const json& parent, const std::string& path, std::set<std::string> allowed) const {
        if (!parent.is_object()) fail(path, "expected an object");
        for (const auto& [k, v] : parent.items())
            if (!allowed.count(k)) fail(path + "/" + k, "unknown key \"" + k + "\"");
        return parent;
    }

    double number(const json& obj, const std::string& path, const std::string& key, double fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj[key];
        if (!v.is_number()) fail(path + "/" + key, "expected a number");
        return v.get<double>();
    }

    std::int64_t integer(const json& obj, const std::string& path, const std::string& key,
                         std::int64_t fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj[key];
        if (!v.is_number_integer()) fail(path + "/" + key, "expected an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const json& obj, const std::string& path, const std::string& key, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj[key];
        if (!v.is_boolean()) fail(path + "/" + key, "expected true or false");
        return v.get<bool>();
    }

    std::string text(const json& obj, const std::string& path, const std::string& key,
                     const std::string& fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj[key];
        if (!v.is_string()) fail(path + "/" + key, "expected a string");
        return v.get<std::string>();
    }

    // Run `f`, re-throwing library validation errors at `path`.
    template <typename F>
    auto at(const std::string& path, F&& f) const {
        try {
            return f();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            fail(path, e.what());
        }
    }

private:
    std::map<std::string, int> lines_;
};

ModelConfig read_model(const Reader& r, const json& j, const std::string& path, bool need_terms) {
    r.object(j, path, {"type", "n", "j", "boundary", "terms"});
    ModelConfig m;
    m.type = r.text(j, path, "type", m.type);
    if (m.type != "heisenberg" && m.type != "ising" && m.type != "custom")
        r.fail(path + "/type", "model type must be heisenberg, ising or custom");
    if (!j.contains("n")) r.fail(path, "missing key \"n\"");
    const auto n = r.integer(j, path, "n", 0);
    if (n < 2 || n > 4096) r.fail(path + "/n", "n must be between 2 and 4096");
    m.n = static_cast<int>(n);
    m.j = r.number(j, path, "j", m.j);
    const std::string b = r.text(j, path, "boundary", "open");
    m.boundary = r.at(path + "/boundary", [&] { return parse_boundary(b); });
    if (m.type == "custom" && need_terms) {
        if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
            r.fail(path + "/terms", "custom model needs a non-empty \"terms\" array");
        for (std::size_t t = 0; t < j["terms"].size(); ++t) {
            const std::string tp = path + "/terms/" + std::to_string(t);
            const json& term = j["terms"][t];
            r.object(term, tp, {"support", "matrix"});
            if (!term.contains("support") || !term["support"].is_array())
                r.fail(tp, "term needs a \"support\" array");
            std::vector<int> sites;
            for (const auto& s : term["support"]) {
                if (!s.is_number_integer()) r.fail(tp + "/support", "sites must be integers");
                sites.push_back(s.get<int>());
            }
            if (!term.contains("matrix")) r.fail(tp, "term needs a \"matrix\"");
            CMatrix op = r.at(tp + "/matrix", [&] { return matrix_from_json(term["matrix"]); });
            m.terms.push_back(r.at(tp, [&] { return make_term(std::move(op), sites, m.n); }));
        }
    } else if (j.contains("terms") && m.type != "custom") {
        r.fail(path + "/terms", "\"terms\" is only valid for custom models");
    }
    return m;
}

FlowConfig read_flow(const Reader& r, const json& j, const std::string& path) {
    r.object(j, path,
             {"eta", "epsilon", "max_sweeps", "energy_tol", "patience", "update_order", "seed", "halving",
              "max_halvings", "step_rule", "inner_steps", "schedule", "eta_growth", "metric", "metric_floor", "threads", "cap"});
    FlowConfig f;
    f.eta = r.number(j, path, "eta", f.eta);
    f.epsilon = r.number(j, path, "epsilon", f.epsilon);
    f.max_sweeps = static_cast<int>(r.integer(j, path, "max_sweeps", f.max_sweeps));
    if (j.contains("energy_tol") && j["energy_tol"].is_string()) {
        if (j["energy_tol"] != "inf") r.fail(path + "/energy_tol", "expected a number or \"inf\"");
        f.energy_tol = std::numeric_limits<double>::infinity();
    } else {
        f.energy_tol = r.number(j, path, "energy_tol", f.energy_tol);
    }
    f.patience = static_cast<int>(r.integer(j, path, "patience", f.patience));
    const std::string order = r.text(j, path, "update_order", to_string(f.update_order));
    f.update_order = r.at(path + "/update_order", [&] { return parse_update_order(order); });
    const auto seed = r.integer(j, path, "seed", static_cast<std::int64_t>(f.seed));
    if (seed < 0) r.fail(path + "/seed", "seed must be non-negative");
    f.seed = static_cast<std::uint64_t>(seed);
    f.halving = r.boolean(j, path, "halving", f.halving);
    f.max_halvings = static_cast<int>(r.integer(j, path, "max_halvings", f.max_halvings));
    const std::string rule = r.text(j, path, "step_rule", to_string(f.step_rule));
    f.step_rule = r.at(path + "/step_rule", [&] { return parse_step_rule(rule); });
    f.inner_steps = static_cast<int>(r.integer(j, path, "inner_steps", f.inner_steps));
    const std::string sched = r.text(j, path, "schedule", to_string(f.schedule));
    f.schedule = r.at(path + "/schedule", [&] { return parse_schedule(sched); });
    f.eta_growth = r.number(j, path, "eta_growth", f.eta_growth);
    const std::string metric = r.text(j, path, "metric", to_string(f.metric));
    f.metric = r.at(path + "/metric", [&] { return parse_metric(metric); });
    f.metric_floor = r.number(j, path, "metric_floor", f.metric_floor);
    f.threads = static_cast<int>(r.integer(j, path, "threads", f.threads));
    f.cap = r.integer(j, path, "cap", f.cap);
    r.at(path, [&] {
        f.validate();
        return 0;
    });
    return f;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    int line = 1;
    KeyLines sax(&line);
    const LineCountingIterator first(text.data(), &line);
    const LineCountingIterator last(text.data() + text.size(), &line);
    json::sax_parse(first, last, &sax);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    const Reader r(std::move(sax.lines));
    r.object(root, "", {"model", "ansatz", "flow", "output", "restarts", "reference", "bench", "gradcheck", "oracle"});

    RunConfig cfg;
    cfg.raw = root;
    const bool need_model = !(root.contains("oracle") && !root.contains("model"));
    if (root.contains("model"))
        cfg.model = read_model(r, root["model"], "/model", true);
    else if (need_model)
        r.fail("", "missing key \"model\"");

    if (root.contains("ansatz")) {
        const json& a = r.object(root["ansatz"], "/ansatz", {"type", "d", "file", "init"});
        cfg.ansatz.type = r.text(a, "/ansatz", "type", cfg.ansatz.type);
        if (cfg.ansatz.type != "staircase" && cfg.ansatz.type != "mera" && cfg.ansatz.type != "extended_mera" &&
            cfg.ansatz.type != "custom")
            r.fail("/ansatz/type", "ansatz type must be staircase, mera, extended_mera or custom");
        cfg.ansatz.d = static_cast<int>(r.integer(a, "/ansatz", "d", cfg.ansatz.d));
        if (cfg.ansatz.d < 2) r.fail("/ansatz/d", "d must be at least 2");
        cfg.ansatz.file = r.text(a, "/ansatz", "file", "");
        if (cfg.ansatz.type == "custom" && cfg.ansatz.file.empty())
            r.fail("/ansatz", "custom ansatz needs a \"file\"");
        cfg.ansatz.init = r.text(a, "/ansatz", "init", cfg.ansatz.init);
        if (cfg.ansatz.init != "haar" && cfg.ansatz.init != "identity")
            r.fail("/ansatz/init", "init must be haar or identity");
    }
    if (root.contains("flow")) cfg.flow = read_flow(r, root["flow"], "/flow");

    if (root.contains("output")) {
        const json& o = r.object(root["output"], "/output", {"dir", "timing", "checkpoint_every"});
        cfg.output.dir = r.text(o, "/output", "dir", cfg.output.dir);
        cfg.output.timing = r.boolean(o, "/output", "timing", cfg.output.timing);
        cfg.output.checkpoint_every = static_cast<int>(r.integer(o, "/output", "checkpoint_every", 0));
        if (cfg.output.checkpoint_every < 0) r.fail("/output/checkpoint_every", "must be non-negative");
    }
    cfg.restarts = static_cast<int>(r.integer(root, "", "restarts", 1));
    if (cfg.restarts < 1) r.fail("/restarts", "restarts must be at least 1");
    if (root.contains("reference")) {
        const json& ref = root["reference"];
        if (ref.is_number()) {
            cfg.reference = "value";
            cfg.reference_value = ref.get<double>();
            if (cfg.reference_value == 0.0) r.fail("/reference", "reference energy must be non-zero");
        } else if (ref.is_string() && (ref == "auto" || ref == "none")) {
            cfg.reference = ref.get<std::string>();
        } else {
            r.fail("/reference", "reference must be \"auto\", \"none\" or a number");
        }
    }
    if (root.contains("bench")) {
        const json& b = r.object(root["bench"], "/bench", {"grid", "sweeps", "repeats"});
        if (b.contains("grid")) {
            if (!b["grid"].is_array()) r.fail("/bench/grid", "grid must be an array");
            for (std::size_t i = 0; i < b["grid"].size(); ++i) {
                const std::string p = "/bench/grid/" + std::to_string(i);
                const json& pt = r.object(b["grid"][i], p, {"n", "d"});
                BenchPoint bp;
                bp.n = static_cast<int>(r.integer(pt, p, "n", cfg.model.n));
                bp.d = static_cast<int>(r.integer(pt, p, "d", cfg.ansatz.d));
                if (bp.n < 2 || bp.d < 2) r.fail(p, "n and d must be at least 2");
                cfg.bench.grid.push_back(bp);
            }
        }
        cfg.bench.sweeps = static_cast<int>(r.integer(b, "/bench", "sweeps", cfg.bench.sweeps));
        cfg.bench.repeats = static_cast<int>(r.integer(b, "/bench", "repeats", cfg.bench.repeats));
        if (cfg.bench.sweeps < 1 || cfg.bench.repeats < 1) r.fail("/bench", "sweeps and repeats must be positive");
    }
    if (root.contains("gradcheck")) {
        const json& g = r.object(root["gradcheck"], "/gradcheck", {"samples", "fd_step", "tol", "corrupt"});
        cfg.gradcheck.samples = static_cast<int>(r.integer(g, "/gradcheck", "samples", cfg.gradcheck.samples));
        cfg.gradcheck.fd_step = r.number(g, "/gradcheck", "fd_step", cfg.gradcheck.fd_step);
        cfg.gradcheck.tol = r.number(g, "/gradcheck", "tol", cfg.gradcheck.tol);
        cfg.gradcheck.corrupt = r.boolean(g, "/gradcheck", "corrupt", false);
        if (cfg.gradcheck.samples < 1 || !(cfg.gradcheck.fd_step > 0) || !(cfg.gradcheck.tol > 0))
            r.fail("/gradcheck", "samples, fd_step and tol must be positive");
    }
    if (root.contains("oracle")) {
        const json& o = r.object(root["oracle"], "/oracle", {"cases", "k"});
        cfg.oracle.k = static_cast<int>(r.integer(o, "/oracle", "k", 2));
        if (cfg.oracle.k < 1) r.fail("/oracle/k", "k must be positive");
        if (o.contains("cases")) {
            if (!o["cases"].is_array()) r.fail("/oracle/cases", "cases must be an array");
            for (std::size_t i = 0; i < o["cases"].size(); ++i)
                cfg.oracle.cases.push_back(read_model(r, o["cases"][i], "/oracle/cases/" + std::to_string(i), true));
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

Hamiltonian build_hamiltonian(const ModelConfig& m) {
    if (m.type == "heisenberg") return heisenberg(m.n, m.j, m.boundary);
    if (m.type == "ising") return ising_critical(m.n, m.boundary);
    return custom_hamiltonian(m.n, m.boundary, m.terms);
}

Circuit build_ansatz(const AnsatzConfig& a, int n, Boundary boundary, std::uint64_t seed, std::int64_t cap) {
    std::mt19937_64 rng(seed);
    Circuit c;
    if (a.type == "staircase")
        c = build_staircase(n, a.d, rng, cap);
    else if (a.type == "mera")
        c = build_mera(n, boundary, rng);
    else if (a.type == "extended_mera")
        c = build_extended_mera(n, boundary, rng);
    else if (a.type == "custom")
        c = load_circuit_file(a.file);
    else
        throw InvalidArgument("unknown ansatz type \"" + a.type + "\"");
    if (c.n_spins() != n)
        throw InvalidArgument("ansatz has " + std::to_string(c.n_spins()) + " spins, model has " + std::to_string(n));
    if (a.init == "identity") set_identity(c);
    return c;
}

}  // namespace qflow
