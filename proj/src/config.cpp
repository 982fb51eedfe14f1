#include "vdamp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw InvalidInput(msg);
    }
}

// Typos in optional keys would otherwise silently fall back to defaults.
void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    require(j.is_object(), where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        require(allowed.count(key) == 1, where + ": unknown key '" + key + "'");
    }
}

const json& field(const json& j, const char* key, const std::string& where) {
    require(j.contains(key), where + ": missing key '" + key + "'");
    return j.at(key);
}

double real(const json& j, const std::string& what) {
    require(j.is_number(), what + ": expected a number");
    const double x = j.get<double>();
    require(std::isfinite(x), what + ": expected a finite number");
    return x;
}

Vector vector_of(const json& j, const std::string& what) {
    require(j.is_array(), what + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = real(j[i], what);
    }
    return v;
}

// Row-major nested arrays.
Matrix matrix_of(const json& j, const std::string& what) {
    require(j.is_array() && !j.empty(), what + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    require(cols > 0, what + ": rows must be non-empty arrays");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        require(j[r].is_array() && j[r].size() == cols, what + ": ragged matrix");
        m.row(static_cast<Eigen::Index>(r)) = vector_of(j[r], what).transpose();
    }
    return m;
}

std::pair<std::vector<double>, std::vector<double>> read_knot_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "tabulated damping: cannot open " + path.string());
    std::vector<double> t;
    std::vector<double> g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream row(line);
        std::string a;
        std::string b;
        require(std::getline(row, a, ',') && std::getline(row, b), "tabulated damping: line " +
                                                                         std::to_string(lineno) +
                                                                         " is not 't,gamma'");
        try {
            const double tv = std::stod(a);
            const double gv = std::stod(b);
            t.push_back(tv);
            g.push_back(gv);
        } catch (const std::logic_error&) {
            // A non-numeric first row is a header.
            require(lineno == 1 && t.empty(),
                    "tabulated damping: non-numeric value on line " + std::to_string(lineno));
        }
    }
    return {std::move(t), std::move(g)};
}

} // namespace

void ScenarioConfig::validate() const {
    require(!id.empty(), "scenario: id must be non-empty");
    require(t0 > 0.0 && std::isfinite(t0), "scenario: t0 must be positive");
    require(T > t0 && std::isfinite(T), "scenario: T must exceed t0");
    require(rel_tol > 0.0 && abs_tol > 0.0, "scenario: tolerances must be positive");
    require(x0.size() == potential.dim() && v0.size() == potential.dim(),
            "scenario: x0 and v0 must match the potential dimension");
    require(x0.allFinite() && v0.allFinite(), "scenario: initial data must be finite");
    require(points_per_decade > 0, "scenario: points_per_decade must be positive");
    require(decay_window > 0.0 && decay_window <= 1.0, "scenario: decay_window must lie in (0, 1]");
    require(opial_window > 0.0 && opial_window <= 1.0, "scenario: opial_window must lie in (0, 1]");
    require(damping.t0() == t0, "scenario: damping and scenario t0 differ");
    if (anchors) {
        for (const Vector& a : *anchors) {
            require(a.size() == potential.dim(), "scenario: anchor dimension mismatch");
        }
    }
}

PotentialSpec parse_potential(const json& j) {
    const std::string where = "potential";
    const std::string kind = field(j, "kind", where).get<std::string>();
    if (kind == "quadratic") {
        reject_unknown_keys(j, {"kind", "A", "b"}, where);
        return PotentialSpec::quadratic(matrix_of(field(j, "A", where), "potential.A"),
                                        vector_of(field(j, "b", where), "potential.b"));
    }
    if (kind == "least_squares") {
        reject_unknown_keys(j, {"kind", "M", "y"}, where);
        return PotentialSpec::least_squares(matrix_of(field(j, "M", where), "potential.M"),
                                            vector_of(field(j, "y", where), "potential.y"));
    }
    if (kind == "log_sum_exp") {
        reject_unknown_keys(j, {"kind", "rows", "offsets"}, where);
        return PotentialSpec::log_sum_exp(matrix_of(field(j, "rows", where), "potential.rows"),
                                          vector_of(field(j, "offsets", where), "potential.offsets"));
    }
    if (kind == "huber") {
        reject_unknown_keys(j, {"kind", "delta", "center"}, where);
        return PotentialSpec::huber(real(field(j, "delta", where), "potential.delta"),
                                    vector_of(field(j, "center", where), "potential.center"));
    }
    if (kind == "zero") {
        reject_unknown_keys(j, {"kind", "dim"}, where);
        const json& dim = field(j, "dim", where);
        require(dim.is_number_integer(), "potential.dim: expected an integer");
        return PotentialSpec::zero(dim.get<Eigen::Index>());
    }
    throw InvalidInput("potential: unknown kind '" + kind + "'");
}

DampingSpec parse_damping(const json& j, double t0, const std::filesystem::path& base_dir) {
    const std::string where = "damping";
    const std::string kind = field(j, "kind", where).get<std::string>();
    if (kind == "over_t") {
        reject_unknown_keys(j, {"kind", "K", "t0"}, where);
        return DampingSpec::over_t(real(field(j, "K", where), "damping.K"), t0);
    }
    if (kind == "shifted") {
        reject_unknown_keys(j, {"kind", "K", "a", "t0"}, where);
        return DampingSpec::shifted(real(field(j, "K", where), "damping.K"), real(field(j, "a", where), "damping.a"),
                                    t0);
    }
    if (kind == "power_law") {
        reject_unknown_keys(j, {"kind", "K", "alpha", "t0"}, where);
        return DampingSpec::power_law(real(field(j, "K", where), "damping.K"),
                                      real(field(j, "alpha", where), "damping.alpha"), t0);
    }
    if (kind == "tabulated") {
        reject_unknown_keys(j, {"kind", "t", "gamma", "csv", "t0"}, where);
        std::vector<double> t;
        std::vector<double> g;
        if (j.contains("csv")) {
            require(!j.contains("t") && !j.contains("gamma"), "damping: give either csv or t/gamma, not both");
            std::filesystem::path csv = j.at("csv").get<std::string>();
            std::tie(t, g) = read_knot_csv(csv.is_absolute() ? csv : base_dir / csv);
        } else {
            const Vector tv = vector_of(field(j, "t", where), "damping.t");
            const Vector gv = vector_of(field(j, "gamma", where), "damping.gamma");
            t.assign(tv.data(), tv.data() + tv.size());
            g.assign(gv.data(), gv.data() + gv.size());
        }
        return DampingSpec::tabulated(std::move(t), std::move(g), t0);
    }
    throw InvalidInput("damping: unknown kind '" + kind + "'");
}

ScenarioConfig parse_scenario(const json& j, const std::filesystem::path& base_dir) {
    const std::string where = "scenario";
    reject_unknown_keys(j,
                        {"id", "potential", "damping", "x0", "v0", "t0", "T", "rel_tol", "abs_tol", "anchors",
                         "schedule", "decay_window", "opial_window", "output_dir"},
                        where);
    ScenarioConfig cfg;
    cfg.id = field(j, "id", where).get<std::string>();
    cfg.t0 = j.contains("t0") ? real(j.at("t0"), "t0") : 1.0;
    cfg.T = j.contains("T") ? real(j.at("T"), "T") : 1e4;
    cfg.potential = parse_potential(field(j, "potential", where));
    const json& damping = field(j, "damping", where);
    if (damping.contains("t0")) {
        require(real(damping.at("t0"), "damping.t0") == cfg.t0, "damping.t0 disagrees with the scenario t0");
    }
    cfg.damping = parse_damping(damping, cfg.t0, base_dir);
    cfg.x0 = vector_of(field(j, "x0", where), "x0");
    cfg.v0 = vector_of(field(j, "v0", where), "v0");
    if (j.contains("rel_tol")) {
        cfg.rel_tol = real(j.at("rel_tol"), "rel_tol");
    }
    if (j.contains("abs_tol")) {
        cfg.abs_tol = real(j.at("abs_tol"), "abs_tol");
    }
    if (j.contains("anchors")) {
        const json& a = j.at("anchors");
        if (a.is_string()) {
            require(a.get<std::string>() == "auto", "anchors: expected \"auto\" or a list of vectors");
        } else {
            require(a.is_array(), "anchors: expected \"auto\" or a list of vectors");
            std::vector<Vector> list;
            for (const json& item : a) {
                list.push_back(vector_of(item, "anchors"));
            }
            cfg.anchors = std::move(list);
        }
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        reject_unknown_keys(s, {"points_per_decade"}, "schedule");
        if (s.contains("points_per_decade")) {
            require(s.at("points_per_decade").is_number_integer(), "schedule.points_per_decade: expected an integer");
            cfg.points_per_decade = s.at("points_per_decade").get<int>();
        }
    }
    if (j.contains("decay_window")) {
        cfg.decay_window = real(j.at("decay_window"), "decay_window");
    }
    if (j.contains("opial_window")) {
        cfg.opial_window = real(j.at("opial_window"), "opial_window");
    }
    cfg.output_dir = j.contains("output_dir") ? std::filesystem::path(j.at("output_dir").get<std::string>())
                                              : std::filesystem::path("out") / cfg.id;
    cfg.validate();
    return cfg;
}

namespace {

json read_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    require(in.good(), "cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(file.string() + ": " + e.what());
    }
}

} // namespace

ScenarioConfig load_scenario(const std::filesystem::path& file) {
    try {
        return parse_scenario(read_json(file), file.parent_path());
    } catch (const json::exception& e) {
        throw InvalidInput(file.string() + ": " + e.what());
    }
}

DampingSpec load_damping(const std::filesystem::path& file) {
    const json j = read_json(file);
    try {
        const double t0 = j.contains("t0") ? real(j.at("t0"), "damping.t0") : 1.0;
        return parse_damping(j, t0, file.parent_path());
    } catch (const json::exception& e) {
        throw InvalidInput(file.string() + ": " + e.what());
    }
}

std::vector<Vector> resolve_anchors(const ScenarioConfig& cfg) {
    if (cfg.anchors) {
        return *cfg.anchors;
    }
    std::vector<Vector> out;
    const auto& p = cfg.potential;
    if (p.argmin_witness()) {
        out.push_back(*p.argmin_witness());
    }
    if (const auto& aff = p.argmin_affine()) {
        for (Eigen::Index k = 0; k < aff->basis.cols(); ++k) {
            out.push_back(aff->basepoint + aff->basis.col(k));
            out.push_back(aff->basepoint - aff->basis.col(k));
        }
        if (!p.argmin_witness()) {
            out.insert(out.begin(), aff->basepoint);
        }
    }
    return out;
}

} // namespace vdamp
