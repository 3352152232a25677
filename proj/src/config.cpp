#include "lmc/config.hpp"

#include "lmc/errors.hpp"

#include <cmath>
#include <functional>

namespace lmc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

const json* member(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
    }
}

double number(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    fail(path, "expected a number");
}

double finite_number(const json& j, const std::string& path) {
    double v = number(j, path);
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
}

std::uint64_t count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(path, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Expr expression(const json& j, const std::string& path) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    try {
        return Expr::parse(text(j, path));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

template <class T, class F>
std::vector<T> array(const json& j, const std::string& path, F&& item) {
    if (!j.is_array()) fail(path, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<double> numbers(const json& j, const std::string& path) { return array<double>(j, path, finite_number); }
std::vector<Expr> expressions(const json& j, const std::string& path) { return array<Expr>(j, path, expression); }

// Module validation errors are reported against the section that failed.
void checked(const std::string& path, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

DiscreteLaw law(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown(j, path, {"support", "probs"});
    DiscreteLaw l;
    if (auto s = member(j, "support")) l.support = numbers(*s, path + ".support");
    if (auto p = member(j, "probs")) l.probs = numbers(*p, path + ".probs");
    return l;
}

DiffusionSpec diffusion(const json& j) {
    const std::string path = "diffusion";
    require_object(j, path);
    reject_unknown(j, path, {"interval", "drift", "dispersion", "x0"});
    DiffusionSpec s;
    auto need = [&](const char* key) -> const json& {
        auto m = member(j, key);
        if (!m) fail(path + "." + key, "missing");
        return *m;
    };
    s.drift = expressions(need("drift"), path + ".drift");
    s.dispersion = expressions(need("dispersion"), path + ".dispersion");
    s.x0 = numbers(need("x0"), path + ".x0");
    if (auto iv = member(j, "interval")) {
        s.interval = array<Interval>(*iv, path + ".interval", [](const json& e, const std::string& p) {
            if (!e.is_array() || e.size() != 2) fail(p, "expected [lower, upper]");
            return Interval{number(e[0], p + "[0]"), number(e[1], p + "[1]")};
        });
    } else {
        s.interval.assign(s.drift.size(), Interval{});
    }
    checked(path, [&] { validate(s); });
    return s;
}

FunctionalSpec functional(const json& j, std::size_t modes) {
    const std::string path = "hilbert.functional";
    require_object(j, path);
    reject_unknown(j, path, {"kind", "mode", "weights", "direction", "exprs", "claimed_lipschitz", "claimed_growth"});
    FunctionalSpec phi;
    const std::string kind = member(j, "kind") ? text(j["kind"], path + ".kind") : "running_sup";
    if (kind == "running_sup") {
        if (auto m = member(j, "mode")) {
            const auto k = count(*m, path + ".mode");
            if (k < 1 || k > modes) fail(path + ".mode", "must lie in 1.." + std::to_string(modes));
            phi = running_sup_of_mode(modes, k - 1);
        } else {
            if (!member(j, "weights") || !member(j, "direction")) {
                fail(path, "running_sup needs `mode` or both `weights` and `direction`");
            }
            phi.kind = FunctionalSpec::Kind::RunningSup;
            phi.weights = numbers(j["weights"], path + ".weights");
            phi.direction = numbers(j["direction"], path + ".direction");
        }
    } else if (kind == "pointwise") {
        phi.kind = FunctionalSpec::Kind::Pointwise;
        if (!member(j, "exprs")) fail(path + ".exprs", "missing");
        phi.pointwise = expressions(j["exprs"], path + ".exprs");
    } else {
        fail(path + ".kind", "expected \"running_sup\" or \"pointwise\"");
    }
    if (auto c = member(j, "claimed_lipschitz")) phi.claimed_lipschitz = finite_number(*c, path + ".claimed_lipschitz");
    if (auto c = member(j, "claimed_growth")) phi.claimed_growth = finite_number(*c, path + ".claimed_growth");
    return phi;
}

json interval_end(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    return v;
}

json rendered(const std::vector<Expr>& es) {
    json out = json::array();
    for (const auto& e : es) out.push_back(e.render());
    return out;
}

json law_json(const DiscreteLaw& l) { return {{"support", l.support}, {"probs", l.probs}}; }

}  // namespace

json merge_json(json base, const json& patch) {
    if (!base.is_object() || !patch.is_object()) return patch;
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key())) base[it.key()] = merge_json(base[it.key()], it.value());
        else base[it.key()] = it.value();
    }
    return base;
}

RunConfig parse_config(const json& j) {
    require_object(j, "config");
    reject_unknown(j, "", {"preset", "t", "diffusion", "exponent", "jump", "hilbert", "mc", "plan", "feller",
                           "with_mc", "output"});
    RunConfig c;
    if (auto p = member(j, "preset")) c.preset = text(*p, "preset");
    if (auto t = member(j, "t")) c.t = finite_number(*t, "t");
    if (!(c.t > 0.0)) fail("t", "must be positive");

    if (auto m = member(j, "mc")) {
        require_object(*m, "mc");
        reject_unknown(*m, "mc", {"n_paths", "dt_max", "horizon", "seed", "adaptive", "bridge_correction",
                                  "explosion_guard", "threads"});
        auto& s = c.mc;
        if (auto v = member(*m, "n_paths")) s.n_paths = count(*v, "mc.n_paths");
        if (auto v = member(*m, "dt_max")) s.dt_max = finite_number(*v, "mc.dt_max");
        if (auto v = member(*m, "horizon")) s.horizon = finite_number(*v, "mc.horizon");
        else s.horizon = std::max(s.horizon, c.t);
        if (auto v = member(*m, "seed")) s.seed = count(*v, "mc.seed");
        if (auto v = member(*m, "adaptive")) s.adaptive = boolean(*v, "mc.adaptive");
        if (auto v = member(*m, "bridge_correction")) s.bridge_correction = boolean(*v, "mc.bridge_correction");
        if (auto v = member(*m, "explosion_guard")) s.explosion_guard = number(*v, "mc.explosion_guard");
        if (auto v = member(*m, "threads")) s.threads = static_cast<unsigned>(count(*v, "mc.threads"));
    } else {
        c.mc.horizon = std::max(c.mc.horizon, c.t);
    }
    checked("mc", [&] { validate(c.mc); });
    if (c.t > c.mc.horizon) fail("t", "exceeds mc.horizon");

    if (auto d = member(j, "diffusion")) c.diffusion = diffusion(*d);
    if (auto e = member(j, "exponent")) {
        require_object(*e, "exponent");
        reject_unknown(*e, "exponent", {"beta"});
        if (!member(*e, "beta")) fail("exponent.beta", "missing");
        c.exponent = ExponentSpec{expressions((*e)["beta"], "exponent.beta")};
        if (!c.diffusion) fail("exponent", "needs a diffusion section");
        if (c.exponent->beta.size() != c.diffusion->dim()) {
            fail("exponent.beta", "needs one entry per coordinate");
        }
        for (std::size_t i = 0; i < c.exponent->beta.size(); ++i) {
            if (static_cast<std::size_t>(c.exponent->beta[i].max_coordinate()) > c.diffusion->dim()) {
                fail("exponent.beta[" + std::to_string(i) + "]", "references a coordinate beyond dim");
            }
        }
    }
    if (auto p = member(j, "plan")) {
        require_object(*p, "plan");
        reject_unknown(*p, "plan", {"levels", "time_caps"});
        LocalizationPlan plan;
        if (auto v = member(*p, "levels")) plan.levels = numbers(*v, "plan.levels");
        if (auto v = member(*p, "time_caps")) plan.time_caps = numbers(*v, "plan.time_caps");
        else plan.time_caps.assign(plan.levels.size(), c.mc.horizon);
        checked("plan", [&] { validate(plan); });
        if (!(plan.levels.back() < c.mc.explosion_guard)) {
            fail("mc.explosion_guard", "must exceed the largest plan level");
        }
        c.plan = plan;
    }
    if (auto f = member(j, "feller")) {
        require_object(*f, "feller");
        reject_unknown(*f, "feller", {"xi", "gate_on_grid_checks", "grid_radius"});
        if (auto v = member(*f, "xi")) c.feller.xi = finite_number(*v, "feller.xi");
        if (auto v = member(*f, "gate_on_grid_checks")) c.feller.gate_on_grid_checks = boolean(*v, "feller.gate_on_grid_checks");
        if (auto v = member(*f, "grid_radius")) c.feller.grid_radius = finite_number(*v, "feller.grid_radius");
        if (!(c.feller.grid_radius > 0.0)) fail("feller.grid_radius", "must be positive");
    }
    if (auto jm = member(j, "jump")) {
        const std::string path = "jump";
        require_object(*jm, path);
        reject_unknown(*jm, path, {"rate", "law", "atoms", "K", "U"});
        if (!c.diffusion) fail(path, "needs a diffusion section as its base");
        JumpTriplet trip;
        trip.base = *c.diffusion;
        if (auto v = member(*jm, "rate")) trip.rate = finite_number(*v, path + ".rate");
        if (auto v = member(*jm, "law")) trip.jump_law = law(*v, path + ".law");
        if (auto v = member(*jm, "atoms")) {
            trip.atoms = array<Atom>(*v, path + ".atoms", [](const json& a, const std::string& p) {
                require_object(a, p);
                reject_unknown(a, p, {"time", "mass", "law"});
                Atom atom;
                if (!member(a, "time") || !member(a, "mass") || !member(a, "law")) fail(p, "needs time, mass and law");
                atom.time = finite_number(a["time"], p + ".time");
                atom.mass = finite_number(a["mass"], p + ".mass");
                atom.law = law(a["law"], p + ".law");
                return atom;
            });
        }
        GirsanovData gd{Expr::constant(0.0), Expr::constant(1.0)};
        if (auto v = member(*jm, "K")) gd.K = expression(*v, path + ".K");
        if (auto v = member(*jm, "U")) gd.U = expression(*v, path + ".U");
        checked(path, [&] { validate(trip, gd); });
        c.triplet = std::move(trip);
        c.girsanov = std::move(gd);
    }
    if (auto h = member(j, "hilbert")) {
        require_object(*h, "hilbert");
        reject_unknown(*h, "hilbert", {"eigenvalues", "functional"});
        CovarianceSpec cov;
        if (!member(*h, "eigenvalues")) fail("hilbert.eigenvalues", "missing");
        cov.eigenvalues = numbers((*h)["eigenvalues"], "hilbert.eigenvalues");
        checked("hilbert.eigenvalues", [&] { validate(cov); });
        if (!member(*h, "functional")) fail("hilbert.functional", "missing");
        auto phi = functional((*h)["functional"], cov.modes());
        checked("hilbert.functional", [&] { (void)validate(phi, cov); });
        c.covariance = std::move(cov);
        c.functional = std::move(phi);
    }
    if (auto v = member(j, "with_mc")) c.with_mc = boolean(*v, "with_mc");
    if (auto o = member(j, "output")) {
        require_object(*o, "output");
        reject_unknown(*o, "output", {"path", "format"});
        if (auto v = member(*o, "path")) c.output_path = text(*v, "output.path");
        if (auto v = member(*o, "format")) {
            const auto f = text(*v, "output.format");
            if (f == "json") c.format = OutputFormat::Json;
            else if (f == "csv") c.format = OutputFormat::Csv;
            else fail("output.format", "expected \"json\" or \"csv\"");
        }
    }
    return c;
}

json resolved_json(const RunConfig& c) {
    json j;
    if (!c.preset.empty()) j["preset"] = c.preset;
    j["t"] = c.t;
    j["mc"] = {{"n_paths", c.mc.n_paths},
               {"dt_max", c.mc.dt_max},
               {"horizon", c.mc.horizon},
               {"seed", c.mc.seed},
               {"adaptive", c.mc.adaptive},
               {"bridge_correction", c.mc.bridge_correction},
               {"explosion_guard", interval_end(c.mc.explosion_guard)}};
    if (c.diffusion) {
        json iv = json::array();
        for (const auto& i : c.diffusion->interval) iv.push_back({interval_end(i.lower), interval_end(i.upper)});
        j["diffusion"] = {{"interval", iv},
                          {"drift", rendered(c.diffusion->drift)},
                          {"dispersion", rendered(c.diffusion->dispersion)},
                          {"x0", c.diffusion->x0}};
    }
    if (c.exponent) j["exponent"] = {{"beta", rendered(c.exponent->beta)}};
    if (c.plan) j["plan"] = {{"levels", c.plan->levels}, {"time_caps", c.plan->time_caps}};
    json f = {{"gate_on_grid_checks", c.feller.gate_on_grid_checks}, {"grid_radius", c.feller.grid_radius}};
    if (c.feller.xi) f["xi"] = *c.feller.xi;
    j["feller"] = f;
    if (c.triplet) {
        json atoms = json::array();
        for (const auto& a : c.triplet->atoms) atoms.push_back({{"time", a.time}, {"mass", a.mass}, {"law", law_json(a.law)}});
        j["jump"] = {{"rate", c.triplet->rate},
                     {"law", law_json(c.triplet->jump_law)},
                     {"atoms", atoms},
                     {"K", c.girsanov->K.render()},
                     {"U", c.girsanov->U.render()}};
    }
    if (c.covariance) {
        const auto& phi = *c.functional;
        json fj;
        if (phi.kind == FunctionalSpec::Kind::RunningSup) {
            fj = {{"kind", "running_sup"}, {"weights", phi.weights}, {"direction", phi.direction}};
        } else {
            fj = {{"kind", "pointwise"}, {"exprs", rendered(phi.pointwise)}};
        }
        if (phi.claimed_lipschitz) fj["claimed_lipschitz"] = *phi.claimed_lipschitz;
        if (phi.claimed_growth) fj["claimed_growth"] = *phi.claimed_growth;
        j["hilbert"] = {{"eigenvalues", c.covariance->eigenvalues}, {"functional", fj}};
    }
    j["with_mc"] = c.with_mc;
    j["output"] = {{"format", c.format == OutputFormat::Json ? "json" : "csv"}};
    return j;
}

}  // namespace lmc
