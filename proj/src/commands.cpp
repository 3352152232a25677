#include "lmc/commands.hpp"

#include "lmc/catalog.hpp"
#include "lmc/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace lmc {

using nlohmann::json;

json json_number(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    if (std::isnan(v)) return "nan";
    return v;
}

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Round-trip precision for CSV cells.
std::string cell(double v) { return fmt(v, "%.17g"); }

json to_json(const MCEstimate& e) {
    return {{"mean", json_number(e.mean)},
            {"std_error", json_number(e.std_error)},
            {"n_effective", e.n_effective},
            {"heavy_tail_flag", e.heavy_tail_flag},
            {"max_sample_share", json_number(e.max_sample_share)}};
}

json to_json(const DeficitCurve& c) {
    json entries = json::array();
    for (const auto& e : c.entries) {
        entries.push_back({{"level", json_number(e.level)},
                           {"cap", json_number(e.cap)},
                           {"survival", json_number(e.survival)},
                           {"std_error", json_number(e.std_error)}});
    }
    return {{"t", c.t},
            {"entries", entries},
            {"extrapolated_expectation", json_number(c.extrapolated_expectation)},
            {"deficit", json_number(c.deficit())},
            {"converged", c.converged},
            {"plan_too_coarse", c.plan_too_coarse},
            {"notes", c.notes}};
}

json to_json(const EndpointIntegral& e) {
    return {{"status", to_string(e.status)},
            {"value", json_number(e.value)},
            {"reason", e.reason},
            {"probes", e.probes},
            {"subdivisions", e.subdivisions},
            {"error_estimate", json_number(e.error_estimate)}};
}

json to_json(const FellerReport& r) {
    return {{"left", to_json(r.left)},
            {"right", to_json(r.right)},
            {"xi", r.xi},
            {"conclusion", to_string(r.conclusion)}};
}

json to_json(const MartingaleVerdict& v) {
    json j = {{"classification", to_string(v.classification)}, {"notes", v.notes}};
    if (v.feller_original) j["feller_original"] = to_json(*v.feller_original);
    if (v.feller_modified) j["feller_modified"] = to_json(*v.feller_modified);
    return j;
}

json to_json(const NovikovReport& r) {
    json means = json::array();
    for (auto [n, m] : r.running_means) means.push_back({{"n", n}, {"mean", json_number(m)}});
    return {{"estimate", to_json(r.estimate)}, {"running_means", means}, {"growing", r.growing}};
}

json to_json(const ConditionsReport& r) {
    json bands = json::array();
    for (const auto& b : r.lipschitz_bands) {
        bands.push_back({{"radius", b.radius}, {"lipschitz", b.lipschitz}, {"samples", b.samples}});
    }
    return {{"lipschitz_bands", bands},
            {"lipschitz_hat", r.lipschitz_hat},
            {"growth_hat", r.growth_hat},
            {"lipschitz_ok", r.lipschitz_ok},
            {"growth_ok", r.growth_ok},
            {"pass", r.pass()},
            {"notes", r.notes}};
}

json to_json(const std::vector<MCEstimate>& per_level, const LocalizationPlan& plan) {
    json out = json::array();
    for (std::size_t i = 0; i < per_level.size(); ++i) {
        json e = to_json(per_level[i]);
        e["level"] = plan.levels[i];
        out.push_back(e);
    }
    return out;
}

std::string curve_csv(const DeficitCurve& c) {
    std::ostringstream out;
    out << "level,cap,survival,std_error\n";
    for (const auto& e : c.entries) {
        out << cell(e.level) << ',' << cell(e.cap) << ',' << cell(e.survival) << ',' << cell(e.std_error) << '\n';
    }
    return out.str();
}

std::string curve_table(const DeficitCurve& c) {
    std::ostringstream out;
    out << "  level        cap   survival   std_error\n";
    for (const auto& e : c.entries) {
        char line[128];
        std::snprintf(line, sizeof line, "%7s %10s %10.5f %11.5f\n", fmt(e.level).c_str(), fmt(e.cap).c_str(),
                      e.survival, e.std_error);
        out << line;
    }
    out << "deficit " << fmt(c.deficit(), "%.5f") << (c.converged ? " (converged)" : " (not converged)") << '\n';
    return out.str();
}

std::string estimate_line(const char* label, const MCEstimate& e) {
    return std::string(label) + " " + fmt(e.mean, "%.6g") + " +/- " + fmt(e.std_error, "%.3g") +
           (e.heavy_tail_flag ? " (heavy tail)" : "") + "\n";
}

const DiffusionSpec& need_diffusion(const RunConfig& c, const char* cmd) {
    if (!c.diffusion) throw ConfigError(std::string(cmd) + ": config needs a diffusion section");
    return *c.diffusion;
}

ExponentSpec need_exponent(const RunConfig& c, const char* cmd) {
    if (!c.exponent) throw ConfigError(std::string(cmd) + ": config needs an exponent section");
    return *c.exponent;
}

const LocalizationPlan& need_plan(const RunConfig& c, const char* cmd) {
    if (!c.plan) throw ConfigError(std::string(cmd) + ": config needs a plan section");
    return *c.plan;
}

json base_report(const std::string& command, const RunConfig& c) {
    return {{"command", command}, {"resolved_config", resolved_json(c)}, {"diagnostics", json::array()},
            {"version", kVersion}};
}

Report cmd_classify(const RunConfig& c) {
    const auto& spec = need_diffusion(c, "classify");
    const auto exp = need_exponent(c, "classify");
    Report r;
    r.json = base_report("classify", c);
    MartingaleVerdict v = martingale_verdict(spec, exp, c.feller);
    std::ostringstream table;
    table << "classification " << to_string(v.classification) << '\n';
    std::ostringstream csv;
    csv << "process,endpoint,status,value\n";
    for (auto [name, rep] : {std::pair{"original", &v.feller_original}, std::pair{"modified", &v.feller_modified}}) {
        if (!*rep) continue;
        const auto& f = **rep;
        table << name << ": " << to_string(f.conclusion) << " (left " << to_string(f.left.status) << ", right "
              << to_string(f.right.status) << ")\n";
        csv << name << ",left," << to_string(f.left.status) << ',' << cell(f.left.value) << '\n';
        csv << name << ",right," << to_string(f.right.status) << ',' << cell(f.right.value) << '\n';
    }
    r.json["verdict"] = to_json(v);
    if (c.with_mc) {
        const auto& plan = need_plan(c, "classify --with-mc");
        auto curve = estimate_deficit_localized(modified_drift(spec, exp), plan, c.t, c.mc);
        auto direct = estimate_mean_direct(spec, exp, c.t, c.mc);
        const Classification mc = classify_curve(curve);
        r.json["curves"] = {{"deficit", to_json(curve)}};
        r.json["estimates"] = {{"direct_mean", to_json(direct)}, {"mc_classification", to_string(mc)}};
        if (mc != v.classification) {
            r.json["diagnostics"].push_back("Monte Carlo classification " + to_string(mc) +
                                            " differs from the Feller verdict");
        }
        table << curve_table(curve) << estimate_line("direct mean", direct);
    }
    r.table = table.str();
    r.csv = csv.str();
    return r;
}

Report cmd_deficit(const RunConfig& c) {
    const auto& spec = need_diffusion(c, "deficit");
    const auto exp = need_exponent(c, "deficit");
    const auto& plan = need_plan(c, "deficit");
    Report r;
    r.json = base_report("deficit", c);
    auto curve = estimate_deficit_localized(modified_drift(spec, exp), plan, c.t, c.mc);
    r.json["curves"] = {{"deficit", to_json(curve)}};
    r.json["verdict"] = {{"classification", to_string(classify_curve(curve))}};
    for (const auto& n : curve.notes) r.json["diagnostics"].push_back(n);
    r.table = curve_table(curve);
    r.csv = curve_csv(curve);
    return r;
}

Report cmd_novikov(const RunConfig& c) {
    const auto& spec = need_diffusion(c, "novikov");
    const auto exp = need_exponent(c, "novikov");
    Report r;
    r.json = base_report("novikov", c);
    auto rep = novikov_estimate(spec, exp, c.t, c.mc);
    r.json["estimates"] = {{"novikov", to_json(rep)}};
    if (rep.estimate.heavy_tail_flag) {
        r.json["diagnostics"].push_back("heavy tail: the Novikov expectation is not reliably finite");
    }
    std::ostringstream csv;
    csv << "n,running_mean\n";
    for (auto [n, m] : rep.running_means) csv << n << ',' << cell(m) << '\n';
    r.csv = csv.str();
    r.table = estimate_line("E exp(1/2 int q)", rep.estimate) + "growing " + (rep.growing ? "yes" : "no") + "\n";
    return r;
}

Report cmd_jump(const RunConfig& c) {
    if (!c.triplet) throw ConfigError("jump: config needs a jump section");
    const auto& plan = need_plan(c, "jump");
    Report r;
    r.json = base_report("jump", c);
    auto v = verdict_jump(*c.triplet, *c.girsanov, c.t, plan, c.mc);
    auto stopped = jump_stopped_means(*c.triplet, *c.girsanov, plan, c.t, c.mc);
    auto comp = verify_compensator_identity(*c.triplet, *c.girsanov, c.mc, c.t, plan.levels.back());
    r.json["verdict"] = to_json(v);
    r.json["curves"] = {{"deficit", to_json(*v.deficit_curve)}};
    r.json["estimates"] = {{"stopped_means", to_json(stopped, plan)},
                           {"compensator",
                            {{"mean_bracket", comp.mean_bracket},
                             {"mean_r", comp.mean_r},
                             {"difference", comp.difference},
                             {"std_error", comp.std_error},
                             {"pass", comp.pass},
                             {"min_jump_n", comp.min_jump_n}}}};
    if (!comp.pass) r.json["diagnostics"].push_back("compensator identity outside 3 standard errors");
    std::ostringstream table, csv;
    table << "classification " << to_string(v.classification) << '\n' << curve_table(*v.deficit_curve);
    csv << "level,survival,survival_se,stopped_mean,stopped_se\n";
    for (std::size_t i = 0; i < plan.levels.size(); ++i) {
        const auto& e = v.deficit_curve->entries[i];
        table << "E Z(t ^ rho_" << i + 1 << ") " << fmt(stopped[i].mean) << " +/- " << fmt(stopped[i].std_error, "%.3g")
              << '\n';
        csv << cell(plan.levels[i]) << ',' << cell(e.survival) << ',' << cell(e.std_error) << ','
            << cell(stopped[i].mean) << ',' << cell(stopped[i].std_error) << '\n';
    }
    table << "compensator difference " << fmt(comp.difference) << " +/- " << fmt(comp.std_error, "%.3g")
          << (comp.pass ? " (pass)" : " (FAIL)") << '\n';
    r.table = table.str();
    r.csv = csv.str();
    return r;
}

Report cmd_hilbert(const RunConfig& c) {
    if (!c.covariance) throw ConfigError("hilbert: config needs a hilbert section");
    const auto& plan = need_plan(c, "hilbert");
    Report r;
    r.json = base_report("hilbert", c);
    auto est = estimate_hilbert_expectation(*c.functional, *c.covariance, c.t, plan, c.mc);
    auto moments = mode_moments(*c.covariance, c.t, c.mc);
    auto nov = hilbert_novikov(*c.functional, *c.covariance, c.t, c.mc);
    r.json["verdict"] = {{"classification", to_string(est.classification)}};
    r.json["curves"] = {{"deficit", to_json(est.curve)}};
    r.json["estimates"] = {{"direct_mean", to_json(est.direct)},
                           {"conditions", to_json(est.conditions)},
                           {"mode_moments",
                            {{"variance_ratio", moments.variance_ratio},
                             {"variance_se", moments.variance_se},
                             {"cross_covariance", moments.cross_covariance},
                             {"cross_se", moments.cross_se}}},
                           {"novikov", to_json(nov)}};
    for (const auto& n : est.notes) r.json["diagnostics"].push_back(n);
    std::ostringstream table, csv;
    table << "classification " << to_string(est.classification) << '\n'
          << estimate_line("E Z_t", est.direct) << "conditions: L-hat " << fmt(est.conditions.lipschitz_hat)
          << ", lambda-hat " << fmt(est.conditions.growth_hat) << (est.conditions.pass() ? " (pass)" : " (FAIL)")
          << '\n'
          << curve_table(est.curve);
    csv << "mode,variance_ratio,variance_se\n";
    for (std::size_t k = 0; k < moments.variance_ratio.size(); ++k) {
        csv << k + 1 << ',' << cell(moments.variance_ratio[k]) << ',' << cell(moments.variance_se[k]) << '\n';
    }
    r.table = table.str();
    r.csv = csv.str();
    return r;
}

}  // namespace

Report run_command(const std::string& command, const RunConfig& config) {
    if (command == "classify") return cmd_classify(config);
    if (command == "deficit") return cmd_deficit(config);
    if (command == "novikov") return cmd_novikov(config);
    if (command == "jump") return cmd_jump(config);
    if (command == "hilbert") return cmd_hilbert(config);
    throw ConfigError("unknown command '" + command + "'");
}

int exit_code_for(const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    if (!err) return 2;
    static const char* validation[] = {"ConfigError",       "ValidationError",  "DimensionMismatch",
                                       "SyntaxError",       "UnknownIdentifier", "IndexOutOfRange",
                                       "PreconditionViolated"};
    for (const char* k : validation) {
        if (err->kind() == k) return 1;
    }
    return 2;
}

json error_report(const std::string& command, const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    return {{"command", command},
            {"error", {{"kind", err ? err->kind() : std::string("InternalError")}, {"message", e.what()}}},
            {"diagnostics", json::array()},
            {"version", kVersion}};
}

Report catalog_report() {
    Report r;
    r.json = {{"command", "catalog"}, {"diagnostics", json::array()}, {"version", kVersion}};
    json entries = json::array();
    std::ostringstream table, csv;
    csv << "name,kind,description\n";
    for (const auto& e : catalog()) {
        entries.push_back({{"name", e.name}, {"kind", to_string(e.kind)}, {"description", e.description},
                           {"config", e.config}});
        char line[256];
        std::snprintf(line, sizeof line, "%-22s %-9s %s\n", e.name.c_str(), to_string(e.kind).c_str(),
                      e.description.c_str());
        table << line;
        csv << e.name << ',' << to_string(e.kind) << ",\"" << e.description << "\"\n";
    }
    r.json["entries"] = entries;
    r.table = table.str();
    r.csv = csv.str();
    return r;
}

}  // namespace lmc
