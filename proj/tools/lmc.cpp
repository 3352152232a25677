#include "lmc/acceptance.hpp"
#include "lmc/catalog.hpp"
#include "lmc/commands.hpp"
#include "lmc/config.hpp"
#include "lmc/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Flags {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string output;
    std::string format;
    bool with_mc = false;
    bool quiet = false;
    std::vector<int> criteria;
};

lmc::RunConfig load(const Flags& f) {
    nlohmann::json j = nlohmann::json::object();
    if (!f.preset.empty()) j = lmc::find_preset(f.preset).config;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw lmc::ConfigError("--config: cannot open " + f.config_path);
        nlohmann::json file;
        try {
            file = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw lmc::ConfigError("--config: " + std::string(e.what()));
        }
        if (file.is_object() && file.contains("preset") && f.preset.empty()) {
            j = lmc::find_preset(file["preset"].get<std::string>()).config;
        }
        j = lmc::merge_json(j, file);
    }
    if (f.seed) j["mc"]["seed"] = *f.seed;
    if (f.with_mc) j["with_mc"] = true;
    if (!f.output.empty()) j["output"]["path"] = f.output;
    if (!f.format.empty()) j["output"]["format"] = f.format;
    auto c = lmc::parse_config(j);
    if (f.threads) c.mc.threads = *f.threads;
    return c;
}

void emit(const lmc::Report& r, const lmc::RunConfig* c, bool quiet) {
    const bool csv = c && c->format == lmc::OutputFormat::Csv;
    const std::string body = csv ? r.csv : r.json.dump(2) + "\n";
    const std::string path = c ? c->output_path : std::string();
    if (path.empty()) {
        std::cout << body;
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw lmc::ConfigError("--output: cannot write " + path);
        out << body;
    }
    if (!quiet) std::cerr << r.table;
}

int run(const std::string& command, const Flags& f) {
    try {
        if (command == "catalog") {
            emit(lmc::catalog_report(), nullptr, f.quiet);
            return 0;
        }
        const auto config = load(f);
        emit(lmc::run_command(command, config), &config, f.quiet);
        return 0;
    } catch (const std::exception& e) {
        std::cout << lmc::error_report(command, e).dump(2) << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return lmc::exit_code_for(e);
    }
}

int selftest(const Flags& f) {
    lmc::AcceptanceOptions opts;
    opts.threads = f.threads.value_or(0);
    opts.criteria = f.criteria;
    bool ok = true;
    lmc::run_acceptance(opts, [&](const lmc::CriterionResult& r) {
        std::cout << lmc::format_result(r) << std::endl;
        if (!f.quiet) {
            for (const auto& d : r.details) std::cout << "    " << d << "\n";
        }
        ok = ok && r.pass;
    });
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Martingale tests for stochastic exponentials: Feller's test, localized Monte Carlo deficits, "
                 "jump kit and Hilbert-space case study"};
    app.require_subcommand(1);
    Flags f;
    auto common = [&](CLI::App* sub, bool analysis) {
        sub->add_option("--threads", f.threads, "worker threads (0 = all cores); never changes results");
        sub->add_flag("--quiet", f.quiet, "suppress the human-readable table on stderr");
        if (!analysis) return;
        sub->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--preset", f.preset, "catalog entry to start from");
        sub->add_option("--seed", f.seed, "Monte Carlo seed");
        sub->add_option("--output", f.output, "write the report here instead of stdout");
        sub->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        sub->add_flag("--with-mc", f.with_mc, "attach the Monte Carlo cross-check (classify)");
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"classify", "Feller-based martingale verdict for a 1-d diffusion"},
        {"deficit", "localized Monte Carlo deficit curve"},
        {"novikov", "Monte Carlo estimate of the Novikov expectation"},
        {"jump", "jump-diffusion verdict, stopped means and compensator check"},
        {"hilbert", "Q-Brownian case study: conditions, E Z_t and deficit"},
    };
    for (const auto& [name, help] : commands) common(app.add_subcommand(name, help), true);
    auto* cat = app.add_subcommand("catalog", "list the compiled-in presets");
    common(cat, false);
    cat->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    auto* st = app.add_subcommand("selftest", "run the acceptance suite");
    common(st, false);
    st->add_option("--criteria", f.criteria, "subset of criteria (1-9)")->check(CLI::Range(1, 9));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "selftest") return selftest(f);
    if (command == "catalog" && f.format == "csv") {
        std::cout << lmc::catalog_report().csv;
        return 0;
    }
    return run(command, f);
}
