#pragma once

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace lmc {

/// Named worked examples compiled into the binary. `config` follows the
/// RunConfig JSON schema.
struct CatalogEntry {
    std::string name;
    enum class Kind { Diffusion, Jump, Hilbert } kind;
    std::string description;
    nlohmann::json config;
};

const std::vector<CatalogEntry>& catalog();

/// Throws ConfigError for unknown names.
const CatalogEntry& find_preset(std::string_view name);

std::string to_string(CatalogEntry::Kind kind);

}  // namespace lmc
